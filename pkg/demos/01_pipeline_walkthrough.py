"""Walk one synthetic session through the full processing pipeline.

Stages: parse -> rescale -> per-finding window -> density clustering ->
region refinement (heatmap, centroid, box) -> attention videos.  Prints
what each stage produced and compares against the generator's ground
truth.  Outputs land in ./demo_output/pipeline/.
"""
from pathlib import Path

import numpy as np

from gazeforge import attnvideo, cluster, heatmap, ingest, synth

OUT = Path("demo_output/pipeline")
OUT.mkdir(parents=True, exist_ok=True)

session, truth = synth.generate_dataset(1, seed=2024)[0]
print(f"case {session.case_id}: {len(session.fixations)} fixations, "
      f"{len(session.findings)} findings, image {session.image_width}x{session.image_height}")

session = ingest.rescale(session, 4)
print(f"rescaled by 4 -> {session.image_width}x{session.image_height} "
      f"(area 1/16 of the original)")

finding_videos = []
for idx, mention in enumerate(session.findings):
    window = ingest.window_fixations(session, mention, window_s=2.5)
    regions, n_noise = cluster.cluster_fixations(window, session.geometry)
    planted = truth["findings"][idx]
    print(f"\nfinding {idx} ({mention.text!r}):")
    print(f"  {len(window)} fixations in the 2.5 s window before t={mention.t_mention:.2f}s")
    print(f"  clustering: {len(regions)} region(s), {n_noise} noise point(s) "
          f"(planted: {len(planted['clusters'])} cluster(s), {planted['n_noise']} noise)")
    for k, region in enumerate(regions):
        cx, cy = region.centroid
        tx, ty = (v / 4 for v in planted["clusters"][k]["center_full"])
        err = np.hypot(cx - tx, cy - ty)
        print(f"    region {k}: centroid ({cx:6.1f},{cy:6.1f}) px, "
              f"box {tuple(region.bbox)}, planted center error {err:.2f} px")
    if regions:
        video = attnvideo.build_finding_video(regions, finding_index=idx)
        finding_videos.append(video)
        print(f"  video: {len(video.frames)} frames "
              f"({len(regions)} cluster frame(s) + 1 summary)")

summary = attnvideo.build_summary_video(finding_videos)
ks = [len(v.frames) - 1 for v in finding_videos]
print(f"\nsummary video: {len(summary.frames)} frames "
      f"= sum of (K+1) over findings with K = {ks}")

attnvideo.write_video(OUT, "summary", summary)
heatmap.to_png(OUT / "summary_last_frame.png", summary.frames[-1])
print(f"wrote frame grids + manifest + preview PNG under {OUT}/")
