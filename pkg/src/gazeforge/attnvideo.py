"""Attention videos and the training records derived from them.

A finding with K regions yields K+1 frames: one per region in temporal
order plus a summary frame holding the elementwise maximum of the region
frames (max rather than sum, so overlapping regions do not saturate).
Per-finding videos concatenate, in finding order, into a session-level
summary video of ``sum_i (K_i + 1)`` frames.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from PIL import Image

from . import heatmap
from .cluster import GazeCluster
from .types import BBox, GazeSession

log = logging.getLogger(__name__)

CLUSTER_FRAME = "cluster"
SUMMARY_FRAME = "summary"


@dataclass(frozen=True)
class AttentionVideo:
    frames: tuple[np.ndarray, ...]
    frame_kind: tuple[str, ...]
    finding_index: Optional[int] = None

    def __post_init__(self) -> None:
        if len(self.frames) != len(self.frame_kind):
            raise ValueError("frames and frame_kind lengths differ")


class ClusterRef(NamedTuple):
    centroid: tuple[float, float]
    bbox: BBox


@dataclass(frozen=True)
class FvpRecord:
    """A finding paired with its region centroids and boxes."""

    finding_text: str
    clusters: tuple[ClusterRef, ...]
    case_id: str

    def __post_init__(self) -> None:
        if not self.clusters:
            raise ValueError("FvpRecord needs at least one cluster")


@dataclass(frozen=True)
class SdaRecord:
    """A frame-order permutation task: shuffled indices plus their inverse."""

    shuffled_frame_indices: tuple[int, ...]
    correct_order: tuple[int, ...]
    video_ref: str

    def __post_init__(self) -> None:
        p, q = self.shuffled_frame_indices, self.correct_order
        if sorted(p) != list(range(len(p))) or len(p) != len(q):
            raise ValueError("shuffled_frame_indices is not a permutation")
        if any(p[q[i]] != i for i in range(len(p))):
            raise ValueError("correct_order is not the inverse permutation")


def build_finding_video(
    clusters: Sequence[GazeCluster], finding_index: Optional[int] = None
) -> AttentionVideo:
    """K cluster frames in temporal order plus one summary frame."""
    if not clusters:
        raise ValueError("no clusters for finding")
    frames = [c.values for c in clusters]
    summary = frames[0].copy()
    for f in frames[1:]:
        np.maximum(summary, f, out=summary)
    return AttentionVideo(
        frames=tuple(frames) + (summary,),
        frame_kind=(CLUSTER_FRAME,) * len(frames) + (SUMMARY_FRAME,),
        finding_index=finding_index,
    )


def build_summary_video(finding_videos: Sequence[AttentionVideo]) -> AttentionVideo:
    """Concatenate per-finding videos in finding order."""
    if not finding_videos:
        raise ValueError("need at least one finding video")
    frames: list[np.ndarray] = []
    kinds: list[str] = []
    for v in finding_videos:
        frames.extend(v.frames)
        kinds.extend(v.frame_kind)
    return AttentionVideo(frames=tuple(frames), frame_kind=tuple(kinds))


def shuffle_for_sda(video: AttentionVideo, seed: int, video_ref: str = "") -> SdaRecord:
    """Seeded non-identity permutation of the video's frame order."""
    n = len(video.frames)
    if n < 2:
        raise ValueError(f"need at least 2 frames to shuffle, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    while (perm == np.arange(n)).all():
        perm = rng.permutation(n)
    inverse = np.argsort(perm)
    return SdaRecord(
        shuffled_frame_indices=tuple(int(i) for i in perm),
        correct_order=tuple(int(i) for i in inverse),
        video_ref=video_ref,
    )


def apply_frame_order(
    frames: Sequence[np.ndarray], order: Sequence[int]
) -> list[np.ndarray]:
    """Reorder frames so position k shows ``frames[order[k]]``."""
    return [frames[i] for i in order]


def emit_fvp_pairs(
    session: GazeSession, regions: Sequence[Sequence[GazeCluster]]
) -> list[FvpRecord]:
    """One record per finding that produced at least one region.

    Centroids and boxes are copied verbatim from the regions.  Findings
    with no region are skipped with a warning.
    """
    records = []
    for idx, (mention, clusters) in enumerate(zip(session.findings, regions)):
        if not clusters:
            log.warning(
                "%s/%s finding %d: no clusters, skipping",
                session.case_id,
                session.reader_id,
                idx,
            )
            continue
        records.append(
            FvpRecord(
                finding_text=mention.text,
                clusters=tuple(ClusterRef(c.centroid, c.bbox) for c in clusters),
                case_id=session.case_id,
            )
        )
    return records


def render_overlay(
    frame: np.ndarray, image: np.ndarray, alpha: float = 0.6
) -> np.ndarray:
    """Alpha-blend a heat colormap of the frame over a grayscale image.

    The per-pixel blend weight is ``alpha`` times the frame intensity
    normalized to [0, 1], so opacity is monotone in intensity; a zero frame
    returns the image unchanged, and at ``alpha=1`` saturated pixels show
    the pure colormap.  Returns an (H, W, 3) uint8 array.
    """
    if frame.shape != image.shape:
        raise ValueError(f"shape mismatch: frame {frame.shape} vs image {image.shape}")
    img = np.asarray(image, dtype=np.float64)
    if img.max() > 1.0:
        img = img / 255.0
    peak = frame.max()
    w = frame / peak if peak > 0 else np.zeros_like(frame)
    a = (alpha * w)[..., None]
    base = np.repeat(img[..., None], 3, axis=2)
    out = (1.0 - a) * base + a * _heat_colormap(w)
    return np.round(np.clip(out, 0.0, 1.0) * 255).astype(np.uint8)


def _heat_colormap(w: np.ndarray) -> np.ndarray:
    """Black -> red -> yellow -> white ramp; every channel monotone in w."""
    r = np.clip(3.0 * w, 0.0, 1.0)
    g = np.clip(3.0 * w - 1.0, 0.0, 1.0)
    b = np.clip(3.0 * w - 2.0, 0.0, 1.0)
    return np.stack([r, g, b], axis=-1)


def save_overlay_png(path: Union[str, Path], rgb: np.ndarray) -> None:
    Image.fromarray(rgb, mode="RGB").save(path)


# --- manifests and record files -------------------------------------------------

def write_video(
    out_dir: Union[str, Path], name: str, video: AttentionVideo
) -> dict:
    """Write frames as grid files plus a manifest; returns the manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, frame in enumerate(video.frames):
        rel = f"{name}_frame_{i:04d}.atnm"
        heatmap.save_grid(out / rel, frame)
        paths.append(rel)
    manifest = {
        "name": name,
        "frames": paths,
        "frame_kind": list(video.frame_kind),
        "finding_index": video.finding_index,
    }
    (out / f"{name}_manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


def load_video(out_dir: Union[str, Path], name: str) -> AttentionVideo:
    out = Path(out_dir)
    manifest = json.loads((out / f"{name}_manifest.json").read_text(encoding="utf-8"))
    frames = tuple(heatmap.load_grid(out / rel) for rel in manifest["frames"])
    return AttentionVideo(
        frames=frames,
        frame_kind=tuple(manifest["frame_kind"]),
        finding_index=manifest["finding_index"],
    )


def fvp_to_json(record: FvpRecord) -> dict:
    return {
        "case_id": record.case_id,
        "finding_text": record.finding_text,
        "clusters": [
            {"centroid": list(ref.centroid), "bbox": list(ref.bbox)}
            for ref in record.clusters
        ],
    }


def fvp_from_json(data: dict) -> FvpRecord:
    return FvpRecord(
        finding_text=data["finding_text"],
        case_id=data["case_id"],
        clusters=tuple(
            ClusterRef((c["centroid"][0], c["centroid"][1]), BBox(*c["bbox"]))
            for c in data["clusters"]
        ),
    )


def sda_to_json(record: SdaRecord) -> dict:
    return {
        "video_ref": record.video_ref,
        "shuffled_frame_indices": list(record.shuffled_frame_indices),
        "correct_order": list(record.correct_order),
    }


def sda_from_json(data: dict) -> SdaRecord:
    return SdaRecord(
        shuffled_frame_indices=tuple(data["shuffled_frame_indices"]),
        correct_order=tuple(data["correct_order"]),
        video_ref=data["video_ref"],
    )


def write_jsonl(path: Union[str, Path], records: Sequence[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")


def read_jsonl(path: Union[str, Path]) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out
