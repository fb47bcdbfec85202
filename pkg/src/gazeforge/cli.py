"""Batch command-line interface.

Subcommands: ingest, pipeline, videos, fvp-gen, sda-gen, dwell, correlate,
agree, rsa, eval-grounding, eval-nlg, eval-labels, synth.

Option precedence is CLI flag > config file > built-in default.  The
config file is a flat JSON object whose keys mirror flag names with
underscores (e.g. ``{"min_pts": 8}``).  All randomized steps take an
explicit ``--seed``.  Every run writes ``run_manifest.json`` (inputs,
resolved configuration and its hash, package and library versions) into
the output directory; outputs are written atomically via temp-file rename.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.  The
``GAZEFORGE_LOG`` environment variable sets the log level.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__ as pkg_version
from . import agreement, attnvideo, cluster, evalmetrics, gazestats, heatmap, ingest, synth
from .types import BBox, GazeSession, ImageGeometry

log = logging.getLogger("gazeforge")

SUBCOMMANDS = (
    "ingest",
    "pipeline",
    "videos",
    "fvp-gen",
    "sda-gen",
    "dwell",
    "correlate",
    "agree",
    "rsa",
    "eval-grounding",
    "eval-nlg",
    "eval-labels",
    "synth",
)


# --- small I/O helpers -------------------------------------------------------

def _write_text_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _write_json_atomic(path: Path, obj) -> None:
    _write_text_atomic(path, json.dumps(obj, indent=2) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    return attnvideo.read_jsonl(path)


def _write_jsonl_atomic(path: Path, records: Sequence[dict]) -> None:
    buf = io.StringIO()
    for rec in records:
        buf.write(json.dumps(rec) + "\n")
    _write_text_atomic(path, buf.getvalue())


def _write_manifest(out_dir: Path, subcommand: str, argv: Sequence[str], resolved: dict) -> None:
    blob = json.dumps(resolved, sort_keys=True).encode()
    manifest = {
        "subcommand": subcommand,
        "argv": list(argv),
        "resolved_config": resolved,
        "config_sha256": hashlib.sha256(blob).hexdigest(),
        "versions": {
            "gazeforge": pkg_version,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json_atomic(out_dir / "run_manifest.json", manifest)


def _resolved(args: argparse.Namespace) -> dict:
    skip = {"func", "config"}
    return {
        k: v for k, v in sorted(vars(args).items()) if k not in skip
    }


# --- session discovery --------------------------------------------------------

def _discover_sessions(args) -> list[tuple[Path, Path]]:
    """Collect (fixations, transcript) pairs from flags or a dataset dir."""
    pairs = []
    if getattr(args, "fixations", None):
        if not getattr(args, "transcript", None):
            raise ValueError("--fixations requires --transcript")
        pairs.append((Path(args.fixations), Path(args.transcript)))
    if getattr(args, "dataset", None):
        root = Path(args.dataset)
        data_dir = root / "dataset" if (root / "dataset").is_dir() else root
        for fix in sorted(data_dir.glob("*.fixations.csv")):
            tr = fix.with_name(fix.name.replace(".fixations.csv", ".transcript.json"))
            if not tr.exists():
                raise ValueError(f"missing transcript for {fix}")
            pairs.append((fix, tr))
    if not pairs:
        raise ValueError("no input sessions: pass --fixations/--transcript or --dataset")
    return pairs


def _load_scaled(fix: Path, tr: Path, scale: int) -> GazeSession:
    return ingest.rescale(ingest.parse_session(fix, tr), scale)


def _cluster_params(args) -> cluster.ClusterParams:
    return cluster.ClusterParams(
        eps=args.eps, min_pts=args.min_pts, coordinate_space=args.coordinate_space
    )


def _session_regions(
    session: GazeSession, args
) -> tuple[list[list[cluster.GazeCluster]], list[int]]:
    """Per-finding region lists plus noise counts."""
    params = _cluster_params(args)
    geom = session.geometry
    regions, noise = [], []
    for mention in session.findings:
        pts = ingest.window_fixations(session, mention, args.window)
        regs, n_noise = cluster.cluster_fixations(pts, geom, params, args.sigma_scale)
        regions.append(regs)
        noise.append(n_noise)
    return regions, noise


# --- per-case pipeline worker (module-level for process pools) -----------------

def _pipeline_one(job: tuple) -> str:
    fix, tr, out_root, ns_dict = job
    args = argparse.Namespace(**ns_dict)
    session = _load_scaled(Path(fix), Path(tr), args.scale)
    stem = f"{session.case_id}__{session.reader_id}"
    out = Path(out_root) / stem
    out.mkdir(parents=True, exist_ok=True)

    regions, noise = _session_regions(session, args)
    dumps = [
        cluster.clusters_to_dict(i, regs, n)
        for i, (regs, n) in enumerate(zip(regions, noise))
    ]
    _write_json_atomic(out / "findings.json", dumps)

    videos = []
    for i, regs in enumerate(regions):
        if not regs:
            log.warning("%s finding %d: no clusters, skipped", stem, i)
            continue
        video = attnvideo.build_finding_video(regs, finding_index=i)
        attnvideo.write_video(out / "frames", f"finding{i}", video)
        videos.append(video)
    if videos:
        summary = attnvideo.build_summary_video(videos)
        attnvideo.write_video(out / "frames", "summary", summary)
    return stem


def _map_jobs(jobs: list[tuple], worker, n_jobs: int) -> list:
    if n_jobs <= 1 or len(jobs) <= 1:
        return [worker(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(worker, jobs))


# --- subcommand handlers --------------------------------------------------------

def _cmd_synth(args, argv) -> int:
    out = Path(args.out)
    cfg = synth.SynthConfig()
    synth.write_dataset(out, args.cases, args.seed, cfg, args.readers)
    _write_manifest(out, "synth", argv, _resolved(args))
    log.info("wrote %d case(s) to %s", args.cases, out)
    return 0


def _cmd_ingest(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for fix, tr in _discover_sessions(args):
        session = ingest.parse_session(fix, tr)
        stem = f"{session.case_id}__{session.reader_id}"
        _write_json_atomic(out / f"{stem}.session.json", ingest.session_to_dict(session))
        reports.append(
            {
                "case_id": session.case_id,
                "reader_id": session.reader_id,
                "n_fixations": len(session.fixations),
                "n_findings": len(session.findings),
                "n_dropped_offscreen": session.n_dropped_offscreen,
            }
        )
    _write_json_atomic(out / "ingest_report.json", reports)
    _write_manifest(out, "ingest", argv, _resolved(args))
    return 0


def _cmd_pipeline(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ns = {
        k: getattr(args, k)
        for k in ("scale", "window", "eps", "min_pts", "coordinate_space", "sigma_scale")
    }
    jobs = [(str(f), str(t), str(out), ns) for f, t in _discover_sessions(args)]
    stems = _map_jobs(jobs, _pipeline_one, args.jobs)
    _write_json_atomic(out / "sessions.json", sorted(stems))
    _write_manifest(out, "pipeline", argv, _resolved(args))
    return 0


def _cmd_videos(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base_image = None
    if args.image:
        from PIL import Image

        base_image = np.asarray(Image.open(args.image).convert("L"), dtype=np.float64)
    for fix, tr in _discover_sessions(args):
        session = _load_scaled(fix, tr, args.scale)
        stem = f"{session.case_id}__{session.reader_id}"
        regions, _ = _session_regions(session, args)
        videos = []
        for i, regs in enumerate(regions):
            if not regs:
                log.warning("%s finding %d: no clusters, skipped", stem, i)
                continue
            video = attnvideo.build_finding_video(regs, finding_index=i)
            attnvideo.write_video(out / stem, f"finding{i}", video)
            videos.append(video)
        if not videos:
            log.warning("%s: no videos built", stem)
            continue
        summary = attnvideo.build_summary_video(videos)
        attnvideo.write_video(out / stem, "summary", summary)
        if base_image is not None and base_image.shape == summary.frames[0].shape:
            for k, frame in enumerate(summary.frames):
                rgb = attnvideo.render_overlay(frame, base_image, args.alpha)
                attnvideo.save_overlay_png(out / stem / f"overlay_{k:04d}.png", rgb)
    _write_manifest(out, "videos", argv, _resolved(args))
    return 0


def _cmd_fvp_gen(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    for fix, tr in _discover_sessions(args):
        session = _load_scaled(fix, tr, args.scale)
        regions, _ = _session_regions(session, args)
        records.extend(
            attnvideo.fvp_to_json(r) for r in attnvideo.emit_fvp_pairs(session, regions)
        )
    _write_jsonl_atomic(out / "fvp.jsonl", records)
    _write_manifest(out, "fvp-gen", argv, _resolved(args))
    return 0


def _cmd_sda_gen(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = []
    seed_seq = np.random.SeedSequence(args.seed)
    for fix, tr in _discover_sessions(args):
        session = _load_scaled(fix, tr, args.scale)
        stem = f"{session.case_id}__{session.reader_id}"
        regions, _ = _session_regions(session, args)
        videos = []
        for i, regs in enumerate(regions):
            if not regs:
                continue
            videos.append(attnvideo.build_finding_video(regs, finding_index=i))
        for video in videos:
            if len(video.frames) < 2:
                continue
            seed = int(seed_seq.spawn(1)[0].generate_state(1)[0])
            rec = attnvideo.shuffle_for_sda(
                video, seed, video_ref=f"{stem}/finding{video.finding_index}"
            )
            records.append(attnvideo.sda_to_json(rec))
        if videos:
            summary = attnvideo.build_summary_video(videos)
            if len(summary.frames) >= 2:
                seed = int(seed_seq.spawn(1)[0].generate_state(1)[0])
                rec = attnvideo.shuffle_for_sda(summary, seed, video_ref=f"{stem}/summary")
                records.append(attnvideo.sda_to_json(rec))
    _write_jsonl_atomic(out / "sda.jsonl", records)
    _write_manifest(out, "sda-gen", argv, _resolved(args))
    return 0


def _matrix_csv(mat: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in mat:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _cmd_dwell(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sessions = [_load_scaled(f, t, args.scale) for f, t in _discover_sessions(args)]
    for session in sessions:
        stem = f"{session.case_id}__{session.reader_id}"
        mat = gazestats.grid_dwell(session, args.grid_n)
        _write_text_atomic(out / f"dwell_{stem}.csv", _matrix_csv(mat))
        heatmap.to_png(out / f"dwell_{stem}.png", mat)
    if args.by_category:
        result = gazestats.category_dwell(sessions, args.grid_n, args.window)
        for cat, mat in sorted(result.matrices.items()):
            safe = cat.lower().replace(" ", "_")
            _write_text_atomic(out / f"category_{safe}.csv", _matrix_csv(mat))
        _write_json_atomic(
            out / "category_summary.json",
            {
                "categories": sorted(result.matrices),
                "n_unlabeled": result.n_unlabeled,
            },
        )
    _write_manifest(out, "dwell", argv, _resolved(args))
    return 0


def _cmd_correlate(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sessions = [_load_scaled(f, t, args.scale) for f, t in _discover_sessions(args)]
    by_case: dict[str, list[GazeSession]] = {}
    for s in sessions:
        by_case.setdefault(s.case_id, []).append(s)

    corr_rows = [("case_id", "reader_a", "reader_b", "r_x", "r_y")]
    for case_id in sorted(by_case):
        group = sorted(by_case[case_id], key=lambda s: s.reader_id)
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                r = gazestats.trajectory_correlation(group[i], group[j], args.samples)
                corr_rows.append(
                    (
                        case_id,
                        group[i].reader_id,
                        group[j].reader_id,
                        "" if r.degenerate_x else repr(r.r_x),
                        "" if r.degenerate_y else repr(r.r_y),
                    )
                )
    disp_rows = [("case_id", "reader", "std_x", "std_y")]
    for s in sorted(sessions, key=lambda s: (s.case_id, s.reader_id)):
        sx, sy = gazestats.dispersion(s)
        disp_rows.append((s.case_id, s.reader_id, repr(sx), repr(sy)))

    for name, rows in (("correlations.csv", corr_rows), ("dispersion.csv", disp_rows)):
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(rows)
        _write_text_atomic(out / name, buf.getvalue())
    _write_manifest(out, "correlate", argv, _resolved(args))
    return 0


def _cmd_agree(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pairs = []
    for rec in _read_jsonl(Path(args.pairs)):
        sa = agreement.CentroidSequence(
            points=tuple((p[0], p[1]) for p in rec["model"]),
            source="model",
            case_id=rec["case_id"],
        )
        sb = agreement.CentroidSequence(
            points=tuple((p[0], p[1]) for p in rec["reader"]),
            source="reader",
            case_id=rec["case_id"],
        )
        pairs.append((sa, sb))
    if not pairs:
        raise ValueError("no sequence pairs in input")
    report = {}
    for variant in (agreement.ABSOLUTE, agreement.CONSISTENCY):
        rep = agreement.dtw_icc_agreement(
            pairs[0][0], pairs[0][1], pairs[1:], variant=variant
        )
        report[variant] = agreement.report_to_json(rep)
    _write_json_atomic(out / "agreement.json", report)
    _write_manifest(out, "agree", argv, _resolved(args))
    return 0


def _cmd_rsa(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    readers: dict[str, dict[str, np.ndarray]] = {}
    for fix, tr in _discover_sessions(args):
        session = _load_scaled(fix, tr, args.scale)
        regions, _ = _session_regions(session, args)
        clusters = [c for regs in regions for c in regs]
        if not clusters:
            log.warning(
                "%s/%s: no clusters, skipped", session.case_id, session.reader_id
            )
            continue
        rsa = agreement.rsa_map(clusters, session.geometry, args.sigma_divisor)
        readers.setdefault(session.reader_id, {})[session.case_id] = rsa
    ids, mat = agreement.similarity_matrix(readers)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["reader"] + ids)
    for rid, row in zip(ids, mat):
        writer.writerow([rid] + [repr(float(v)) for v in row])
    _write_text_atomic(out / "similarity.csv", buf.getvalue())
    _write_manifest(out, "rsa", argv, _resolved(args))
    return 0


def _parse_grounding(path: Path, with_conf: bool):
    out = {}
    for rec in _read_jsonl(path):
        sid = rec["sentence_id"]
        boxes = []
        for row in rec.get("boxes", []):
            if with_conf:
                boxes.append((BBox(*map(int, row[:4])), float(row[4])))
            else:
                boxes.append(BBox(*map(int, row[:4])))
        out[sid] = boxes
    return out


def _cmd_eval_grounding(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    preds_raw = _parse_grounding(Path(args.preds), with_conf=True)
    gts = _parse_grounding(Path(args.gt), with_conf=False)
    preds = [
        evalmetrics.GroundingPrediction(sentence_id=sid, boxes=tuple(boxes))
        for sid, boxes in sorted(preds_raw.items())
    ]
    miou_taus = tuple(args.miou_thresholds) if args.miou_thresholds else evalmetrics.MIOU_THRESHOLDS
    map_taus = tuple(args.map_thresholds) if args.map_thresholds else evalmetrics.MAP_THRESHOLDS
    report = {
        "miou": evalmetrics.grounding_miou(preds, gts, miou_taus),
        "map": evalmetrics.grounding_map(preds, gts, map_taus),
    }
    _write_json_atomic(out / "grounding_report.json", report)
    _write_manifest(out, "eval-grounding", argv, _resolved(args))
    return 0


def _cmd_eval_nlg(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    preds = {r["report_id"]: r["text"] for r in _read_jsonl(Path(args.preds))}
    refs = {r["report_id"]: r["text"] for r in _read_jsonl(Path(args.refs))}
    missing = sorted(set(refs) ^ set(preds))
    if missing:
        raise ValueError(f"report id mismatch: {missing}")
    ids = sorted(refs)
    cands = [evalmetrics.tokenize(preds[i]) for i in ids]
    ref_lists = [[evalmetrics.tokenize(refs[i])] for i in ids]
    bleu_scores = evalmetrics.corpus_bleu(cands, ref_lists, max_n=4)
    rouge_scores = [
        evalmetrics.rouge_l(c, r[0]) for c, r in zip(cands, ref_lists)
    ]
    meteor_scores = [
        evalmetrics.meteor_simplified(c, r[0]) for c, r in zip(cands, ref_lists)
    ]
    report = {
        "n_reports": len(ids),
        "bleu": {f"bleu_{n}": s for n, s in enumerate(bleu_scores, start=1)},
        "rouge_l": float(np.mean(rouge_scores)) if rouge_scores else 0.0,
        "meteor_simplified": float(np.mean(meteor_scores)) if meteor_scores else 0.0,
    }
    _write_json_atomic(out / "nlg_report.json", report)
    _write_manifest(out, "eval-nlg", argv, _resolved(args))
    return 0


def _cmd_eval_labels(args, argv) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def parse(path: Path) -> list[evalmetrics.LabelRecord]:
        return [
            evalmetrics.LabelRecord(report_id=r["report_id"], labels=dict(r["labels"]))
            for r in _read_jsonl(path)
        ]

    report = {}
    modes = (
        [args.mode]
        if args.mode != "both"
        else [evalmetrics.POSITIVE_ONLY, evalmetrics.MULTICLASS]
    )
    preds, gts = parse(Path(args.preds)), parse(Path(args.gt))
    for mode in modes:
        rep = evalmetrics.label_f1(preds, gts, mode)
        report[mode] = {
            "per_category": rep.per_category,
            "per_class": rep.per_class,
            "macro": rep.macro,
            "micro": rep.micro,
        }
    _write_json_atomic(out / "label_report.json", report)
    _write_manifest(out, "eval-labels", argv, _resolved(args))
    return 0


# --- parser ----------------------------------------------------------------------

def _add_session_inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fixations", help="fixation CSV for a single session")
    p.add_argument("--transcript", help="transcript JSON for a single session")
    p.add_argument("--dataset", help="directory of *.fixations.csv/*.transcript.json")


def _add_pipeline_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--scale", type=int, default=4, help="downsampling factor")
    p.add_argument("--window", type=float, default=2.5, help="window seconds before a mention")
    p.add_argument("--eps", type=float, default=0.3, help="clustering radius")
    p.add_argument("--min-pts", type=int, default=10, help="density threshold")
    p.add_argument(
        "--coordinate-space",
        choices=["normalized", "pixel"],
        default="normalized",
        help="space in which eps applies",
    )
    p.add_argument("--sigma-scale", type=float, default=1.0, help="sigma multiplier on ppd")


def build_parser(config: Optional[dict] = None) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gazeforge", description="Gaze analytics batch pipeline"
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def new(name: str, func, **kwargs) -> argparse.ArgumentParser:
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="flat JSON config file")
        p.set_defaults(func=func)
        return p

    p = new("synth", _cmd_synth, help="generate a synthetic dataset with ground truth")
    p.add_argument("--cases", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--readers", type=int, default=1, help="readers per case")

    p = new("ingest", _cmd_ingest, help="parse and validate sessions")
    _add_session_inputs(p)

    p = new("pipeline", _cmd_pipeline, help="windows, clusters, and attention videos")
    _add_session_inputs(p)
    _add_pipeline_params(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel workers over sessions")

    p = new("videos", _cmd_videos, help="attention videos (optionally overlaid)")
    _add_session_inputs(p)
    _add_pipeline_params(p)
    p.add_argument("--image", help="grayscale PNG for overlays (at analysis scale)")
    p.add_argument("--alpha", type=float, default=0.6, help="max overlay opacity")

    p = new("fvp-gen", _cmd_fvp_gen, help="finding-to-region records (JSON lines)")
    _add_session_inputs(p)
    _add_pipeline_params(p)

    p = new("sda-gen", _cmd_sda_gen, help="frame-reordering records (JSON lines)")
    _add_session_inputs(p)
    _add_pipeline_params(p)
    p.add_argument("--seed", type=int, required=True)

    p = new("dwell", _cmd_dwell, help="grid dwell-time matrices")
    _add_session_inputs(p)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--grid-n", type=int, default=4)
    p.add_argument("--window", type=float, default=2.5)
    p.add_argument("--by-category", action="store_true")

    p = new("correlate", _cmd_correlate, help="inter-reader trajectory correlation")
    _add_session_inputs(p)
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--samples", type=int, default=100, help="resampled points per trajectory")

    p = new("agree", _cmd_agree, help="warped-sequence ICC agreement report")
    p.add_argument(
        "--pairs",
        required=True,
        help='JSON lines: {"case_id", "model": [[x,y],...], "reader": [[x,y],...]}',
    )

    p = new("rsa", _cmd_rsa, help="reader similarity from reconstructed maps")
    _add_session_inputs(p)
    _add_pipeline_params(p)
    p.add_argument("--sigma-divisor", type=float, default=4.0)

    p = new("eval-grounding", _cmd_eval_grounding, help="mask IoU and detection AP")
    p.add_argument("--preds", required=True, help="JSON lines with boxes+confidence")
    p.add_argument("--gt", required=True, help="JSON lines with ground-truth boxes")
    p.add_argument("--miou-thresholds", type=float, nargs="*", default=None)
    p.add_argument("--map-thresholds", type=float, nargs="*", default=None)

    p = new("eval-nlg", _cmd_eval_nlg, help="text-overlap report metrics")
    p.add_argument("--preds", required=True)
    p.add_argument("--refs", required=True)

    p = new("eval-labels", _cmd_eval_labels, help="category-label F1")
    p.add_argument("--preds", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument(
        "--mode",
        choices=[evalmetrics.POSITIVE_ONLY, evalmetrics.MULTICLASS, "both"],
        default="both",
    )

    if config:
        for action_parser in sub.choices.values():
            known = {a.dest for a in action_parser._actions}
            overrides = {k: v for k, v in config.items() if k in known}
            if overrides:
                action_parser.set_defaults(**overrides)
    return parser


def _find_config(argv: Sequence[str]) -> Optional[dict]:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return json.loads(Path(argv[i + 1]).read_text(encoding="utf-8"))
        if tok.startswith("--config="):
            return json.loads(Path(tok.split("=", 1)[1]).read_text(encoding="utf-8"))
    return None


def run(argv: Sequence[str]) -> int:
    """Parse and execute; returns the process exit code."""
    level = os.environ.get("GAZEFORGE_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO))
    argv = list(argv)
    try:
        config = _find_config(argv)
        parser = build_parser(config)
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    except (ValueError, KeyError) as exc:
        log.error("invalid configuration: %s", exc)
        return 1
    except OSError as exc:
        log.error("i/o failure: %s", exc)
        return 2
    try:
        return args.func(args, argv)
    except (ValueError, KeyError) as exc:
        log.error("validation error: %s", exc)
        return 1
    except OSError as exc:
        log.error("i/o failure: %s", exc)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
