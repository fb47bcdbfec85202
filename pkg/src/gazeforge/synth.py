"""Deterministic synthetic gaze sessions with planted structure.

Every generated case records a ground-truth sidecar (planted cluster
centers, per-finding windows, category labels), so each pipeline stage has
a checkable oracle.  Cluster centers sit on well-separated normalized
slots: blobs are tight relative to the clustering radius and planted noise
is rejection-sampled far from every slot, so the expected region count and
location are known by construction.

Fixation timestamps are integer multiples of 1/1024 s.  Dyadic durations
make dwell-time sums exact in float64, which lets conservation checks
assert equality rather than closeness.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .ingest import session_to_fixation_csv, session_to_transcript_json
from .types import CATEGORY_LABELS, FindingMention, FixationPoint, GazeSession

TICK = 1.0 / 1024.0

#: Normalized anchor positions; pairwise distance >= 0.5 before jitter.
SLOTS = ((0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75))


@dataclass(frozen=True)
class SynthConfig:
    image_width: int = 2048
    image_height: int = 2560
    findings_range: tuple[int, int] = (1, 3)
    clusters_range: tuple[int, int] = (1, 2)
    points_range: tuple[int, int] = (11, 13)
    noise_range: tuple[int, int] = (0, 2)
    ppd_range: tuple[float, float] = (24.0, 36.0)
    point_sigma_px: float = 5.0  # full-scale jitter of points around a slot
    slot_jitter: float = 0.03  # normalized jitter of the slot anchor
    noise_min_dist: float = 0.36  # normalized keep-out radius around slots
    duration_ticks: tuple[int, int] = (55, 75)
    gap_ticks: tuple[int, int] = (3, 6)
    preamble_range: tuple[int, int] = (4, 8)
    mention_start: float = 3.0
    mention_spacing: float = 3.0
    window_s: float = 2.5
    category_prob: float = 0.85
    phase: Optional[int] = None  # default: 2 for multi-reader, else 3


@dataclass(frozen=True)
class CasePlan:
    """Reader-independent layout of one case."""

    mention_times: tuple[float, ...]
    slot_centers: tuple[tuple[tuple[float, float], ...], ...]  # per finding
    categories: tuple[tuple[str, ...], ...]
    n_noise: tuple[int, ...]


def plan_case(rng: np.random.Generator, cfg: SynthConfig) -> CasePlan:
    n_findings = int(rng.integers(cfg.findings_range[0], cfg.findings_range[1] + 1))
    mention_times = []
    slot_centers = []
    categories = []
    n_noise = []
    for m in range(n_findings):
        mention_times.append(cfg.mention_start + cfg.mention_spacing * m)
        k = int(rng.integers(cfg.clusters_range[0], cfg.clusters_range[1] + 1))
        slot_ids = rng.choice(len(SLOTS), size=k, replace=False)
        centers = []
        for s in slot_ids:
            jx, jy = rng.uniform(-cfg.slot_jitter, cfg.slot_jitter, size=2)
            centers.append((SLOTS[s][0] + jx, SLOTS[s][1] + jy))
        slot_centers.append(tuple(centers))
        if rng.random() < cfg.category_prob:
            categories.append((str(rng.choice(CATEGORY_LABELS)),))
        else:
            categories.append(())
        n_noise.append(int(rng.integers(cfg.noise_range[0], cfg.noise_range[1] + 1)))
    return CasePlan(
        mention_times=tuple(mention_times),
        slot_centers=tuple(slot_centers),
        categories=tuple(categories),
        n_noise=tuple(n_noise),
    )


def _noise_position(
    rng: np.random.Generator, centers: Sequence[tuple[float, float]], cfg: SynthConfig
) -> tuple[float, float]:
    while True:
        x, y = rng.uniform(0.08, 0.92, size=2)
        if all((x - cx) ** 2 + (y - cy) ** 2 >= cfg.noise_min_dist**2 for cx, cy in centers):
            return x, y


def realize_session(
    rng: np.random.Generator,
    plan: CasePlan,
    case_id: str,
    reader_id: str,
    cfg: SynthConfig,
    phase: int,
) -> tuple[GazeSession, dict]:
    """Sample one reader's fixations for a planned case, plus ground truth."""
    w, h = cfg.image_width, cfg.image_height
    fixations: list[FixationPoint] = []
    findings: list[FindingMention] = []
    truth_findings = []

    def add_fixation(t_tick: int, x: float, y: float) -> int:
        dur = int(rng.integers(cfg.duration_ticks[0], cfg.duration_ticks[1] + 1))
        gap = int(rng.integers(cfg.gap_ticks[0], cfg.gap_ticks[1] + 1))
        ppd = rng.uniform(*cfg.ppd_range)
        fixations.append(
            FixationPoint(
                x=float(np.clip(x, 0.0, w - 1.0)),
                y=float(np.clip(y, 0.0, h - 1.0)),
                t_start=t_tick * TICK,
                t_end=(t_tick + dur) * TICK,
                ppd_x=ppd,
                ppd_y=ppd * rng.uniform(0.95, 1.05),
            )
        )
        return t_tick + dur + gap

    # preamble wandering before the first window opens
    first_window = plan.mention_times[0] - cfg.window_s
    t = int(round(0.05 / TICK))
    n_pre = int(rng.integers(cfg.preamble_range[0], cfg.preamble_range[1] + 1))
    limit = int((first_window - 0.1) / TICK)
    for _ in range(n_pre):
        if t >= limit:
            break
        x, y = rng.uniform(0.3, 0.7, size=2)
        t = min(add_fixation(t, x * w, y * h), limit)

    for idx, t_mention in enumerate(plan.mention_times):
        centers = plan.slot_centers[idx]
        t = int(round((t_mention - cfg.window_s + 0.05) / TICK))
        clusters_truth = []
        for cx, cy in centers:
            n_pts = int(rng.integers(cfg.points_range[0], cfg.points_range[1] + 1))
            pts = []
            for _ in range(n_pts):
                px = cx * w + rng.normal(0.0, cfg.point_sigma_px)
                py = cy * h + rng.normal(0.0, cfg.point_sigma_px)
                t = add_fixation(t, px, py)
                pts.append((fixations[-1].x, fixations[-1].y, fixations[-1].duration))
            wsum = sum(d for _, _, d in pts)
            clusters_truth.append(
                {
                    "center_full": [cx * w, cy * h],
                    "centroid_expected_full": [
                        sum(x * d for x, _, d in pts) / wsum,
                        sum(y * d for _, y, d in pts) / wsum,
                    ],
                    "n_points": n_pts,
                }
            )
        for _ in range(plan.n_noise[idx]):
            nx, ny = _noise_position(rng, centers, cfg)
            t = add_fixation(t, nx * w, ny * h)
        findings.append(
            FindingMention(
                text=f"synthetic finding {idx} of case {case_id}",
                t_mention=t_mention,
                categories=plan.categories[idx],
            )
        )
        truth_findings.append(
            {
                "finding_index": idx,
                "t_mention_s": t_mention,
                "categories": list(plan.categories[idx]),
                "clusters": clusters_truth,
                "n_noise": plan.n_noise[idx],
            }
        )

    session = GazeSession(
        case_id=case_id,
        reader_id=reader_id,
        image_width=w,
        image_height=h,
        fixations=tuple(fixations),
        findings=tuple(findings),
        phase=phase,
    )
    truth = {
        "case_id": case_id,
        "reader_id": reader_id,
        "image_width": w,
        "image_height": h,
        "window_s": cfg.window_s,
        "findings": truth_findings,
    }
    return session, truth


def generate_dataset(
    n_cases: int,
    seed: int,
    cfg: Optional[SynthConfig] = None,
    readers_per_case: int = 1,
) -> list[tuple[GazeSession, dict]]:
    """Generate sessions in memory; deterministic for a fixed seed."""
    if n_cases < 1:
        raise ValueError("n_cases must be >= 1")
    cfg = cfg or SynthConfig()
    phase = cfg.phase if cfg.phase is not None else (2 if readers_per_case > 1 else 3)
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_cases):
        plan = plan_case(rng, cfg)
        for r in range(readers_per_case):
            out.append(
                realize_session(rng, plan, f"case{i:04d}", f"reader{r}", cfg, phase)
            )
    return out


def write_dataset(
    out_dir: Union[str, Path],
    n_cases: int,
    seed: int,
    cfg: Optional[SynthConfig] = None,
    readers_per_case: int = 1,
) -> list[dict]:
    """Write CSV/transcript pairs plus truth sidecars; returns an index."""
    out = Path(out_dir)
    (out / "dataset").mkdir(parents=True, exist_ok=True)
    (out / "truth").mkdir(parents=True, exist_ok=True)
    index = []
    for session, truth in generate_dataset(n_cases, seed, cfg, readers_per_case):
        stem = f"{session.case_id}__{session.reader_id}"
        fix_path = out / "dataset" / f"{stem}.fixations.csv"
        tr_path = out / "dataset" / f"{stem}.transcript.json"
        truth_path = out / "truth" / f"{stem}.truth.json"
        fix_path.write_text(session_to_fixation_csv(session), encoding="utf-8")
        tr_path.write_text(
            json.dumps(session_to_transcript_json(session), indent=2) + "\n",
            encoding="utf-8",
        )
        truth_path.write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")
        index.append(
            {
                "case_id": session.case_id,
                "reader_id": session.reader_id,
                "fixations": str(fix_path.relative_to(out)),
                "transcript": str(tr_path.relative_to(out)),
                "truth": str(truth_path.relative_to(out)),
            }
        )
    (out / "index.json").write_text(
        json.dumps(index, indent=2) + "\n", encoding="utf-8"
    )
    return index
