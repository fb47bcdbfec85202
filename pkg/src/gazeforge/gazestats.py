"""Dwell-time grids, trajectory correlation, dispersion, and significance.

Grid conventions: the image splits into ``n x n`` patches whose last row
and column absorb any remainder pixels; a fixation at (x, y) lands in
patch ``(floor(x*n/width), floor(y*n/height))`` clamped to the grid, so a
point exactly on a boundary belongs to the higher-index patch.  Matrices
are indexed ``[patch_y, patch_x]``; for report labels patches are numbered
row-major starting at 1.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats as sstats

from .ingest import window_fixations
from .types import FixationPoint, GazeSession

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrajectoryCorrelation:
    r_x: Optional[float]
    r_y: Optional[float]
    degenerate_x: bool = False
    degenerate_y: bool = False


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float  # min(w_plus, w_minus)
    p_value: float
    w_plus: float
    w_minus: float
    n_effective: int
    no_effect: bool = False
    exact: bool = True

    @property
    def signed_rank_sum(self) -> float:
        return self.w_plus - self.w_minus


@dataclass(frozen=True)
class CategoryDwell:
    matrices: dict[str, np.ndarray]
    n_unlabeled: int


def _patch_accumulate(
    fixations: Sequence[FixationPoint], width: int, height: int, n: int
) -> np.ndarray:
    out = np.zeros((n, n), dtype=np.float64)
    for f in fixations:
        ix = min(int(f.x * n // width), n - 1)
        iy = min(int(f.y * n // height), n - 1)
        out[iy, ix] += f.duration
    return out


def grid_dwell(session: GazeSession, n: int) -> np.ndarray:
    """Cumulative fixation duration per patch of an n-by-n grid (seconds)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return _patch_accumulate(
        session.fixations, session.image_width, session.image_height, n
    )


def patch_number(ix: int, iy: int, n: int) -> int:
    """Row-major 1-based patch label, e.g. the 4x4 center is {6, 7, 10, 11}."""
    return iy * n + ix + 1


def resample_trajectory(session: GazeSession, n_samples: int = 100) -> np.ndarray:
    """Resample the fixation path to ``n_samples`` points, shape (n, 2).

    Sample anchors are fixation midpoints mapped linearly onto [0, 1];
    positions are linearly interpolated at evenly spaced times.
    """
    if len(session.fixations) < 2:
        raise ValueError("need at least 2 fixations to resample")
    mids = np.array([(f.t_start + f.t_end) / 2.0 for f in session.fixations])
    xs = np.array([f.x for f in session.fixations])
    ys = np.array([f.y for f in session.fixations])
    order = np.argsort(mids, kind="stable")
    mids, xs, ys = mids[order], xs[order], ys[order]
    span = mids[-1] - mids[0]
    if span <= 0:
        return np.column_stack([np.full(n_samples, xs[0]), np.full(n_samples, ys[0])])
    u = (mids - mids[0]) / span
    t = np.linspace(0.0, 1.0, n_samples)
    return np.column_stack([np.interp(t, u, xs), np.interp(t, u, ys)])


def trajectory_correlation(
    a: GazeSession, b: GazeSession, n_samples: int = 100
) -> TrajectoryCorrelation:
    """Per-axis Pearson correlation of two readers' resampled trajectories.

    Both sessions must be on the same case.  A constant coordinate sequence
    on either side makes that axis degenerate (flagged, not NaN).
    """
    if a.case_id != b.case_id:
        raise ValueError(f"case mismatch: {a.case_id!r} vs {b.case_id!r}")
    ta = resample_trajectory(a, n_samples)
    tb = resample_trajectory(b, n_samples)

    def corr(u: np.ndarray, v: np.ndarray) -> tuple[Optional[float], bool]:
        if u.std() == 0 or v.std() == 0:
            return None, True
        r = float(np.corrcoef(u, v)[0, 1])
        return max(-1.0, min(1.0, r)), False

    r_x, deg_x = corr(ta[:, 0], tb[:, 0])
    r_y, deg_y = corr(ta[:, 1], tb[:, 1])
    return TrajectoryCorrelation(r_x, r_y, deg_x, deg_y)


def dispersion(session: GazeSession) -> tuple[float, float]:
    """Duration-weighted population standard deviation of x and y."""
    if not session.fixations:
        raise ValueError("session has no fixations")
    if len(session.fixations) == 1:
        return 0.0, 0.0
    xs = np.array([f.x for f in session.fixations])
    ys = np.array([f.y for f in session.fixations])
    w = np.array([f.duration for f in session.fixations])
    if w.sum() <= 0:
        w = np.ones_like(w)
    w = w / w.sum()
    mx, my = float(w @ xs), float(w @ ys)
    return (
        math.sqrt(float(w @ (xs - mx) ** 2)),
        math.sqrt(float(w @ (ys - my) ** 2)),
    )


def category_dwell(
    sessions: Sequence[GazeSession], n: int, window_s: float = 2.5
) -> CategoryDwell:
    """Per-category dwell grids summed over each labeled finding's window.

    Findings without category labels are skipped; their count is reported.
    Unknown labels pass through verbatim.
    """
    matrices: dict[str, np.ndarray] = {}
    n_unlabeled = 0
    for session in sessions:
        for mention in session.findings:
            if not mention.categories:
                n_unlabeled += 1
                continue
            pts = window_fixations(session, mention, window_s)
            mat = _patch_accumulate(
                pts, session.image_width, session.image_height, n
            )
            for cat in mention.categories:
                if cat not in matrices:
                    matrices[cat] = np.zeros((n, n), dtype=np.float64)
                matrices[cat] += mat
    if n_unlabeled:
        log.info("category_dwell: %d unlabeled finding(s) ignored", n_unlabeled)
    return CategoryDwell(matrices=matrices, n_unlabeled=n_unlabeled)


def wilcoxon_signed_rank(
    a: Sequence[float], b: Sequence[float]
) -> WilcoxonResult:
    """Paired two-sided Wilcoxon signed-rank test.

    Zero differences are dropped; tied absolute differences get average
    ranks.  The p-value is exact (full null distribution of the positive
    rank sum) for up to 25 effective pairs, and a normal approximation
    with continuity and tie corrections beyond that.  The statistic is
    ``min(w_plus, w_minus)``.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape or av.ndim != 1 or av.size < 1:
        raise ValueError("a and b must be equal-length 1-D sequences")
    d = av - bv
    d = d[d != 0]
    n = d.size
    if n == 0:
        return WilcoxonResult(0.0, 1.0, 0.0, 0.0, 0, no_effect=True)

    ranks = sstats.rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    w_minus = float(ranks[d < 0].sum())
    w = min(w_plus, w_minus)

    if n <= 25:
        p = _exact_two_sided_p(ranks, w_plus)
        return WilcoxonResult(w, p, w_plus, w_minus, n)

    mu = n * (n + 1) / 4.0
    _, counts = np.unique(ranks, return_counts=True)
    tie_term = float(((counts**3 - counts)).sum()) / 48.0
    sigma = math.sqrt(n * (n + 1) * (2 * n + 1) / 24.0 - tie_term)
    z = (w - mu + 0.5) / sigma
    p = min(1.0, 2.0 * float(sstats.norm.cdf(z)))
    return WilcoxonResult(w, p, w_plus, w_minus, n, exact=False)


def _exact_two_sided_p(ranks: np.ndarray, w_plus: float) -> float:
    """P(|W+ - E| >= |observed - E|) under random signs, by rank-sum DP.

    Average ranks are multiples of 1/2, so doubled ranks are integers and
    the distribution of the doubled positive rank sum is a 0/1 knapsack
    count over at most n(n+1) cells.
    """
    r2 = np.rint(2.0 * ranks).astype(np.int64)
    total = int(r2.sum())  # equals n(n+1), invariant under ties
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: total + 1 - r]
        counts += shifted
    s = int(round(2.0 * w_plus))
    mean = total / 2.0
    dev = abs(s - mean)
    mask = np.abs(np.arange(total + 1) - mean) >= dev - 1e-9
    return float(counts[mask].sum() / counts.sum())
