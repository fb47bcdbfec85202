"""Inter-rater agreement: sequence alignment, ICC, and map similarity.

The alignment-based agreement pipeline warps two centroid sequences onto
each other (classic dynamic time warping, steps down/right/diagonal, no
window), collapses many-to-one matches by averaging the repeated side, and
pools the matched pairs across cases into an n x 2 rating matrix per axis
for a single-measure two-way mixed-model intraclass correlation.

The conventional "consistency" form ignores rater mean offsets; the
"absolute" form counts them as disagreement.  Both are computed; absolute
is the default headline.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial.distance import cdist

from .cluster import GazeCluster
from .types import ImageGeometry

log = logging.getLogger(__name__)

CONSISTENCY = "consistency"
ABSOLUTE = "absolute"


@dataclass(frozen=True)
class CentroidSequence:
    """Temporally ordered region centroids from one source on one case."""

    points: tuple[tuple[float, float], ...]
    source: str
    case_id: str
    category: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.points:
            raise ValueError("centroid sequence must be non-empty")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.float64)


@dataclass(frozen=True)
class IccResult:
    value: float
    variant: str
    degenerate: bool = False


@dataclass(frozen=True)
class AgreementReport:
    icc_x: float
    icc_y: float
    icc_variant: str
    n_pairs: int
    dtw_cost: float
    per_case: tuple[dict, ...] = ()


def dtw_align(
    a: Union[CentroidSequence, np.ndarray], b: Union[CentroidSequence, np.ndarray]
) -> tuple[list[tuple[int, int]], float]:
    """Optimal monotone alignment of two point sequences.

    Euclidean point distance, steps {(1,0), (0,1), (1,1)}, no window.  The
    returned path starts at (0, 0), ends at (len(a)-1, len(b)-1), and the
    cost is the sum of matched distances along it.  Backtracking prefers
    the diagonal on ties, which pins the path deterministically.
    """
    pa = a.as_array() if isinstance(a, CentroidSequence) else np.asarray(a, float)
    pb = b.as_array() if isinstance(b, CentroidSequence) else np.asarray(b, float)
    if pa.ndim == 1:
        pa = pa[:, None]
    if pb.ndim == 1:
        pb = pb[:, None]
    n, m = len(pa), len(pb)
    if n == 0 or m == 0:
        raise ValueError("sequences must be non-empty")
    d = cdist(pa, pb)

    cost = np.full((n, m), np.inf)
    cost[0, 0] = d[0, 0]
    for i in range(1, n):
        cost[i, 0] = cost[i - 1, 0] + d[i, 0]
    for j in range(1, m):
        cost[0, j] = cost[0, j - 1] + d[0, j]
    for i in range(1, n):
        for j in range(1, m):
            cost[i, j] = d[i, j] + min(
                cost[i - 1, j - 1], cost[i - 1, j], cost[i, j - 1]
            )

    path = [(n - 1, m - 1)]
    i, j = n - 1, m - 1
    while (i, j) != (0, 0):
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            steps = (
                (cost[i - 1, j - 1], i - 1, j - 1),
                (cost[i - 1, j], i - 1, j),
                (cost[i, j - 1], i, j - 1),
            )
            _, i, j = min(steps, key=lambda s: s[0])
        path.append((i, j))
    path.reverse()
    return path, float(cost[n - 1, m - 1])


def collapse_path(
    path: Sequence[tuple[int, int]], a: np.ndarray, b: np.ndarray
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Reduce many-to-one alignment runs to single pairs.

    A run where one index repeats is replaced by one pair whose repeated
    side keeps its point and whose other side is the mean of its matched
    points.  Diagonal steps pass through unchanged.
    """
    pairs = []
    t = 0
    while t < len(path):
        i, j = path[t]
        u = t
        while u + 1 < len(path) and path[u + 1][0] == i:
            u += 1
        v = t
        while v + 1 < len(path) and path[v + 1][1] == j:
            v += 1
        if u > t:
            js = [jj for _, jj in path[t : u + 1]]
            pairs.append((a[i], b[js].mean(axis=0)))
            t = u + 1
        elif v > t:
            iis = [ii for ii, _ in path[t : v + 1]]
            pairs.append((a[iis].mean(axis=0), b[j]))
            t = v + 1
        else:
            pairs.append((a[i], b[j]))
            t += 1
    return pairs


def icc(ratings: np.ndarray, variant: str = ABSOLUTE) -> IccResult:
    """Single-measure intraclass correlation from a two-way mixed model.

    ``ratings`` is an (n_subjects, k_raters) matrix with no missing cells.
    Mean squares come from the standard two-way ANOVA decomposition:

        MSR = k * sum_i (row_i - grand)^2 / (n - 1)
        MSC = n * sum_j (col_j - grand)^2 / (k - 1)
        MSE = sum_ij (x_ij - row_i - col_j + grand)^2 / ((n-1)(k-1))

        consistency = (MSR - MSE) / (MSR + (k-1) MSE)
        absolute    = (MSR - MSE) / (MSR + (k-1) MSE + k/n (MSC - MSE))

    A matrix with zero subject and residual variance yields a flagged
    degenerate result rather than a division error.
    """
    x = np.asarray(ratings, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 2:
        raise ValueError(f"ratings must be (n>=2, k>=2), got {x.shape}")
    if not np.isfinite(x).all():
        raise ValueError("ratings contain non-finite cells")
    if variant not in (CONSISTENCY, ABSOLUTE):
        raise ValueError(f"unknown variant {variant!r}")

    n, k = x.shape
    grand = x.mean()
    rows = x.mean(axis=1)
    cols = x.mean(axis=0)
    msr = k * ((rows - grand) ** 2).sum() / (n - 1)
    msc = n * ((cols - grand) ** 2).sum() / (k - 1)
    resid = x - rows[:, None] - cols[None, :] + grand
    mse = (resid**2).sum() / ((n - 1) * (k - 1))

    if variant == CONSISTENCY:
        denom = msr + (k - 1) * mse
    else:
        denom = msr + (k - 1) * mse + (k / n) * (msc - mse)
    if denom == 0:
        return IccResult(float("nan"), variant, degenerate=True)
    return IccResult(float((msr - mse) / denom), variant)


def dtw_icc_agreement(
    model_seq: CentroidSequence,
    reader_seq: CentroidSequence,
    more_pairs: Sequence[tuple[CentroidSequence, CentroidSequence]] = (),
    variant: str = ABSOLUTE,
) -> AgreementReport:
    """Warp each sequence pair, pool matched pairs, and score per-axis ICC."""
    all_pairs = [(model_seq, reader_seq), *more_pairs]
    pooled: list[tuple[np.ndarray, np.ndarray]] = []
    per_case = []
    total_cost = 0.0
    for sa, sb in all_pairs:
        path, cost = dtw_align(sa, sb)
        pairs = collapse_path(path, sa.as_array(), sb.as_array())
        pooled.extend(pairs)
        total_cost += cost
        per_case.append(
            {"case_id": sa.case_id, "dtw_cost": cost, "n_pairs": len(pairs)}
        )
    if len(pooled) < 2:
        raise ValueError(f"need >= 2 pooled pairs, got {len(pooled)}")
    mat = np.array([[pa, pb] for pa, pb in pooled])  # (n_pairs, 2, 2)
    icc_x = icc(mat[:, :, 0], variant)
    icc_y = icc(mat[:, :, 1], variant)
    return AgreementReport(
        icc_x=icc_x.value,
        icc_y=icc_y.value,
        icc_variant=variant,
        n_pairs=len(pooled),
        dtw_cost=total_cost,
        per_case=tuple(per_case),
    )


def rsa_map(
    clusters: Sequence[GazeCluster],
    geom: ImageGeometry,
    sigma_divisor: float = 4.0,
    sigma_min: float = 1.0,
) -> np.ndarray:
    """Reconstruct a denoised attention map from region centroids and boxes.

    Each region contributes a unit-peak anisotropic Gaussian centered at
    its centroid with per-axis sigma = box extent / ``sigma_divisor``
    (so the box spans roughly +/- 2 sigma), floored at ``sigma_min`` px,
    evaluated over the full image.
    """
    if not clusters:
        raise ValueError("need at least one cluster")
    ys = np.arange(geom.height, dtype=np.float64)[:, None]
    xs = np.arange(geom.width, dtype=np.float64)[None, :]
    out = np.zeros((geom.height, geom.width), dtype=np.float64)
    for c in clusters:
        cx, cy = c.centroid
        sx = max((c.bbox.x_max - c.bbox.x_min) / sigma_divisor, sigma_min)
        sy = max((c.bbox.y_max - c.bbox.y_min) / sigma_divisor, sigma_min)
        out += np.exp(-0.5 * (((xs - cx) / sx) ** 2 + ((ys - cy) / sy) ** 2))
    return out


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the flattened maps; in [0, 1] for non-negative maps."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0 or nb == 0:
        raise ValueError("cosine similarity undefined for a zero map")
    return float(np.tensordot(a, b) / (na * nb))


def similarity_matrix(
    readers: dict[str, dict[str, np.ndarray]]
) -> tuple[list[str], np.ndarray]:
    """Mean pairwise cosine similarity over shared cases.

    ``readers`` maps reader id -> {case id -> attention map}.  Returns the
    sorted ids and a symmetric matrix with unit diagonal; pairs with no
    shared case are flagged NaN.
    """
    ids = sorted(readers)
    if len(ids) < 2:
        raise ValueError("need at least two readers")
    k = len(ids)
    out = np.eye(k)
    for i in range(k):
        for j in range(i + 1, k):
            shared = sorted(set(readers[ids[i]]) & set(readers[ids[j]]))
            if not shared:
                log.warning("readers %s and %s share no cases", ids[i], ids[j])
                out[i, j] = out[j, i] = np.nan
                continue
            sims = [
                cosine_similarity(readers[ids[i]][c], readers[ids[j]][c])
                for c in shared
            ]
            out[i, j] = out[j, i] = float(np.mean(sims))
    return ids, out


def fused_category_map(maps: Sequence[np.ndarray]) -> np.ndarray:
    """Elementwise mean of same-shape maps."""
    if not maps:
        raise ValueError("need at least one map")
    first = maps[0]
    for m in maps[1:]:
        if m.shape != first.shape:
            raise ValueError(f"shape mismatch: {m.shape} vs {first.shape}")
    return np.mean(np.stack(maps), axis=0)


def report_to_json(report: AgreementReport) -> dict:
    return {
        "icc_x": report.icc_x,
        "icc_y": report.icc_y,
        "variant": report.icc_variant,
        "n_pairs": report.n_pairs,
        "dtw_cost": report.dtw_cost,
        "per_case": list(report.per_case),
    }


def save_report(path: Union[str, Path], report: AgreementReport) -> None:
    Path(path).write_text(
        json.dumps(report_to_json(report), indent=2) + "\n", encoding="utf-8"
    )
