"""Density-based grouping of fixations into refined attention regions.

The clustering step runs on fixation points, by default in normalized
[0, 1]^2 coordinates so the radius parameter is independent of image size.
Conventions are pinned for reproducibility: the neighborhood is inclusive
(d <= eps), a point counts itself toward the density threshold, and border
points join the first cluster that reaches them under input-order scanning.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import heatmap
from .types import BBox, FixationPoint, ImageGeometry

log = logging.getLogger(__name__)

NOISE = -1
_UNVISITED = -2


@dataclass(frozen=True)
class ClusterParams:
    """DBSCAN settings. ``eps`` is in the units of ``coordinate_space``."""

    eps: float = 0.3
    min_pts: int = 10
    coordinate_space: str = "normalized"  # or "pixel"

    def __post_init__(self) -> None:
        if self.eps <= 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")
        if self.coordinate_space not in ("normalized", "pixel"):
            raise ValueError(f"unknown coordinate_space {self.coordinate_space!r}")


@dataclass(frozen=True)
class GazeCluster:
    """One refined attention region: points, heatmap, centroid, box."""

    points: tuple[FixationPoint, ...]
    values: np.ndarray
    centroid: tuple[float, float]
    bbox: BBox
    t_first: float


def dbscan(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Label points with cluster ids (0..k-1) or -1 for noise.

    Classic density-based clustering with Euclidean distance.  A point is
    a core point when at least ``min_pts`` points (itself included) lie
    within ``eps`` (inclusive).  Clusters are maximal density-connected
    sets; non-core points in range of a core point are border points and
    are assigned to the first cluster discovered adjacent to them while
    scanning in input order, which makes the labels deterministic.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"points must have shape (n, 2), got {pts.shape}")
    n = len(pts)
    labels = np.full(n, _UNVISITED, dtype=np.int64)

    def region(i: int) -> np.ndarray:
        d2 = ((pts - pts[i]) ** 2).sum(axis=1)
        return np.nonzero(d2 <= eps * eps)[0]

    cluster_id = 0
    for i in range(n):
        if labels[i] != _UNVISITED:
            continue
        nbrs = region(i)
        if len(nbrs) < min_pts:
            labels[i] = NOISE
            continue
        labels[i] = cluster_id
        queue = list(nbrs)
        k = 0
        while k < len(queue):
            j = queue[k]
            k += 1
            if labels[j] == NOISE:
                labels[j] = cluster_id  # border point, claimed by this cluster
            if labels[j] != _UNVISITED:
                continue
            labels[j] = cluster_id
            nbrs_j = region(j)
            if len(nbrs_j) >= min_pts:
                queue.extend(nbrs_j)
        cluster_id += 1
    return labels


def cluster_to_region(
    cluster_points: Sequence[FixationPoint],
    geom: ImageGeometry,
    sigma_scale: float = 1.0,
    bbox_fraction: float = 0.2,
) -> GazeCluster:
    """Refine a point group into heatmap + weighted centroid + intensity box.

    The box covers the top-``bbox_fraction`` highest-intensity pixels and is
    expanded minimally when the global centroid falls outside it (possible
    for strongly bimodal groups), so a region always contains its centroid.
    """
    if not cluster_points:
        raise ValueError("cluster_points must be non-empty")
    values = heatmap.accumulate(cluster_points, geom, sigma_scale)
    cx, cy = heatmap.weighted_centroid(values)
    box = heatmap.top_intensity_bbox(values, bbox_fraction)
    px = min(max(int(cx), 0), geom.width - 1)
    py = min(max(int(cy), 0), geom.height - 1)
    if not box.contains(px, py):
        box = BBox(
            min(box.x_min, px),
            min(box.y_min, py),
            max(box.x_max, px),
            max(box.y_max, py),
        )
    return GazeCluster(
        points=tuple(cluster_points),
        values=values,
        centroid=(cx, cy),
        bbox=box,
        t_first=min(p.t_start for p in cluster_points),
    )


def order_clusters(clusters: Sequence[GazeCluster]) -> list[GazeCluster]:
    """Stable sort by first-fixation time."""
    return sorted(clusters, key=lambda c: c.t_first)


def cluster_fixations(
    fixations: Sequence[FixationPoint],
    geom: ImageGeometry,
    params: Optional[ClusterParams] = None,
    sigma_scale: float = 1.0,
) -> tuple[list[GazeCluster], int]:
    """Full grouping step: DBSCAN on fixation positions, then refinement.

    Returns the temporally ordered regions plus the noise-point count.
    Noise points are excluded from every region.
    """
    params = params or ClusterParams()
    if not fixations:
        return [], 0
    pts = np.array([(f.x, f.y) for f in fixations], dtype=np.float64)
    if params.coordinate_space == "normalized":
        pts = pts / np.array([geom.width, geom.height], dtype=np.float64)
    labels = dbscan(pts, params.eps, params.min_pts)

    regions = []
    for cid in range(labels.max() + 1 if labels.size else 0):
        members = [f for f, lab in zip(fixations, labels) if lab == cid]
        regions.append(cluster_to_region(members, geom, sigma_scale))
    n_noise = int((labels == NOISE).sum())
    return order_clusters(regions), n_noise


# --- cluster dump format ------------------------------------------------------

def clusters_to_dict(
    finding_index: int, clusters: Sequence[GazeCluster], n_noise: int
) -> dict:
    """JSON-ready per-finding cluster dump."""
    return {
        "finding_index": finding_index,
        "clusters": [
            {
                "centroid": [c.centroid[0], c.centroid[1]],
                "bbox": list(c.bbox),
                "n_points": len(c.points),
                "t_first": c.t_first,
            }
            for c in clusters
        ],
        "n_noise": n_noise,
    }


def save_cluster_dumps(path: Union[str, Path], dumps: Sequence[dict]) -> None:
    Path(path).write_text(json.dumps(list(dumps), indent=2) + "\n", encoding="utf-8")


def load_cluster_dumps(path: Union[str, Path]) -> list[dict]:
    return json.loads(Path(path).read_text(encoding="utf-8"))
