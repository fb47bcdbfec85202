"""Gaussian attention maps and region extraction.

A fixation is rasterized as a unit-mass 2-D Gaussian density sampled at
pixel centers (integer coordinates), scaled by the fixation duration, so a
summed map is proportional to dwell time.  Evaluation is restricted to a
square window of half-width ``ceil(3 * max(sigma_x, sigma_y))`` around the
fixation, which carries more than 99% of the mass; the map is zero outside.

The per-axis sigma equals the fixation's pixels-per-degree value times a
configurable multiplier (default 1.0, i.e. one degree of visual angle).
"""
from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
from PIL import Image

from .types import BBox, FixationPoint, ImageGeometry

GRID_MAGIC = b"ATNM"


class EmptyMapError(ValueError):
    """Raised when an operation needs a map with positive mass."""


def fixation_gaussian(
    point: FixationPoint, geom: ImageGeometry, sigma_scale: float = 1.0
) -> np.ndarray:
    """Rasterize one fixation into a duration-weighted Gaussian map.

    Returns a full-size (height, width) float64 array, nonzero only inside
    the clipped 3-sigma window around the fixation.
    """
    sx = point.ppd_x * sigma_scale
    sy = point.ppd_y * sigma_scale
    if sx <= 0 or sy <= 0:
        raise ValueError(f"sigma must be > 0, got ({sx}, {sy})")
    if not (0 <= point.x < geom.width and 0 <= point.y < geom.height):
        raise ValueError(f"fixation ({point.x}, {point.y}) outside image")

    half = math.ceil(3.0 * max(sx, sy))
    x0 = max(0, math.floor(point.x - half))
    x1 = min(geom.width - 1, math.ceil(point.x + half))
    y0 = max(0, math.floor(point.y - half))
    y1 = min(geom.height - 1, math.ceil(point.y + half))

    xs = np.arange(x0, x1 + 1, dtype=np.float64)
    ys = np.arange(y0, y1 + 1, dtype=np.float64)
    gx = np.exp(-0.5 * ((xs - point.x) / sx) ** 2) / (sx * math.sqrt(2.0 * math.pi))
    gy = np.exp(-0.5 * ((ys - point.y) / sy) ** 2) / (sy * math.sqrt(2.0 * math.pi))

    out = np.zeros((geom.height, geom.width), dtype=np.float64)
    out[y0 : y1 + 1, x0 : x1 + 1] = point.duration * np.outer(gy, gx)
    return out


def accumulate(
    points: Iterable[FixationPoint], geom: ImageGeometry, sigma_scale: float = 1.0
) -> np.ndarray:
    """Sum the Gaussian maps of all fixations (zero map for an empty list)."""
    out = np.zeros((geom.height, geom.width), dtype=np.float64)
    for p in points:
        out += fixation_gaussian(p, geom, sigma_scale)
    return out


def map_mass(values: np.ndarray) -> float:
    return float(values.sum())


def weighted_centroid(values: np.ndarray) -> tuple[float, float]:
    """Intensity-weighted mean pixel coordinate (x, y) of a map.

    Pixel centers sit at integer coordinates.  Raises EmptyMapError on a
    map with no mass.
    """
    total = values.sum()
    if total <= 0:
        raise EmptyMapError("empty map")
    h, w = values.shape
    cx = float((values.sum(axis=0) @ np.arange(w)) / total)
    cy = float((values.sum(axis=1) @ np.arange(h)) / total)
    return cx, cy


def top_intensity_bbox(values: np.ndarray, fraction: float = 0.2) -> BBox:
    """Bounding box of the top-``fraction`` highest-intensity pixels.

    The selection counts only strictly positive pixels: it takes the
    ``ceil(fraction * P)`` brightest of the P positive pixels, extended to
    every pixel tied with the cutoff value.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    pos = values > 0
    if not pos.any():
        raise EmptyMapError("empty map")
    vals = values[pos]
    k = math.ceil(fraction * vals.size)
    cutoff = np.partition(vals, vals.size - k)[vals.size - k]
    ys, xs = np.nonzero(values >= cutoff)
    return BBox(int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max()))


# --- attention-map file formats -----------------------------------------------

def save_grid(path: Union[str, Path], values: np.ndarray) -> None:
    """Write a map as little-endian binary: magic, u32 dims, float64 grid."""
    arr = np.ascontiguousarray(values, dtype="<f8")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(GRID_MAGIC)
        fh.write(struct.pack("<II", w, h))
        fh.write(arr.tobytes())


def load_grid(path: Union[str, Path]) -> np.ndarray:
    data = Path(path).read_bytes()
    if data[:4] != GRID_MAGIC:
        raise ValueError(f"{path}: bad magic {data[:4]!r}")
    w, h = struct.unpack("<II", data[4:12])
    expected = 12 + 8 * w * h
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, got {len(data)}")
    return np.frombuffer(data, dtype="<f8", offset=12).reshape(h, w).copy()


def to_png(path: Union[str, Path], values: np.ndarray) -> None:
    """Export a map as 8-bit grayscale, min-max normalized (lossy)."""
    lo = float(values.min())
    hi = float(values.max())
    if hi > lo:
        norm = (values - lo) / (hi - lo)
    else:
        norm = np.zeros_like(values)
    Image.fromarray(np.round(norm * 255).astype(np.uint8), mode="L").save(path)
