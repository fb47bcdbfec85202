"""Core records shared across the toolkit.

Coordinates are stored as 64-bit floats in image pixel units, origin at the
top-left corner, x growing rightwards and y growing downwards.  Attention
maps are plain 2-D ``numpy.float64`` arrays indexed ``[y, x]`` (row-major);
their shape carries the image dimensions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

#: Fixed 14-label finding vocabulary used for category-level analyses.
CATEGORY_LABELS = (
    "Enlarged Cardiomediastinum",
    "Cardiomegaly",
    "Lung Opacity",
    "Lung Lesion",
    "Edema",
    "Consolidation",
    "Pneumonia",
    "Atelectasis",
    "Pneumothorax",
    "Pleural Effusion",
    "Pleural Other",
    "Fracture",
    "Support Devices",
    "No Finding",
)


class BBox(NamedTuple):
    """Axis-aligned box with inclusive integer pixel corners."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    @property
    def width(self) -> int:
        return self.x_max - self.x_min + 1

    @property
    def height(self) -> int:
        return self.y_max - self.y_min + 1

    @property
    def area(self) -> int:
        return self.width * self.height

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max


@dataclass(frozen=True)
class FixationPoint:
    """A single fixation: position, time interval, and angular resolution.

    ``ppd_x`` / ``ppd_y`` are the pixels-per-degree of visual angle at the
    fixation, which set the spatial footprint used when rasterizing.
    """

    x: float
    y: float
    t_start: float
    t_end: float
    ppd_x: float
    ppd_y: float

    def __post_init__(self) -> None:
        if not (self.t_end >= self.t_start):
            raise ValueError(f"t_end ({self.t_end}) < t_start ({self.t_start})")
        for name in ("ppd_x", "ppd_y"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v}")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class FindingMention:
    """A dictated finding with its onset time and optional category labels."""

    text: str
    t_mention: float
    categories: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("finding text must be non-empty")
        if self.t_mention < 0:
            raise ValueError(f"t_mention must be >= 0, got {self.t_mention}")


@dataclass(frozen=True)
class ImageGeometry:
    """Pixel dimensions of the working image plus the downsampling factor."""

    width: int
    height: int
    scale_factor: int = 4

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be >= 1")
        if self.scale_factor < 1:
            raise ValueError("scale_factor must be >= 1")


@dataclass(frozen=True)
class GazeSession:
    """One reading: ordered fixations plus the dictated findings.

    Invariants enforced at construction: fixations sorted by onset, every
    retained fixation inside the image.  Off-image samples are removed by
    the parser before a session is built; ``n_dropped_offscreen`` records
    how many were removed.
    """

    case_id: str
    reader_id: str
    image_width: int
    image_height: int
    fixations: tuple[FixationPoint, ...]
    findings: tuple[FindingMention, ...]
    phase: int
    n_dropped_offscreen: int = 0

    def __post_init__(self) -> None:
        if self.phase not in (1, 2, 3):
            raise ValueError(f"phase must be 1, 2 or 3, got {self.phase}")
        prev = -math.inf
        for i, f in enumerate(self.fixations):
            if f.t_start < prev:
                raise ValueError(
                    f"fixation {i} t_start {f.t_start} precedes previous {prev}"
                )
            prev = f.t_start
            if not (0 <= f.x < self.image_width and 0 <= f.y < self.image_height):
                raise ValueError(
                    f"fixation {i} at ({f.x}, {f.y}) outside "
                    f"{self.image_width}x{self.image_height} image"
                )

    @property
    def geometry(self) -> ImageGeometry:
        return ImageGeometry(self.image_width, self.image_height)

    @property
    def total_dwell(self) -> float:
        return sum(f.duration for f in self.fixations)
