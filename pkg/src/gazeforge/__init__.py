"""Gaze analytics toolkit.

Processing pipeline: parse timed fixation/transcript sessions, rescale
geometry, slice per-finding windows, rasterize duration-weighted Gaussian
attention maps, group fixations into density-based regions (centroid +
top-intensity box), and assemble per-finding and summary attention videos
plus the derived training records.

Analysis battery: grid dwell-time maps, inter-reader trajectory
correlation and dispersion, Wilcoxon significance tests, warped-sequence
ICC agreement, reconstructed-map cosine similarity, and grounding/report
evaluation metrics (mask IoU, detection AP, BLEU, ROUGE-L, simplified
METEOR, label F1, phrase-match accuracy).
"""

__version__ = "0.1.0"

from .types import (  # noqa: F401
    BBox,
    CATEGORY_LABELS,
    FindingMention,
    FixationPoint,
    GazeSession,
    ImageGeometry,
)
