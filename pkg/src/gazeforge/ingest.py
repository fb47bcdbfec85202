"""Session parsing, geometry rescaling, window slicing, and splitting.

Input formats
-------------
Fixation CSV (header required, UTF-8, LF)::

    case_id,reader_id,t_start_s,t_end_s,x_px,y_px,ppd_x,ppd_y

Transcript JSON: one object per session::

    {
      "case_id": "...", "reader_id": "...",
      "image_width": 2048, "image_height": 2560, "phase": 3,
      "findings": [
        {"text": "...", "t_mention_s": 12.5, "categories": ["Edema"]},
        ...
      ]
    }

Rows whose coordinates fall outside the image are dropped at parse time
(the drop count is kept on the session), so downstream code never needs
bounds checks.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, TextIO, Union

import numpy as np

from .types import FindingMention, FixationPoint, GazeSession, ImageGeometry

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = (
    "case_id",
    "reader_id",
    "t_start_s",
    "t_end_s",
    "x_px",
    "y_px",
    "ppd_x",
    "ppd_y",
)

PathOrFile = Union[str, Path, TextIO]


class IngestError(ValueError):
    """Base class for session parsing/validation failures."""


class SchemaError(IngestError):
    """The input is structurally wrong (missing columns or fields)."""


class RowParseError(IngestError):
    """A data row could not be interpreted. Carries the 1-based row index."""

    def __init__(self, row_index: int, message: str):
        super().__init__(f"row {row_index}: {message}")
        self.row_index = row_index


class SessionValidationError(IngestError):
    """Parsed values violate a session-level invariant."""


def _open_text(src: PathOrFile):
    """Return (file object, needs_close) for a path or an open stream."""
    if isinstance(src, (str, Path)):
        return open(src, "r", encoding="utf-8", newline=""), True
    return src, False


def parse_session(
    fixation_table: PathOrFile,
    transcript: PathOrFile,
    image_meta: Optional[ImageGeometry] = None,
) -> GazeSession:
    """Parse one fixation CSV and its transcript JSON into a GazeSession.

    ``image_meta`` overrides the transcript's image dimensions when given;
    otherwise dimensions come from the transcript envelope.  Off-image
    fixations are dropped (count logged and stored on the session).

    Raises SchemaError for missing columns/fields, RowParseError for
    malformed rows, and SessionValidationError for non-monotone timestamps,
    identity mismatches, or an empty fixation table.
    """
    fh, close_t = _open_text(transcript)
    try:
        envelope = json.load(fh)
    finally:
        if close_t:
            fh.close()
    for key in ("case_id", "reader_id", "image_width", "image_height", "phase"):
        if key not in envelope:
            raise SchemaError(f"transcript missing required field '{key}'")
    case_id = str(envelope["case_id"])
    reader_id = str(envelope["reader_id"])
    width = int(image_meta.width if image_meta else envelope["image_width"])
    height = int(image_meta.height if image_meta else envelope["image_height"])
    phase = int(envelope["phase"])

    findings = []
    for k, entry in enumerate(envelope.get("findings", [])):
        if "text" not in entry or "t_mention_s" not in entry:
            raise SchemaError(f"finding {k} missing 'text' or 't_mention_s'")
        findings.append(
            FindingMention(
                text=str(entry["text"]),
                t_mention=float(entry["t_mention_s"]),
                categories=tuple(entry.get("categories", ())),
            )
        )

    fh, close_f = _open_text(fixation_table)
    try:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError("fixation table has no header")
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"fixation table missing columns: {', '.join(missing)}")

        fixations: list[FixationPoint] = []
        n_dropped = 0
        prev_t = -math.inf
        for idx, row in enumerate(reader, start=1):
            try:
                x = float(row["x_px"])
                y = float(row["y_px"])
                point = FixationPoint(
                    x=x,
                    y=y,
                    t_start=float(row["t_start_s"]),
                    t_end=float(row["t_end_s"]),
                    ppd_x=float(row["ppd_x"]),
                    ppd_y=float(row["ppd_y"]),
                )
            except (TypeError, ValueError) as exc:
                raise RowParseError(idx, str(exc)) from exc
            if row["case_id"] != case_id or row["reader_id"] != reader_id:
                raise SessionValidationError(
                    f"row {idx} belongs to "
                    f"({row['case_id']}, {row['reader_id']}), "
                    f"expected ({case_id}, {reader_id})"
                )
            if point.t_start < prev_t:
                raise SessionValidationError(
                    f"row {idx}: t_start {point.t_start} precedes previous {prev_t}"
                )
            prev_t = point.t_start
            if not (0 <= x < width and 0 <= y < height):
                n_dropped += 1
                continue
            fixations.append(point)
    finally:
        if close_f:
            fh.close()

    if n_dropped:
        log.warning(
            "%s/%s: dropped %d off-image fixation(s)", case_id, reader_id, n_dropped
        )
    if not fixations:
        raise SessionValidationError("no fixations")
    return GazeSession(
        case_id=case_id,
        reader_id=reader_id,
        image_width=width,
        image_height=height,
        fixations=tuple(fixations),
        findings=tuple(findings),
        phase=phase,
        n_dropped_offscreen=n_dropped,
    )


def rescale(session: GazeSession, factor: int) -> GazeSession:
    """Downscale a session's geometry by an integer factor.

    Image dimensions use integer division; coordinates and per-point
    angular resolution divide as reals, so a fixation's footprint in
    degrees of visual angle is unchanged.  Coordinates that land exactly
    on the shrunken boundary (possible when a dimension is not divisible
    by the factor) are clamped just inside it.
    """
    if factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor}")
    if factor == 1:
        return session
    w = session.image_width // factor
    h = session.image_height // factor
    x_hi = float(np.nextafter(w, 0))
    y_hi = float(np.nextafter(h, 0))
    fixations = tuple(
        replace(
            f,
            x=min(f.x / factor, x_hi),
            y=min(f.y / factor, y_hi),
            ppd_x=f.ppd_x / factor,
            ppd_y=f.ppd_y / factor,
        )
        for f in session.fixations
    )
    return replace(session, image_width=w, image_height=h, fixations=fixations)


def window_fixations(
    session: GazeSession, mention: FindingMention, window_s: float = 2.5
) -> list[FixationPoint]:
    """Fixations overlapping the window ending at the mention time.

    The window is ``[max(0, t_mention - window_s), t_mention]``.  A fixation
    is kept when its interval intersects the window with positive length;
    its endpoints are clipped to the window so dwell time is never counted
    twice across adjacent findings.  Temporal order is preserved.
    """
    lo = max(0.0, mention.t_mention - window_s)
    hi = mention.t_mention
    out = []
    for f in session.fixations:
        a = max(f.t_start, lo)
        b = min(f.t_end, hi)
        if b > a:
            out.append(replace(f, t_start=a, t_end=b))
    return out


def split_train_test(
    cases: Sequence[GazeSession],
    seed: int,
    test_fraction: float = 0.2,
    phase3_sample: Optional[int] = None,
) -> tuple[list[GazeSession], list[GazeSession]]:
    """Split sessions into train/test: all phase-2 plus sampled phase-3 in test.

    The phase-3 sample size defaults to whatever tops the test set up to
    ``test_fraction`` of the total; pass ``phase3_sample`` to fix it
    explicitly (the source protocol used 350).  Deterministic for a fixed
    seed.  Emits a warning when the requested fraction cannot be reached.
    """
    n_total = len(cases)
    phase3_idx = [i for i, s in enumerate(cases) if s.phase == 3]
    n_phase2 = sum(1 for s in cases if s.phase == 2)

    if phase3_sample is None:
        want = int(round(test_fraction * n_total)) - n_phase2
    else:
        want = int(phase3_sample)
    size = max(0, min(want, len(phase3_idx)))
    if size != want:
        log.warning(
            "phase-3 pool (%d) cannot supply %d samples; using %d",
            len(phase3_idx),
            want,
            size,
        )

    rng = np.random.default_rng(seed)
    sampled = set(rng.choice(phase3_idx, size=size, replace=False).tolist()) if size else set()
    test = [s for i, s in enumerate(cases) if s.phase == 2 or i in sampled]
    train = [s for i, s in enumerate(cases) if not (s.phase == 2 or i in sampled)]
    return train, test


# --- session (de)serialization ------------------------------------------------

def session_to_dict(session: GazeSession) -> dict:
    """JSON-ready representation with exact float round-trip."""
    return {
        "case_id": session.case_id,
        "reader_id": session.reader_id,
        "image_width": session.image_width,
        "image_height": session.image_height,
        "phase": session.phase,
        "n_dropped_offscreen": session.n_dropped_offscreen,
        "fixations": [
            [f.x, f.y, f.t_start, f.t_end, f.ppd_x, f.ppd_y]
            for f in session.fixations
        ],
        "findings": [
            {
                "text": m.text,
                "t_mention_s": m.t_mention,
                "categories": list(m.categories),
            }
            for m in session.findings
        ],
    }


def session_from_dict(data: dict) -> GazeSession:
    return GazeSession(
        case_id=data["case_id"],
        reader_id=data["reader_id"],
        image_width=data["image_width"],
        image_height=data["image_height"],
        phase=data["phase"],
        n_dropped_offscreen=data.get("n_dropped_offscreen", 0),
        fixations=tuple(FixationPoint(*row) for row in data["fixations"]),
        findings=tuple(
            FindingMention(
                text=m["text"],
                t_mention=m["t_mention_s"],
                categories=tuple(m.get("categories", ())),
            )
            for m in data["findings"]
        ),
    )


def save_session(path: Union[str, Path], session: GazeSession) -> None:
    Path(path).write_text(
        json.dumps(session_to_dict(session), indent=2) + "\n", encoding="utf-8"
    )


def load_session(path: Union[str, Path]) -> GazeSession:
    return session_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def session_to_fixation_csv(session: GazeSession) -> str:
    """Render the session's fixations in the input CSV format."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REQUIRED_COLUMNS)
    for f in session.fixations:
        writer.writerow(
            [
                session.case_id,
                session.reader_id,
                repr(f.t_start),
                repr(f.t_end),
                repr(f.x),
                repr(f.y),
                repr(f.ppd_x),
                repr(f.ppd_y),
            ]
        )
    return buf.getvalue()


def session_to_transcript_json(session: GazeSession) -> dict:
    """Render the session's findings in the transcript envelope format."""
    return {
        "case_id": session.case_id,
        "reader_id": session.reader_id,
        "image_width": session.image_width,
        "image_height": session.image_height,
        "phase": session.phase,
        "findings": [
            {
                "text": m.text,
                "t_mention_s": m.t_mention,
                "categories": list(m.categories),
            }
            for m in session.findings
        ],
    }
