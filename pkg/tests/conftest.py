import numpy as np
import pytest

from gazeforge.types import FindingMention, FixationPoint, GazeSession


def make_fixation(x, y, t_start=0.0, t_end=0.25, ppd=2.0, ppd_y=None):
    return FixationPoint(
        x=x, y=y, t_start=t_start, t_end=t_end, ppd_x=ppd, ppd_y=ppd_y or ppd
    )


def make_session(
    points,
    findings=(),
    width=100,
    height=100,
    case_id="case0",
    reader_id="reader0",
    phase=3,
):
    """Build a session from (x, y, t_start, t_end[, ppd]) tuples."""
    fixations = []
    for p in points:
        ppd = p[4] if len(p) > 4 else 2.0
        fixations.append(make_fixation(p[0], p[1], p[2], p[3], ppd))
    return GazeSession(
        case_id=case_id,
        reader_id=reader_id,
        image_width=width,
        image_height=height,
        fixations=tuple(fixations),
        findings=tuple(findings),
        phase=phase,
    )


def make_finding(t_mention, text="a finding", categories=()):
    return FindingMention(text=text, t_mention=t_mention, categories=tuple(categories))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
