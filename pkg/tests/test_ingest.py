import io
import json

import numpy as np
import pytest

from conftest import make_finding, make_session
from gazeforge import ingest
from gazeforge.ingest import (
    RowParseError,
    SchemaError,
    SessionValidationError,
    parse_session,
    rescale,
    split_train_test,
    window_fixations,
)
from gazeforge.types import FindingMention, FixationPoint, GazeSession

HEADER = "case_id,reader_id,t_start_s,t_end_s,x_px,y_px,ppd_x,ppd_y"


def csv_stream(rows):
    return io.StringIO("\n".join([HEADER] + rows) + "\n")


def transcript_stream(findings=(), width=200, height=100, case="c1", reader="r1", phase=3):
    return io.StringIO(
        json.dumps(
            {
                "case_id": case,
                "reader_id": reader,
                "image_width": width,
                "image_height": height,
                "phase": phase,
                "findings": [
                    {"text": t, "t_mention_s": m, "categories": list(c)}
                    for t, m, c in findings
                ],
            }
        )
    )


def test_parse_well_formed():
    rows = [
        "c1,r1,0.0,0.2,10,20,30,31",
        "c1,r1,0.3,0.5,50,60,30,31",
        "c1,r1,0.6,0.9,90,40,30,31",
    ]
    session = parse_session(
        csv_stream(rows), transcript_stream(findings=[("opacity", 1.0, ["Edema"])])
    )
    assert len(session.fixations) == 3
    assert len(session.findings) == 1
    assert session.findings[0].categories == ("Edema",)
    assert session.n_dropped_offscreen == 0
    assert session.phase == 3


def test_parse_drops_off_image_rows():
    rows = [
        "c1,r1,0.0,0.2,10,20,30,31",
        "c1,r1,0.3,0.5,210,60,30,31",  # x = width + 10
        "c1,r1,0.6,0.9,90,40,30,31",
    ]
    session = parse_session(csv_stream(rows), transcript_stream())
    assert len(session.fixations) == 2
    assert session.n_dropped_offscreen == 1


def test_parse_empty_table_errors():
    with pytest.raises(SessionValidationError, match="no fixations"):
        parse_session(csv_stream([]), transcript_stream())


def test_parse_malformed_row_reports_index():
    rows = ["c1,r1,0.0,0.2,10,20,30,31", "c1,r1,oops,0.5,50,60,30,31"]
    with pytest.raises(RowParseError) as err:
        parse_session(csv_stream(rows), transcript_stream())
    assert err.value.row_index == 2


def test_parse_missing_column_is_schema_error():
    bad = io.StringIO("case_id,reader_id,t_start_s,t_end_s,x_px,y_px,ppd_x\n")
    with pytest.raises(SchemaError, match="ppd_y"):
        parse_session(bad, transcript_stream())


def test_parse_non_monotone_timestamps_error():
    rows = ["c1,r1,1.0,1.2,10,20,30,31", "c1,r1,0.5,0.7,50,60,30,31"]
    with pytest.raises(SessionValidationError, match="precedes"):
        parse_session(csv_stream(rows), transcript_stream())


def test_parse_identity_mismatch_error():
    rows = ["c1,r1,0.0,0.2,10,20,30,31", "cX,r1,0.3,0.5,50,60,30,31"]
    with pytest.raises(SessionValidationError, match="belongs to"):
        parse_session(csv_stream(rows), transcript_stream())


def test_parse_missing_envelope_field():
    with pytest.raises(SchemaError, match="phase"):
        parse_session(
            csv_stream(["c1,r1,0.0,0.2,10,20,30,31"]),
            io.StringIO('{"case_id": "c1", "reader_id": "r1", "image_width": 10, "image_height": 10}'),
        )


# --- rescale -------------------------------------------------------------------

def test_rescale_dims_and_area():
    s = make_session([(100, 200, 0.0, 0.2)], width=2048, height=2560)
    r = rescale(s, 4)
    assert (r.image_width, r.image_height) == (512, 640)
    assert r.image_width * r.image_height * 16 == 2048 * 2560


def test_rescale_coordinates_and_ppd():
    s = make_session([(100, 200, 0.0, 0.2, 32.0)], width=2048, height=2560)
    r = rescale(s, 4)
    f = r.fixations[0]
    assert (f.x, f.y) == (25.0, 50.0)
    assert f.ppd_x == 8.0 and f.ppd_y == 8.0


def test_rescale_factor_one_is_identity():
    s = make_session([(100, 200, 0.0, 0.2)], width=300, height=300)
    assert rescale(s, 1) is s


def test_rescale_factor_zero_errors():
    s = make_session([(1, 1, 0.0, 0.2)])
    with pytest.raises(ValueError):
        rescale(s, 0)


def test_rescale_composition_within_one_pixel():
    s = make_session([(5, 5, 0.0, 0.2)], width=1037, height=911)
    a, b = 2, 3
    r1 = rescale(rescale(s, a), b)
    r2 = rescale(s, a * b)
    assert abs(r1.image_width - r2.image_width) <= 1
    assert abs(r1.image_height - r2.image_height) <= 1


def test_rescale_clamps_boundary_sliver():
    # width 2050 -> 512; a fixation at x=2049 maps to 512.25, clamped inside
    s = make_session([(2049, 10, 0.0, 0.2)], width=2050, height=100)
    r = rescale(s, 4)
    assert 0 <= r.fixations[0].x < r.image_width


# --- windows ---------------------------------------------------------------------

def _window_oracle(fixations, lo, hi):
    """Independent interval-intersection computation."""
    out = []
    for f in fixations:
        a, b = max(f.t_start, lo), min(f.t_end, hi)
        if b > a:
            out.append((f.x, f.y, a, b))
    return out


def test_window_membership():
    s = make_session(
        [(1, 1, 6.9, 7.1), (2, 2, 8.0, 8.2), (3, 3, 9.5, 9.7)]
    )
    got = window_fixations(s, make_finding(10.0), 2.5)
    assert [(f.x, f.y) for f in got] == [(2, 2), (3, 3)]


def test_window_clipped_to_session_start():
    s = make_session([(1, 1, 0.0, 0.3), (2, 2, 0.5, 0.8)])
    got = window_fixations(s, make_finding(1.0), 2.5)
    # window is [0, 1.0]; both fixations inside, unclipped
    assert len(got) == 2
    assert got[0].t_start == 0.0


def test_window_partial_overlap_is_clipped():
    s = make_session([(1, 1, 7.0, 8.0)])
    got = window_fixations(s, make_finding(10.0), 2.5)  # window [7.5, 10.0]
    assert len(got) == 1
    assert got[0].t_start == 7.5 and got[0].t_end == 8.0
    assert got[0].duration == 0.5


def test_window_matches_interval_oracle(rng):
    for _ in range(50):
        n = rng.integers(1, 12)
        t = 0.0
        pts = []
        for _ in range(n):
            dur = rng.uniform(0.05, 0.6)
            pts.append((rng.uniform(0, 99), rng.uniform(0, 99), t, t + dur))
            t += dur + rng.uniform(0.0, 0.3)
        s = make_session(pts)
        t_mention = rng.uniform(0.0, t)
        lo, hi = max(0.0, t_mention - 2.5), t_mention
        got = window_fixations(s, make_finding(t_mention), 2.5)
        want = _window_oracle(s.fixations, lo, hi)
        assert [(f.x, f.y, f.t_start, f.t_end) for f in got] == want


def test_window_duration_budget(rng):
    s = make_session(
        [(1, 1, i * 0.4, i * 0.4 + 0.35) for i in range(30)]
    )
    got = window_fixations(s, make_finding(8.0), 2.5)
    longest = max(f.duration for f in s.fixations)
    assert sum(f.duration for f in got) <= 2.5 + longest


# --- split ------------------------------------------------------------------------

def _bulk_sessions(n_phase1, n_phase2, n_phase3):
    out = []
    for i, phase in enumerate(
        [1] * n_phase1 + [2] * n_phase2 + [3] * n_phase3
    ):
        out.append(
            GazeSession(
                case_id=f"c{i}",
                reader_id="r",
                image_width=8,
                image_height=8,
                fixations=(FixationPoint(1, 1, 0.0, 0.1, 2, 2),),
                findings=(),
                phase=phase,
            )
        )
    return out


def test_split_reproduces_protocol_sizes():
    cases = _bulk_sessions(285, 240, 2507)
    train, test = split_train_test(cases, seed=11, phase3_sample=350)
    assert len(test) == 590 and len(train) == 2442
    assert sum(1 for s in test if s.phase == 2) == 240
    assert sum(1 for s in test if s.phase == 3) == 350


def test_split_default_sizing_hits_fraction():
    cases = _bulk_sessions(285, 240, 2507)
    train, test = split_train_test(cases, seed=11)
    assert len(test) == round(0.2 * len(cases))


def test_split_deterministic_and_seed_sensitive():
    cases = _bulk_sessions(20, 30, 150)
    t1 = split_train_test(cases, seed=5)
    t2 = split_train_test(cases, seed=5)
    t3 = split_train_test(cases, seed=6)
    ids = lambda split: [s.case_id for s in split[1]]
    assert ids(t1) == ids(t2)
    assert len(ids(t3)) == len(ids(t1))


def test_split_is_partition():
    cases = _bulk_sessions(10, 12, 60)
    train, test = split_train_test(cases, seed=3)
    all_ids = {s.case_id for s in cases}
    assert {s.case_id for s in train} | {s.case_id for s in test} == all_ids
    assert not ({s.case_id for s in train} & {s.case_id for s in test})


def test_split_warns_when_fraction_unreachable(caplog):
    cases = _bulk_sessions(0, 1, 2)
    with caplog.at_level("WARNING"):
        train, test = split_train_test(cases, seed=0, phase3_sample=10)
    assert len(test) == 3  # best effort: 1 phase-2 + both phase-3


# --- round trips ------------------------------------------------------------------

def test_session_dict_round_trip():
    s = make_session(
        [(10.25, 20.5, 0.0, 0.21875), (30.0, 40.0, 0.5, 0.75)],
        findings=[make_finding(1.0, "t", ["Edema"])],
    )
    assert ingest.session_from_dict(ingest.session_to_dict(s)) == s


def test_parse_serialize_reparse_round_trip():
    from gazeforge import synth

    session, _ = synth.generate_dataset(1, seed=99)[0]
    csv_text = ingest.session_to_fixation_csv(session)
    transcript = ingest.session_to_transcript_json(session)
    reparsed = parse_session(io.StringIO(csv_text), io.StringIO(json.dumps(transcript)))
    assert reparsed == session
