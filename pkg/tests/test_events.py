import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_stream
from ieim import codec
from ieim.events import (
    Event,
    EventStream,
    FluoroField,
    FrameSequence,
    ModulationSchedule,
    PhotometricModel,
    SensorConfig,
    canonical_order,
    sort_stream,
    validate_stream,
    window,
)


def test_empty_stream_is_valid():
    assert validate_stream(EventStream(4, 4)) == []


def test_unsorted_reported_at_offending_index():
    v = validate_stream(make_stream([(3, 0, 0, 1), (1, 1, 0, 1)]))
    assert len(v) == 1 and v[0].index == 1
    assert "unsorted at index 1" in str(v[0])


def test_duplicate_pixel_timestamp():
    # same pixel, same tick: +1 and -1 are canonically ordered but still collide
    v = validate_stream(make_stream([(5, 2, 2, 1), (5, 2, 2, -1)]))
    assert any("duplicate pixel timestamp" in str(x) for x in v)


def test_tie_break_order_is_canonical():
    ok = make_stream([(5, 3, 0, 1), (5, 1, 1, 1), (5, 2, 1, -1)])
    assert validate_stream(ok) == []
    bad = make_stream([(5, 1, 1, 1), (5, 3, 0, 1)])  # y=1 before y=0
    assert validate_stream(bad)


def test_bad_polarity_and_bounds():
    s = EventStream(4, 4, 1000, [0, 1], [9, 0], [0, 0], [1, 0])
    kinds = {v.kind for v in validate_stream(s)}
    assert {"bounds", "polarity"} <= kinds


@pytest.mark.parametrize("a,b,expected", [
    (0, 10, [5]),
    (0, 0, []),
    (5, 16, [5, 10, 15]),
])
def test_window_examples(a, b, expected):
    s = make_stream([(5, 0, 0, 1), (10, 0, 0, 1), (15, 0, 0, 1)])
    w = window(s, a, b)
    assert list(w.t) == expected
    assert (w.width, w.height, w.tick_ns) == (s.width, s.height, s.tick_ns)


def test_window_reversed_bounds():
    with pytest.raises(ValueError):
        window(EventStream(2, 2), 5, 4)


@given(st.lists(st.integers(0, 50), max_size=40),
       st.integers(0, 60), st.integers(0, 60), st.integers(0, 60), st.integers(0, 60))
def test_window_composes_as_intersection(ts, a, b, a2, b2):
    a, b = sorted((a, b))
    a2, b2 = sorted((a2, b2))
    ts = sorted(set(ts))
    s = make_stream([(t, 0, 0, 1) for t in ts])
    lo, hi = max(a, a2), min(b, b2)
    expect = window(s, lo, max(lo, hi))
    assert window(window(s, a, b), a2, b2) == expect


events_st = st.lists(
    st.tuples(st.integers(0, 30), st.integers(0, 3), st.integers(0, 3), st.sampled_from([1, -1])),
    max_size=60,
)


@settings(max_examples=200)
@given(events_st, st.randoms())
def test_sorting_any_permutation_reproduces_bytes(evs, rnd):
    # dedupe per (pixel, tick) so the stream can be valid
    uniq = {}
    for t, x, y, p in evs:
        uniq.setdefault((t, x, y), p)
    rows = [(t, x, y, p) for (t, x, y), p in uniq.items()]
    canon = sort_stream(make_stream(rows, 4, 4))
    assert validate_stream(canon) == []
    rnd.shuffle(rows)
    again = sort_stream(make_stream(rows, 4, 4))
    assert codec.encode_events(again) == codec.encode_events(canon)


def test_canonical_order_polarity_tiebreak():
    t = np.array([1, 1]); x = np.array([0, 0]); y = np.array([0, 0]); p = np.array([-1, 1])
    assert list(canonical_order(t, x, y, p, 1, 1)) == [1, 0]


def test_event_access():
    s = make_stream([(1, 2, 3, -1)])
    assert s[0] == Event(1, 2, 3, -1)
    assert s.events == [Event(1, 2, 3, -1)]
    assert s.duration_s() == pytest.approx(2e-6)
    with pytest.raises(ValueError):
        s.t[0] = 5


def test_fluoro_field_checks():
    assert FluoroField(np.ones((3, 4))).frames.shape == (1, 3, 4)
    with pytest.raises(ValueError):
        FluoroField(-np.ones((2, 2)))
    with pytest.raises(ValueError):
        FluoroField(np.full((2, 2), np.nan))


def test_schedule_defaults_and_profile():
    s = ModulationSchedule(0.01, n_cycles=2)
    assert s.rise_time == pytest.approx(0.0005)
    assert s.fall_time == pytest.approx(0.0005)
    assert s.ramp_rate == pytest.approx(2000.0)
    t = np.array([0.0, 0.00025, 0.002, 0.00475, 0.007, 0.01025])
    np.testing.assert_allclose(s.illumination(t), [0, 0.5, 1, 0.5, 0, 0.5])
    assert list(s.cycle_starts(1e-6)) == [0, 10000, 20000]


@pytest.mark.parametrize("kw", [
    dict(period_T=0), dict(period_T=1, duty=0), dict(period_T=1, amplitude_B=0),
    dict(period_T=1, rise_time=0.3, fall_time=0.3), dict(period_T=1, n_cycles=0),
])
def test_schedule_invalid(kw):
    with pytest.raises(ValueError):
        ModulationSchedule(**kw)


def test_parameter_invariants():
    with pytest.raises(ValueError):
        PhotometricModel(K=0)
    with pytest.raises(ValueError):
        PhotometricModel(c_thr=-1)
    with pytest.raises(ValueError):
        SensorConfig(noise_rate=-1)


def test_frame_sequence_helpers():
    f = np.array([[[0.0, 2.0]], [[0.0, 0.0]]])
    c = np.array([[[0, 2]], [[0, 1]]], dtype=np.uint8)
    fs = FrameSequence(f, c)
    assert fs.counts() == {"measured_px": 1, "single_event_px": 1, "empty_px": 2}
    n = fs.normalized()
    assert n.frames[0, 0, 1] == 1.0 and not n.frames[1].any()
    with pytest.raises(ValueError):
        FrameSequence(f, c[:1])
