import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import kwstream as kw


def stream(values):
    return kw.ScoreStream(np.asarray(values, dtype=np.float64))


def cfg(threshold, lockout_frames):
    # lockout expressed in frames for readability (30 ms stride).
    return kw.DetectConfig(threshold=threshold, lockout_s=lockout_frames * 0.03)


def test_all_zero_stream_fires_nothing():
    assert kw.detect_events(stream(np.zeros(50)), cfg(0.5, 10)) == []


def test_lockout_collapses_plateau_to_one_event():
    events = kw.detect_events(stream([0.9, 0.9, 0.9]), cfg(0.5, 100))
    assert len(events) == 1
    assert events[0].t == 1
    assert events[0].time_s == pytest.approx(0.03)
    assert events[0].score == pytest.approx(0.9)


def test_two_separated_peaks_fire_twice():
    scores = np.zeros(300)
    scores[10] = 0.9
    scores[210] = 0.8
    events = kw.detect_events(stream(scores), cfg(0.5, 100))
    assert [e.t for e in events] == [11, 211]


def test_theta_zero_fires_immediately():
    events = kw.detect_events(stream(np.zeros(10)), cfg(0.0, 100))
    assert events and events[0].t == 1


def test_saturated_stream_fires_once_per_lockout():
    t, lockout = 1000, 100
    events = kw.detect_events(stream(np.ones(t)), cfg(0.0, lockout))
    assert len(events) == (t - 1) // lockout + 1
    assert [e.t for e in events] == list(range(1, t + 1, lockout))


@given(hnp.arrays(np.float64, st.integers(1, 200),
                  elements=st.floats(0, 1, allow_nan=False)),
       st.floats(0, 1), st.floats(0, 1), st.integers(1, 50))
@settings(max_examples=80, deadline=None)
def test_monotone_in_threshold_and_spacing(values, th1, th2, lockout):
    lo, hi = sorted([th1, th2])
    s = stream(values)
    n_lo = kw.count_events(s, cfg(lo, lockout))
    n_hi = kw.count_events(s, cfg(hi, lockout))
    assert n_hi <= n_lo
    events = kw.detect_events(s, cfg(lo, lockout))
    assert n_lo == len(events)
    for a, b in zip(events, events[1:]):
        assert b.t - a.t >= lockout
