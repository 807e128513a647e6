import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

import kwstream as kw
from kwstream.cdc import ROLE_CDC, ROLE_REFINE
from kwstream.errors import LengthMismatch

unit_arrays = hnp.arrays(
    dtype=np.float64,
    shape=st.integers(3, 40),
    elements=st.floats(min_value=0.0, max_value=1.0, allow_nan=False))


def stream(values):
    return kw.ScoreStream(np.asarray(values, dtype=np.float64))


class TestLinearUnit:
    def test_minus_inf_maps_to_zero(self):
        assert kw.linear_unit(-math.inf) == 0.0

    def test_zero_maps_to_one(self):
        assert kw.linear_unit(0.0) == 1.0

    def test_bonus_scores_clamp_to_one(self):
        # The hand-traced decode example exceeds 1 in the linear domain.
        assert math.exp(1.3884282243428951) > 1.0
        assert kw.linear_unit(1.3884282243428951) == 1.0

    def test_stream_conversion(self):
        frames = [kw.FrameScore(1, -math.inf, 0), kw.FrameScore(2, math.log(0.5), 2)]
        out = kw.to_linear_unit(frames)
        np.testing.assert_allclose(out.scores, [0.0, 0.5], atol=1e-12)


class TestCdcConfig:
    def test_window_must_cover_two_frames(self):
        with pytest.raises(ValueError):
            kw.CdcConfig(l_his=0, l_fut=1)
        with pytest.raises(ValueError):
            kw.CdcConfig(l_his=1, l_fut=0)

    def test_latency(self):
        assert kw.CdcConfig(l_his=0, l_fut=30).added_latency_ms(30.0) == 900.0
        assert kw.CdcConfig(l_his=30, l_fut=0).added_latency_ms(30.0) == 0.0


class TestCdcScores:
    def test_identical_streams_score_one(self):
        a = stream([0.2, 0.5, 0.9, 0.4, 0.1])
        out = kw.cdc_scores(a, stream(a.scores.copy()), kw.CdcConfig(l_his=1, l_fut=2))
        assert out.stream_role == ROLE_CDC
        np.testing.assert_array_equal(out.scores, np.ones(5))

    def test_disjoint_support_scores_zero(self):
        a = stream([1.0, 0.0, 0.0])
        b = stream([0.0, 1.0, 0.0])
        out = kw.cdc_scores(a, b, kw.CdcConfig(l_his=1, l_fut=1))
        assert out.scores[0] == 0.0  # window [1,0] vs [0,1]

    def test_zero_windows_score_zero(self):
        z = stream(np.zeros(6))
        out = kw.cdc_scores(z, stream(np.zeros(6)), kw.CdcConfig(l_his=0, l_fut=3))
        np.testing.assert_array_equal(out.scores, np.zeros(6))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            kw.cdc_scores(stream([1, 0]), stream([1, 0, 0]), kw.CdcConfig())

    @given(unit_arrays, st.integers(0, 4), st.integers(0, 6))
    @settings(max_examples=60, deadline=None)
    def test_symmetry_and_bounds(self, values, l_his, l_fut):
        if l_his + l_fut < 2:
            l_fut = 2
        rng = np.random.default_rng(0)
        other = rng.permutation(values)
        cfg = kw.CdcConfig(l_his=l_his, l_fut=l_fut)
        ab = kw.cdc_scores(stream(values), stream(other), cfg)
        ba = kw.cdc_scores(stream(other), stream(values), cfg)
        np.testing.assert_array_equal(ab.scores, ba.scores)
        assert np.all(ab.scores >= 0.0) and np.all(ab.scores <= 1.0)

    @given(unit_arrays, st.floats(min_value=0.01, max_value=1.0))
    @settings(max_examples=40, deadline=None)
    def test_scale_invariance(self, values, k):
        cfg = kw.CdcConfig(l_his=2, l_fut=2)
        rng = np.random.default_rng(1)
        other = np.clip(values + 0.1 * rng.standard_normal(values.shape), 0.0, 1.0)
        base = kw.cdc_scores(stream(values), stream(other), cfg)
        scaled = kw.cdc_scores(stream(values * k), stream(other), cfg)
        np.testing.assert_allclose(scaled.scores, base.scores, atol=1e-12)


class TestRefine:
    def test_examples(self):
        out = kw.refine(stream([1.0, 0.0, 0.8]), stream([1.0, 0.0, 0.4]))
        assert out.stream_role == ROLE_REFINE
        np.testing.assert_allclose(out.scores, [1.0, 0.0, 0.6], atol=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            kw.refine(stream([1.0]), stream([1.0, 0.0]))

    def test_degenerate_identity(self):
        vals = np.array([0.3, 0.8, 0.6, 0.9, 0.2])
        cfg = kw.CdcConfig(l_his=1, l_fut=1)
        refined = kw.refine(stream(vals), kw.cdc_scores(stream(vals), stream(vals), cfg))
        np.testing.assert_allclose(refined.scores, (vals + 1.0) / 2.0, atol=1e-12)


class CountingFeed:
    """Iterator that records how many items were handed out."""

    def __init__(self, values):
        self.values = list(values)
        self.consumed = 0

    def __iter__(self):
        return self

    def __next__(self):
        if self.consumed >= len(self.values):
            raise StopIteration
        self.consumed += 1
        return self.values[self.consumed - 1]


class TestStreamingRefine:
    @given(unit_arrays, st.integers(0, 3), st.integers(0, 5))
    @settings(max_examples=60, deadline=None)
    def test_matches_batch_bitwise(self, values, l_his, l_fut):
        if l_his + l_fut < 2:
            l_his = 2
        rng = np.random.default_rng(3)
        other = np.clip(values + 0.2 * rng.standard_normal(values.shape), 0.0, 1.0)
        cfg = kw.CdcConfig(l_his=l_his, l_fut=l_fut)
        batch = kw.refine(stream(values), kw.cdc_scores(stream(values), stream(other), cfg))
        streamed = np.array(list(kw.streaming_refine(values, other, cfg)))
        np.testing.assert_array_equal(streamed, batch.scores)

    def test_emission_latency_is_l_fut(self):
        cfg = kw.CdcConfig(l_his=0, l_fut=3)
        values = np.linspace(0.1, 0.9, 10)
        feed_a, feed_b = CountingFeed(values), CountingFeed(values)
        gen = kw.streaming_refine(feed_a, feed_b, cfg)
        for t in range(1, 8):  # frames emitted while the stream is live
            next(gen)
            assert feed_a.consumed == t + cfg.l_fut
        rest = list(gen)
        assert len(rest) == 3  # flushed after the feeds end

    def test_zero_future_window_emits_immediately(self):
        cfg = kw.CdcConfig(l_his=4, l_fut=0)
        values = [0.5, 0.6, 0.7, 0.8]
        feed_a, feed_b = CountingFeed(values), CountingFeed(values)
        gen = kw.streaming_refine(feed_a, feed_b, cfg)
        for t in range(1, 5):
            next(gen)
            assert feed_a.consumed == t
        assert cfg.added_latency_ms(30.0) == 0.0

    def test_length_mismatch_at_end(self):
        cfg = kw.CdcConfig(l_his=0, l_fut=2)
        with pytest.raises(LengthMismatch):
            list(kw.streaming_refine([0.1, 0.2, 0.3], [0.1, 0.2], cfg))


def test_separation_property():
    # Two streams nearly identical around the peak (positive model) versus
    # decorrelated at the peak (negative model): refinement widens the gap
    # between the models beyond the raw score gap.
    rng = np.random.default_rng(12345)
    cfg = kw.CdcConfig(l_his=0, l_fut=10)
    pos_init, pos_ref, neg_init, neg_ref = [], [], [], []
    for _ in range(100):
        t = 60
        peak = np.zeros(t)
        lo = int(rng.integers(10, 35))
        bump = rng.uniform(0.7, 1.0) * np.hanning(12)
        peak[lo:lo + 12] = bump
        pos_a = np.clip(peak + 0.01 * rng.random(t), 0, 1)
        pos_b = np.clip(peak + 0.02 * rng.random(t), 0, 1)
        neg_a = np.clip(peak + 0.01 * rng.random(t), 0, 1)
        neg_b = np.clip(0.02 * rng.random(t), 0, 1)  # the other branch is silent
        for a, b, init_acc, ref_acc in [
            (pos_a, pos_b, pos_init, pos_ref),
            (neg_a, neg_b, neg_init, neg_ref),
        ]:
            refined = kw.refine(stream(a), kw.cdc_scores(stream(a), stream(b), cfg))
            init_acc.append(stream(a).peak())
            ref_acc.append(refined.peak())
    init_gap = np.mean(pos_init) - np.mean(neg_init)
    refined_gap = np.mean(pos_ref) - np.mean(neg_ref)
    assert refined_gap > init_gap
