import math

import numpy as np
import pytest

import kwstream as kw
from kwstream.errors import InstanceTooLarge
from kwstream.oracle import MAX_FRAMES, MAX_TOKENS


def logs(probs):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(probs, dtype=np.float64))


def test_matches_hand_traced_instance():
    pg = kw.PosteriorGram(logs([[0.1, 0.8, 0.1], [0.1, 0.1, 0.8]]))
    out = kw.oracle_decode(pg, kw.expand_keyword([1, 2]), kw.DecoderConfig())
    assert out[0].score_log == -math.inf
    assert out[1].score_log == pytest.approx((3.0 + math.log(0.8)) / 2, abs=1e-12)
    assert out[1].path_len == 2


def test_single_frame_all_unreachable():
    pg = kw.PosteriorGram(logs(np.full((1, 4), 0.25)))
    out = kw.oracle_decode(pg, kw.expand_keyword([1, 2]), kw.DecoderConfig())
    assert out == [kw.FrameScore(t=1, score_log=-math.inf, path_len=0)]


def test_single_path_instance_scores_its_product():
    # Zero out everything except one alignment: entry at 1, token b at 2,
    # final blank at 3. No maximization is involved.
    probs = np.array([
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 0.7],
        [0.6, 0.0, 0.0],
    ])
    pg = kw.PosteriorGram(logs(probs))
    cfg = kw.DecoderConfig()
    out = kw.oracle_decode(pg, kw.expand_keyword([1, 2]), cfg)
    assert out[1].score_log == pytest.approx((3 + math.log(0.7)) / 2, abs=1e-12)
    assert out[2].score_log == pytest.approx((3 + math.log(0.7) + math.log(0.6)) / 3,
                                             abs=1e-12)
    assert out[2].path_len == 3


def test_guard_rejects_large_instances():
    pg = kw.PosteriorGram(logs(np.full((MAX_FRAMES + 1, 3), 1 / 3)))
    with pytest.raises(InstanceTooLarge):
        kw.oracle_decode(pg, kw.expand_keyword([1, 2]), kw.DecoderConfig())
    pg = kw.PosteriorGram(logs(np.full((4, 8), 1 / 8)))
    with pytest.raises(InstanceTooLarge):
        kw.oracle_decode(pg, kw.expand_keyword(range(1, MAX_TOKENS + 2)),
                         kw.DecoderConfig())


def test_emitting_positions_skip_entry():
    path = kw.ExplicitPath(entry_frame=4, states=(2, 4, 5), log_score=0.0)
    spec = kw.expand_keyword([1, 2])
    # Frame 4 is the free entry; frames 5 and 6 consume token 2 and blank.
    assert path.emitting_positions(spec) == [(5, 2), (6, 0)]
