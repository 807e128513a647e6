"""Shared test utilities: random instances and a rank-based ROC area."""

import numpy as np

import kwstream as kw


def random_posteriors(rng, n_frames, vocab_size, allow_zeros=True):
    """Random per-frame distributions, occasionally with hard zeros."""
    p = rng.dirichlet(np.ones(vocab_size) * rng.uniform(0.3, 2.0), size=n_frames)
    if allow_zeros and rng.random() < 0.3:
        mask = rng.random((n_frames, vocab_size)) < 0.2
        p = np.where(mask, 0.0, p)
        total = p.sum(axis=1, keepdims=True)
        total[total == 0] = 1.0
        p = p / total
    return p


def random_instance(rng, t_max=8, v_max=5, u_choices=(2, 3), allow_zeros=True):
    t = int(rng.integers(1, t_max + 1))
    v = int(rng.integers(3, v_max + 1))
    u = int(rng.choice(u_choices))
    probs = random_posteriors(rng, t, v, allow_zeros=allow_zeros)
    tokens = rng.integers(1, v, size=u)
    with np.errstate(divide="ignore"):
        pg = kw.PosteriorGram(np.log(probs))
    return pg, kw.expand_keyword(tokens)


def frames_equal(a, b, tol=0.0):
    if a.t != b.t or a.path_len != b.path_len:
        return False
    if a.score_log == b.score_log:
        return True
    return abs(a.score_log - b.score_log) <= tol


def rank_auc(pos_scores, neg_scores):
    """Mann-Whitney ROC area: P(pos > neg) + 0.5 P(pos == neg)."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg = np.asarray(neg_scores, dtype=np.float64)
    wins = 0.0
    for p in pos:
        wins += np.count_nonzero(neg < p) + 0.5 * np.count_nonzero(neg == p)
    return wins / (len(pos) * len(neg))
