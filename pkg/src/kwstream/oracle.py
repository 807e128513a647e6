"""Brute-force reference decoder for the keyword trellis.

Enumerates every explicit path — an entry frame plus a state sequence over
the blank-augmented chain — and maximizes per end frame, mirroring every
trellis convention (entry mode, same-label rule, tie-break, timeout, bonus,
length normalization) through the shared :class:`DecoderConfig`. Exponential
in the frame count; guarded to toy instances and meant for tests only.

Path semantics mirrored from the streaming decoder:

* paths enter in state 2 only (state 1 feeds nothing but the perpetually
  reset state 2, so it is a dead source);
* entry states cannot be dwelt in — the per-frame reset means a lingering
  competitor is indistinguishable from a later, shorter one;
* the entry frame itself is free in literal mode; in the variant mode it is
  charged log p(y1), except at frame 1 where the initial column predates any
  posterior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InstanceTooLarge
from .io import PosteriorGram
from .trellis import (
    NEG_INF,
    TIE_PREFER_SHORTER,
    DecoderConfig,
    FrameScore,
    KeywordSpec,
)

MAX_FRAMES = 12
MAX_TOKENS = 4


@dataclass
class ExplicitPath:
    """One enumerated alignment: entry frame and per-frame states (1-based)."""

    entry_frame: int
    states: tuple[int, ...]
    log_score: float

    @property
    def length(self) -> int:
        return len(self.states)

    def emitting_positions(self, spec: KeywordSpec) -> list[tuple[int, int]]:
        """(frame, token) pairs whose posterior the path actually consumes."""
        ytil = spec.augmented
        out = []
        for offset, state in enumerate(self.states):
            if state >= 3:
                out.append((self.entry_frame + offset, ytil[state - 1]))
        return out


def _successors(state: int, n_states: int, ytil: tuple[int, ...]) -> list[int]:
    """Reachable states at the next frame (1-based numbering)."""
    if state <= 2:
        # Leaving the entry: blank state 3 always, skip to 4 when labels differ.
        nxt = [3]
        if n_states >= 4 and ytil[3] != ytil[1]:
            nxt.append(4)
        return [u for u in nxt if u <= n_states]
    if state % 2 == 1:  # blank
        return [u for u in (state, state + 1) if u <= n_states]
    nxt = [state, state + 1]
    if state + 2 <= n_states and ytil[state + 1] != ytil[state - 1]:
        nxt.append(state + 2)
    return [u for u in nxt if u <= n_states]


def _enumerate_paths(logp: np.ndarray, spec: KeywordSpec, literal_entry: bool):
    """Yield every finite-score path that touches a terminal state.

    A path is reported once per frame at which it sits in a terminal state,
    i.e. walks are recorded at every scoring prefix.
    """
    t_total = logp.shape[0]
    ytil = spec.augmented
    n_states = spec.num_states
    terminals = (n_states - 1, n_states)

    def walk(entry: int, frame: int, state: int, score: float, trail: list[int]):
        if state in terminals:
            yield ExplicitPath(entry_frame=entry, states=tuple(trail),
                               log_score=score)
        if frame == t_total:
            return
        # Even with double skips the chain cannot be finished in time.
        if state + 2 * (t_total - frame) < n_states - 1:
            return
        for nxt in _successors(state, n_states, ytil):
            emis = logp[frame, ytil[nxt - 1]]  # row `frame` is frame+1, 1-based
            nscore = emis + score
            if nscore == NEG_INF:
                continue
            trail.append(nxt)
            yield from walk(entry, frame + 1, nxt, nscore, trail)
            trail.pop()

    for entry in range(1, t_total + 1):
        if literal_entry or entry == 1:
            entry_score = 0.0
        else:
            entry_score = float(logp[entry - 1, ytil[1]])
            if entry_score == NEG_INF:
                continue
        yield from walk(entry, entry, 2, entry_score, [2])


def oracle_decode(pg: PosteriorGram, spec: KeywordSpec,
                  config: DecoderConfig) -> list[FrameScore]:
    """Per-frame scores by explicit enumeration; must equal the trellis."""
    scores, _ = oracle_decode_with_paths(pg, spec, config)
    return scores


def oracle_decode_with_paths(pg: PosteriorGram, spec: KeywordSpec,
                             config: DecoderConfig):
    """Like :func:`oracle_decode` but also returns each frame's argmax path
    (None where no finite path ends)."""
    t_total = pg.num_frames
    if t_total > MAX_FRAMES or len(spec.tokens) > MAX_TOKENS:
        raise InstanceTooLarge(
            f"T={t_total}, U={len(spec.tokens)} beyond brute-force bounds "
            f"(T<={MAX_FRAMES}, U<={MAX_TOKENS})")
    if not math.isclose(pg.frame_duration_ms, config.frame_duration_ms):
        raise ValueError("posteriorgram and decoder config disagree on frame stride")

    logp = pg.logp.astype(np.float64)
    prefer_shorter = config.tie_break == TIE_PREFER_SHORTER
    best: list[ExplicitPath | None] = [None] * (t_total + 1)

    for path in _enumerate_paths(logp, spec, config.literal_entry):
        t_end = path.entry_frame + path.length - 1
        cur = best[t_end]
        if cur is None or path.log_score > cur.log_score or (
                path.log_score == cur.log_score and (
                    (path.entry_frame > cur.entry_frame) if prefer_shorter
                    else (path.entry_frame < cur.entry_frame))):
            best[t_end] = path

    timeout = config.timeout_frames
    out = []
    paths = []
    for t in range(1, t_total + 1):
        path = best[t]
        if path is None:
            out.append(FrameScore(t=t, score_log=NEG_INF, path_len=0))
            paths.append(None)
            continue
        length = path.length
        if length > timeout:
            out.append(FrameScore(t=t, score_log=NEG_INF, path_len=length))
        else:
            out.append(FrameScore(
                t=t, score_log=(config.log_bonus + path.log_score) / length,
                path_len=length))
        paths.append(path)
    return out, paths
