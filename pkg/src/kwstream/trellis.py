"""Frame-synchronous keyword trellis decoder.

Searches a blank-augmented keyword state chain against a stream of CTC
posteriors. Two fresh path competitors are injected at every frame (score 1
in the linear domain), so the keyword may start anywhere; a terminal hit is
boosted by a fixed bonus, length-normalized by its path span, and discarded
when the span exceeds the timeout. All arithmetic is in the natural-log
domain with -inf standing for linear zero.

The per-frame recursion, for augmented states u >= 3 (1-based)::

    blank u:      d(t,u) = logp_t(blank) + max(d(t-1,u-1), d(t-1,u))
    non-blank u:  d(t,u) = logp_t(y~_u)  + max(d(t-1,u-2)*, d(t-1,u-1), d(t-1,u))

(*) the two-state skip is forbidden when states u and u-2 carry the same
label, matching standard CTC topology.

States 1 and 2 are reset to score 1 each frame ("new competitor"). In the
literal entry mode the reset carries no posterior factor, so the first
keyword token is never scored; ``literal_entry=False`` switches to a variant
that charges ``logp_t(y1)`` at entry instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BlankInKeyword, DegenerateKeyword, DimensionMismatch, EmptyKeyword
from .io import DEFAULT_FRAME_MS, PosteriorGram

NEG_INF = float("-inf")

TIE_PREFER_SHORTER = "prefer-shorter"
TIE_PREFER_LONGER = "prefer-longer"


@dataclass(frozen=True)
class KeywordSpec:
    """A keyword token sequence and its blank-augmented state chain."""

    tokens: tuple[int, ...]
    blank_id: int = 0

    @property
    def augmented(self) -> tuple[int, ...]:
        out = [self.blank_id]
        for tok in self.tokens:
            out.append(tok)
            out.append(self.blank_id)
        return tuple(out)

    @property
    def num_states(self) -> int:
        return 2 * len(self.tokens) + 1


def expand_keyword(tokens, blank_id: int = 0) -> KeywordSpec:
    """Validate a token sequence and build its blank-augmented spec.

    Raises:
        EmptyKeyword: no tokens.
        DegenerateKeyword: a single token (the terminal state would coincide
            with the per-frame entry reset, scoring the bare bonus forever).
        BlankInKeyword: the blank id appears among the tokens.
    """
    tokens = tuple(int(t) for t in tokens)
    if len(tokens) == 0:
        raise EmptyKeyword("keyword must contain at least one token")
    if len(tokens) == 1:
        raise DegenerateKeyword("single-token keywords degenerate under entry resets")
    if any(t == blank_id for t in tokens):
        raise BlankInKeyword(f"blank id {blank_id} cannot appear in a keyword")
    return KeywordSpec(tokens=tokens, blank_id=blank_id)


@dataclass(frozen=True)
class DecoderConfig:
    """Decoding hyper-parameters.

    ``log_bonus`` is the log of the terminal bonus (default e^3);
    ``timeout_s`` caps the span of an accepted path (default 3 s, i.e. 100
    frames at the 30 ms stride). ``tie_break`` picks between equal-score
    paths: shorter favors the later start frame.
    """

    log_bonus: float = 3.0
    timeout_s: float = 3.0
    literal_entry: bool = True
    tie_break: str = TIE_PREFER_SHORTER
    frame_duration_ms: float = DEFAULT_FRAME_MS

    def __post_init__(self):
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.tie_break not in (TIE_PREFER_SHORTER, TIE_PREFER_LONGER):
            raise ValueError(f"unknown tie_break {self.tie_break!r}")
        if self.frame_duration_ms <= 0:
            raise ValueError("frame_duration_ms must be positive")
        if self.timeout_frames < 1:
            raise ValueError("timeout shorter than one frame")

    @property
    def timeout_frames(self) -> float:
        """Timeout in frames; math.inf when timeout_s is infinite."""
        if math.isinf(self.timeout_s):
            return math.inf
        return float(round(self.timeout_s * 1000.0 / self.frame_duration_ms))


@dataclass
class FrameScore:
    """Per-frame activation: length-normalized log score and path span."""

    t: int
    score_log: float
    path_len: int


@dataclass
class DecoderState:
    """Trellis column after a frame update (1-based frame index).

    ``delta`` holds the per-state best log scores, ``starts`` the 1-based
    entry frame of each state's best path (0 where unreachable).
    """

    spec: KeywordSpec
    delta: np.ndarray
    starts: np.ndarray
    frame_index: int
    vocab_size: int | None = None
    ytil: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.ytil is None:
            self.ytil = np.asarray(self.spec.augmented, dtype=np.int64)


def init_state(spec: KeywordSpec) -> DecoderState:
    """Trellis column at t=1: both entry states at score 1, rest unreachable."""
    n = spec.num_states
    delta = np.full(n, NEG_INF, dtype=np.float64)
    starts = np.zeros(n, dtype=np.int64)
    delta[0] = delta[1] = 0.0
    starts[0] = starts[1] = 1
    return DecoderState(spec=spec, delta=delta, starts=starts, frame_index=1)


def _advance_block(delta, starts, emis, t0, skip_ok, log_bonus, timeout_frames,
                   prefer_shorter, literal_entry):
    """Advance the trellis over a block of frames.

    ``delta``/``starts`` are the column from frame t0-1 and are updated in
    place; ``emis[i, k]`` is the log posterior of augmented state k at frame
    t0+i. Returns per-frame (score_log, path_len) arrays.
    """
    n_frames, n_states = emis.shape
    score_log = np.empty(n_frames, dtype=np.float64)
    path_len = np.zeros(n_frames, dtype=np.int64)
    prev_d = delta
    prev_s = starts
    cur_d = np.empty(n_states, dtype=np.float64)
    cur_s = np.empty(n_states, dtype=np.int64)
    neg_inf = -np.inf

    for i in range(n_frames):
        t = t0 + i
        cur_d[0] = 0.0
        cur_s[0] = t
        cur_d[1] = 0.0 if literal_entry else emis[i, 1]
        cur_s[1] = t
        for k in range(2, n_states):
            best = prev_d[k]
            bstart = prev_s[k]
            cand = prev_d[k - 1]
            cstart = prev_s[k - 1]
            if cand > best or (cand == best and (
                    (cstart > bstart) if prefer_shorter else (cstart < bstart))):
                best = cand
                bstart = cstart
            if k % 2 == 1 and skip_ok[k]:
                cand = prev_d[k - 2]
                cstart = prev_s[k - 2]
                if cand > best or (cand == best and (
                        (cstart > bstart) if prefer_shorter else (cstart < bstart))):
                    best = cand
                    bstart = cstart
            val = emis[i, k] + best
            cur_d[k] = val
            cur_s[k] = bstart if val > neg_inf else 0

        prev_d, cur_d = cur_d, prev_d
        prev_s, cur_s = cur_s, prev_s

        term = prev_d[n_states - 2]
        tstart = prev_s[n_states - 2]
        cand = prev_d[n_states - 1]
        cstart = prev_s[n_states - 1]
        if cand > term or (cand == term and (
                (cstart > tstart) if prefer_shorter else (cstart < tstart))):
            term = cand
            tstart = cstart
        if term == neg_inf:
            score_log[i] = neg_inf
            path_len[i] = 0
        else:
            length = t - tstart + 1
            path_len[i] = length
            if length > timeout_frames:
                score_log[i] = neg_inf
            else:
                score_log[i] = (log_bonus + term) / length

    # After an odd number of swaps the latest column lives in the aux buffer.
    if n_frames % 2 == 1:
        delta[:] = prev_d
        starts[:] = prev_s
    return score_log, path_len


try:
    from numba import njit

    _advance_block = njit(cache=True, nogil=True)(_advance_block)
except ImportError:  # pragma: no cover - numba is a declared dependency
    pass


def _skip_mask(spec: KeywordSpec) -> np.ndarray:
    """skip_ok[k]: the two-state skip into state k is allowed (0-based)."""
    ytil = spec.augmented
    n = len(ytil)
    mask = np.zeros(n, dtype=np.bool_)
    for k in range(3, n, 2):
        mask[k] = ytil[k] != ytil[k - 2]
    return mask


def _check_tokens(spec: KeywordSpec, vocab_size: int) -> None:
    worst = max(spec.tokens)
    if worst >= vocab_size or spec.blank_id >= vocab_size:
        raise DimensionMismatch(
            f"keyword token id {worst} outside vocabulary of size {vocab_size}")


def step(state: DecoderState, frame_logp: np.ndarray,
         config: DecoderConfig) -> tuple[DecoderState, FrameScore]:
    """Consume one frame of log posteriors and score frame t+1.

    The frame vector length is pinned on first use; later frames must match
    (DimensionMismatch otherwise). Returns a fresh state, leaving the input
    state untouched.
    """
    frame_logp = np.asarray(frame_logp, dtype=np.float64).ravel()
    if state.vocab_size is None:
        _check_tokens(state.spec, frame_logp.size)
    elif frame_logp.size != state.vocab_size:
        raise DimensionMismatch(
            f"frame has {frame_logp.size} entries, expected {state.vocab_size}")

    t = state.frame_index + 1
    delta = state.delta.copy()
    starts = state.starts.copy()
    emis = frame_logp[state.ytil].reshape(1, -1)
    score_log, path_len = _advance_block(
        delta, starts, emis, t, _skip_mask(state.spec),
        config.log_bonus, float(config.timeout_frames),
        config.tie_break == TIE_PREFER_SHORTER, config.literal_entry)
    new_state = DecoderState(spec=state.spec, delta=delta, starts=starts,
                             frame_index=t, vocab_size=frame_logp.size,
                             ytil=state.ytil)
    return new_state, FrameScore(t=t, score_log=float(score_log[0]),
                                 path_len=int(path_len[0]))


def _terminal_score(state: DecoderState, config: DecoderConfig) -> FrameScore:
    """Score the current column (used for the t=1 column from init_state)."""
    n = state.spec.num_states
    a, b = state.delta[n - 2], state.delta[n - 1]
    prefer_shorter = config.tie_break == TIE_PREFER_SHORTER
    if b > a or (b == a and (
            (state.starts[n - 1] > state.starts[n - 2]) if prefer_shorter
            else (state.starts[n - 1] < state.starts[n - 2]))):
        term, tstart = b, state.starts[n - 1]
    else:
        term, tstart = a, state.starts[n - 2]
    if term == NEG_INF:
        return FrameScore(t=state.frame_index, score_log=NEG_INF, path_len=0)
    length = state.frame_index - int(tstart) + 1
    if length > config.timeout_frames:
        return FrameScore(t=state.frame_index, score_log=NEG_INF, path_len=length)
    return FrameScore(t=state.frame_index,
                      score_log=(config.log_bonus + float(term)) / length,
                      path_len=length)


def decode_utterance(pg: PosteriorGram, spec: KeywordSpec,
                     config: DecoderConfig) -> list[FrameScore]:
    """Decode a whole utterance, one activation score per frame.

    Equivalent to feeding frames through :func:`step` one at a time, but the
    whole block runs in one compiled scan.
    """
    _check_tokens(spec, pg.vocab_size)
    if not math.isclose(pg.frame_duration_ms, config.frame_duration_ms):
        raise ValueError(
            f"posteriorgram frame stride {pg.frame_duration_ms} ms does not match "
            f"decoder config {config.frame_duration_ms} ms")
    state = init_state(spec)
    out = [_terminal_score(state, config)]
    t_frames = pg.num_frames
    if t_frames > 1:
        logp = pg.logp
        ytil = np.asarray(spec.augmented, dtype=np.int64)
        emis = logp[1:, :][:, ytil].astype(np.float64)
        score_log, path_len = _advance_block(
            state.delta, state.starts, emis, 2, _skip_mask(spec),
            config.log_bonus, float(config.timeout_frames),
            config.tie_break == TIE_PREFER_SHORTER, config.literal_entry)
        out.extend(FrameScore(t=i + 2, score_log=float(score_log[i]),
                              path_len=int(path_len[i]))
                   for i in range(t_frames - 1))
    return out
