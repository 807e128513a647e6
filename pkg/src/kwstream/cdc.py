"""Cross-layer consistency rescoring of activation score streams.

The decoder produces one score stream from the final CTC branch and one from
an intermediate branch. Around a genuine keyword both streams peak with the
same shape; false alarms tend to peak in one branch only. The windowed
cosine between the two streams captures this, and averaging it with the
primary stream yields the refined score.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch
from .io import DEFAULT_FRAME_MS
from .trellis import FrameScore

ROLE_INIT = "init"
ROLE_INTER = "inter"
ROLE_CDC = "cdc"
ROLE_REFINE = "refine"


@dataclass
class ScoreStream:
    """A per-frame score sequence in the linear [0, 1] domain."""

    scores: np.ndarray
    stream_role: str = ROLE_INIT

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64).ravel()

    def __len__(self):
        return self.scores.size

    def peak(self) -> float:
        return float(self.scores.max()) if self.scores.size else 0.0


@dataclass(frozen=True)
class CdcConfig:
    """Sliding-window geometry: history and future frames around each t."""

    l_his: int = 0
    l_fut: int = 30
    similarity: str = "cosine"

    def __post_init__(self):
        if self.l_his < 0 or self.l_fut < 0:
            raise ValueError("window sizes must be non-negative")
        if self.l_his + self.l_fut < 2:
            raise ValueError("window must span at least 2 frames beyond the center")
        if self.similarity != "cosine":
            raise ValueError(f"unsupported similarity {self.similarity!r}")

    def added_latency_ms(self, frame_duration_ms: float = DEFAULT_FRAME_MS) -> float:
        """Worst-case emission delay introduced by the future window."""
        return self.l_fut * frame_duration_ms


def linear_unit(score_log: float) -> float:
    """Map a log-domain activation to the unit interval (exp, then clamp)."""
    if score_log == -math.inf:
        return 0.0
    return min(1.0, max(0.0, math.exp(min(score_log, 0.0))))


def to_linear_unit(frame_scores: Iterable[FrameScore],
                   role: str = ROLE_INIT) -> ScoreStream:
    """Bridge decoder output to a [0, 1] score stream."""
    vals = np.array([linear_unit(fs.score_log) for fs in frame_scores],
                    dtype=np.float64)
    return ScoreStream(vals, stream_role=role)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.dot(a, a))
    nb = float(np.dot(b, b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    val = float(np.dot(a, b)) / math.sqrt(na * nb)
    return min(1.0, max(0.0, val))


def cdc_scores(init: ScoreStream, inter: ScoreStream,
               config: CdcConfig) -> ScoreStream:
    """Windowed cosine consistency between two streams.

    The window at frame t covers [t - l_his, t + l_fut], truncated at the
    stream edges; a window with zero norm on either side scores 0.
    """
    if len(init) != len(inter):
        raise LengthMismatch(f"init has {len(init)} frames, inter {len(inter)}")
    a, b = init.scores, inter.scores
    t_total = a.size
    out = np.empty(t_total, dtype=np.float64)
    for i in range(t_total):
        lo = max(0, i - config.l_his)
        hi = min(t_total, i + config.l_fut + 1)
        out[i] = _cosine(a[lo:hi], b[lo:hi])
    return ScoreStream(out, stream_role=ROLE_CDC)


def refine(init: ScoreStream, cdc: ScoreStream) -> ScoreStream:
    """Average the primary stream with its consistency stream."""
    if len(init) != len(cdc):
        raise LengthMismatch(f"init has {len(init)} frames, cdc {len(cdc)}")
    return ScoreStream((init.scores + cdc.scores) / 2.0, stream_role=ROLE_REFINE)


def streaming_refine(init_feed: Iterable[float], inter_feed: Iterable[float],
                     config: CdcConfig) -> Iterator[float]:
    """Frame-by-frame refinement with bounded buffering.

    Consumes the two linear-domain feeds in lockstep and yields the refined
    score of frame t right after frame min(T, t + l_fut) has been read, so
    the added latency is exactly l_fut frames. Values are identical to the
    batch ``refine(init, cdc_scores(init, inter, config))`` path.
    """
    cap = config.l_his + config.l_fut + 1
    buf_init: list[float] = []
    buf_inter: list[float] = []
    first_buffered = 1  # 1-based frame index of buf[0]
    consumed = 0
    emitted = 0

    def emit(t: int) -> float:
        lo_frame = max(1, t - config.l_his)
        lo = lo_frame - first_buffered
        hi = consumed - first_buffered + 1  # window already right-truncated
        a = np.asarray(buf_init[lo:hi], dtype=np.float64)
        b = np.asarray(buf_inter[lo:hi], dtype=np.float64)
        center = buf_init[t - first_buffered]
        return (center + _cosine(a, b)) / 2.0

    it_init = iter(init_feed)
    it_inter = iter(inter_feed)
    while True:
        stopped_init = stopped_inter = False
        try:
            va = float(next(it_init))
        except StopIteration:
            stopped_init = True
        try:
            vb = float(next(it_inter))
        except StopIteration:
            stopped_inter = True
        if stopped_init != stopped_inter:
            raise LengthMismatch("init and inter feeds ended at different lengths")
        if stopped_init:
            break
        consumed += 1
        buf_init.append(va)
        buf_inter.append(vb)
        if len(buf_init) > cap:
            buf_init.pop(0)
            buf_inter.pop(0)
            first_buffered += 1
        t = consumed - config.l_fut
        if t >= 1:
            emitted += 1
            yield emit(t)

    while emitted < consumed:
        emitted += 1
        yield emit(emitted)
