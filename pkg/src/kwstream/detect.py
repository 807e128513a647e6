"""Threshold detection on score streams: first crossing fires, then lockout."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cdc import ScoreStream
from .io import DEFAULT_FRAME_MS


@dataclass(frozen=True)
class DetectConfig:
    threshold: float = 0.5
    lockout_s: float = 3.0
    frame_duration_ms: float = DEFAULT_FRAME_MS

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        if self.lockout_s <= 0:
            raise ValueError("lockout_s must be positive")

    @property
    def lockout_frames(self) -> int:
        return max(1, round(self.lockout_s * 1000.0 / self.frame_duration_ms))


@dataclass(frozen=True)
class DetectionEvent:
    t: int
    time_s: float
    score: float


def _firing_indices(scores: np.ndarray, threshold: float, lockout: int) -> list[int]:
    """0-based indices of crossings surviving the lockout (greedy, in order)."""
    crossings = np.flatnonzero(scores >= threshold)
    if crossings.size == 0:
        return []
    fired = [int(crossings[0])]
    pos = 0
    while True:
        pos = int(np.searchsorted(crossings, fired[-1] + lockout, side="left"))
        if pos >= crossings.size:
            return fired
        fired.append(int(crossings[pos]))


def detect_events(stream: ScoreStream, config: DetectConfig) -> list[DetectionEvent]:
    """Fire at each threshold crossing at least lockout_frames after the last."""
    frame_s = config.frame_duration_ms / 1000.0
    return [
        DetectionEvent(t=idx + 1, time_s=(idx + 1) * frame_s,
                       score=float(stream.scores[idx]))
        for idx in _firing_indices(stream.scores, config.threshold,
                                   config.lockout_frames)
    ]


def count_events(stream: ScoreStream, config: DetectConfig) -> int:
    """Event count without materializing event objects (hot path for sweeps)."""
    return len(_firing_indices(stream.scores, config.threshold,
                               config.lockout_frames))
