"""Recall at fixed false-alarm rate, macro-averaged over SNR buckets.

The operating protocol: pick the smallest threshold whose event rate on
keyword-free audio stays at or under the FAR budget (events per hour), then
report per-SNR-bucket recall of the positives at that threshold, plus the
unweighted macro average. A positive is recalled when at least one event
fires anywhere in it, which for first-crossing detection is equivalent to
its peak score reaching the threshold.
"""

from __future__ import annotations

import dataclasses
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cdc import ScoreStream
from .detect import DetectConfig, count_events
from .errors import EmptyBucket, NoNegativeData

#: Presentation order of SNR buckets, mirroring the noisy-eval convention.
SNR_BUCKET_ORDER = ["-5", "0", "5", "10", "15", "20", "+inf"]

#: Threshold margin used for the FAR = 0 operating point.
FAR_ZERO_EPSILON = 1e-9

SWEEP_CSV_HEADER = "threshold,far_per_hour,macro_recall"


def snr_bucket(snr_db: float | None) -> str:
    """Bucket label for an SNR value; None means clean (+inf)."""
    if snr_db is None:
        return "+inf"
    if float(snr_db) == int(snr_db):
        return str(int(snr_db))
    return f"{snr_db:g}"


@dataclass
class UtteranceRecord:
    id: str
    label: str  # "positive" | "negative"
    snr_db: float | None
    duration_s: float
    peak_score: float

    @property
    def bucket(self) -> str:
        return snr_bucket(self.snr_db)


@dataclass
class ScoredUtterance:
    """An utterance record together with the score stream it was built from."""

    record: UtteranceRecord
    stream: ScoreStream

    @classmethod
    def build(cls, id: str, label: str, snr_db: float | None, duration_s: float,
              stream: ScoreStream) -> "ScoredUtterance":
        rec = UtteranceRecord(id=id, label=label, snr_db=snr_db,
                              duration_s=duration_s, peak_score=stream.peak())
        return cls(record=rec, stream=stream)


@dataclass
class EvalReport:
    threshold: float
    far_per_hour: float
    recall_by_snr: dict[str, float]
    macro_recall: float
    target_far: float | None = None
    num_positives: int = 0
    num_negatives: int = 0
    negative_hours: float = 0.0
    bucket_sizes: dict[str, int] = field(default_factory=dict)

    @property
    def miss_rate_by_snr(self) -> dict[str, float]:
        return {k: 1.0 - v for k, v in self.recall_by_snr.items()}

    def to_json(self) -> str:
        doc = {
            "threshold": self.threshold,
            "target_far_per_hour": self.target_far,
            "far_per_hour": self.far_per_hour,
            "recall_by_snr": self.recall_by_snr,
            "miss_rate_by_snr": self.miss_rate_by_snr,
            "macro_recall": self.macro_recall,
            "num_positives": self.num_positives,
            "num_negatives": self.num_negatives,
            "negative_hours": self.negative_hours,
            "bucket_sizes": self.bucket_sizes,
        }
        return json.dumps(doc, sort_keys=True, indent=2)

    def to_text(self) -> str:
        buckets = [b for b in SNR_BUCKET_ORDER if b in self.recall_by_snr]
        buckets += sorted(set(self.recall_by_snr) - set(buckets))
        lines = [
            f"threshold        {self.threshold:.9f}",
            f"far_per_hour     {self.far_per_hour:.6f}"
            + (f"  (target {self.target_far:g})" if self.target_far is not None else ""),
            f"negatives        {self.num_negatives} utt / {self.negative_hours:.3f} h",
            f"positives        {self.num_positives} utt",
            "",
            "SNR      " + "".join(f"{b:>8}" for b in SNR_BUCKET_ORDER) + f"{'Avg.':>8}",
        ]
        cells = []
        for b in SNR_BUCKET_ORDER:
            if b in self.recall_by_snr:
                cells.append(f"{100.0 * self.recall_by_snr[b]:>8.1f}")
            else:
                cells.append(f"{'-':>8}")
        lines.append("Recall   " + "".join(cells) + f"{100.0 * self.macro_recall:>8.1f}")
        return "\n".join(lines) + "\n"


def _total_hours(negatives: list[ScoredUtterance]) -> float:
    return sum(u.record.duration_s for u in negatives) / 3600.0


def far_at_threshold(negatives: list[ScoredUtterance], threshold: float,
                     config: DetectConfig) -> float:
    """False alarms per hour: event count over keyword-free audio time."""
    hours = _total_hours(negatives)
    if not negatives or hours <= 0:
        raise NoNegativeData("FAR needs negative audio with positive duration")
    cfg = dataclasses.replace(config, threshold=threshold)
    n_events = sum(count_events(u.stream, cfg) for u in negatives)
    return n_events / hours


def threshold_for_far(negatives: list[ScoredUtterance], target_far: float,
                      config: DetectConfig) -> float:
    """Smallest observed threshold whose FAR does not exceed the target.

    ``target_far == 0`` short-circuits to just above the highest negative
    peak, the exact zero-false-alarm operating point on this corpus.
    """
    if target_far < 0:
        raise ValueError("target_far must be non-negative")
    hours = _total_hours(negatives)
    if not negatives or hours <= 0:
        raise NoNegativeData("threshold search needs negative audio")
    max_peak = max(u.record.peak_score for u in negatives)
    if target_far == 0:
        return min(1.0, max_peak) + FAR_ZERO_EPSILON

    values = np.unique(np.concatenate(
        [u.stream.scores for u in negatives]
        + [np.array([0.0, 1.0, min(1.0, max_peak) + FAR_ZERO_EPSILON])]))
    # FAR is non-increasing in the threshold: bisect for the leftmost value
    # meeting the budget.
    lo, hi = 0, values.size - 1
    if far_at_threshold(negatives, float(values[lo]), config) <= target_far:
        return float(values[lo])
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if far_at_threshold(negatives, float(values[mid]), config) <= target_far:
            hi = mid
        else:
            lo = mid
    return float(values[hi])


def recall_at_threshold(positives: list[ScoredUtterance], threshold: float,
                        expected_buckets: list[str] | None = None
                        ) -> tuple[dict[str, float], float]:
    """Per-bucket and macro recall; empty expected buckets warn and drop out."""
    hits: dict[str, int] = {}
    totals: dict[str, int] = {}
    for u in positives:
        b = u.record.bucket
        totals[b] = totals.get(b, 0) + 1
        if u.record.peak_score >= threshold:
            hits[b] = hits.get(b, 0) + 1
    if expected_buckets:
        for b in expected_buckets:
            if b not in totals:
                warnings.warn(f"{EmptyBucket.__name__}: no positives in bucket "
                              f"{b!r}; omitted from macro", stacklevel=2)
    recall = {b: hits.get(b, 0) / n for b, n in totals.items()}
    macro = sum(recall.values()) / len(recall) if recall else 0.0
    return recall, macro


def evaluate_at_far(positives: list[ScoredUtterance],
                    negatives: list[ScoredUtterance], target_far: float,
                    config: DetectConfig) -> EvalReport:
    """The full protocol: threshold from negatives, recall from positives."""
    theta = threshold_for_far(negatives, target_far, config)
    far = far_at_threshold(negatives, theta, config)
    recall, macro = recall_at_threshold(positives, theta)
    sizes: dict[str, int] = {}
    for u in positives:
        sizes[u.record.bucket] = sizes.get(u.record.bucket, 0) + 1
    return EvalReport(threshold=theta, far_per_hour=far, recall_by_snr=recall,
                      macro_recall=macro, target_far=target_far,
                      num_positives=len(positives), num_negatives=len(negatives),
                      negative_hours=_total_hours(negatives), bucket_sizes=sizes)


@dataclass(frozen=True)
class SweepPoint:
    threshold: float
    far_per_hour: float
    macro_recall: float


MAX_AUTO_GRID = 512


def det_sweep(positives: list[ScoredUtterance], negatives: list[ScoredUtterance],
              grid, config: DetectConfig) -> list[SweepPoint]:
    """Operating points over a threshold grid, sorted by threshold.

    ``grid="auto"`` uses the score values at which the corpus behavior can
    change — negative frame scores and positive peaks plus the endpoints —
    thinned to at most :data:`MAX_AUTO_GRID` evenly ranked values.
    """
    if isinstance(grid, str) and grid == "auto":
        parts = [u.stream.scores for u in negatives]
        parts.append(np.array([u.record.peak_score for u in positives]))
        parts.append(np.array([0.0, 1.0]))
        grid = np.unique(np.concatenate(parts))
        if grid.size > MAX_AUTO_GRID:
            keep = np.unique(np.linspace(0, grid.size - 1, MAX_AUTO_GRID).round()
                             .astype(np.int64))
            grid = grid[keep]
    grid = np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("sweep grid must be non-empty")
    out = []
    for theta in np.sort(grid):
        far = far_at_threshold(negatives, float(theta), config)
        _, macro = recall_at_threshold(positives, float(theta))
        out.append(SweepPoint(float(theta), far, macro))
    return out


def sweep_to_csv(points: list[SweepPoint]) -> str:
    lines = [SWEEP_CSV_HEADER]
    for p in points:
        lines.append(f"{p.threshold:.9f},{p.far_per_hour:.9f},{p.macro_recall:.9f}")
    return "\n".join(lines) + "\n"
