"""Synthetic dual-branch posteriorgram generator.

Stands in for trained acoustic models at desk scale: emits paired
main/intermediate posterior matrices with keywords planted at known frames.
Difficulty is dialed by the posterior mass given to aligned tokens
(``dominance``). The intermediate branch models a shallower layer: its
background is an independent draw, and each planted-span frame follows the
main branch with probability given by the branch correlation. High
correlation reproduces the stable, near-identical score curves of true
keywords; low correlation the diverging curves of easily-triggered false
alarms. At correlation 1 the branches are bitwise identical.

Dominance tiers are mapped onto SNR-style bucket labels purely for report
layout; the numbers are synthetic and not comparable to any real corpus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SpanTooLong
from .io import (
    DEFAULT_FRAME_MS,
    DEMO_LEXICON,
    Manifest,
    ManifestEntry,
    PosteriorGram,
    save_lexicon,
    save_manifest,
    save_phone_table,
    save_posteriors,
    CMU_PHONES,
)

#: Bucket label -> aligned-token dominance. Harder tiers mimic lower SNRs.
DEFAULT_DOMINANCE_TIERS: dict[str, float] = {
    "-5": 0.45,
    "0": 0.55,
    "5": 0.65,
    "10": 0.74,
    "15": 0.82,
    "20": 0.89,
    "+inf": 0.96,
}

_BLANK_DOMINANT_RATE = 0.5
_RESIDUAL_LOG_RANGE = (np.log(1e-6), np.log(3e-3))
_TAIL_LOG_RANGE = (-30.0, -12.0)


@dataclass
class SynthConfig:
    keyword: tuple[int, ...]
    vocab_size: int = 71
    frame_duration_ms: float = DEFAULT_FRAME_MS
    num_pos: int = 100
    num_neg: int = 20
    neg_duration_s: float = 60.0
    dominance: float = 0.8
    noise_temp: float = 1.0
    branch_corr_pos: float = 0.95
    branch_corr_neg: float = 0.1
    confusable_rate: float = 0.25
    confusable_keep: int | None = None  # leading keyword tokens realized; None = all
    seed: int = 0
    max_span_frames: int = 100

    def __post_init__(self):
        self.keyword = tuple(int(t) for t in self.keyword)
        if not 0.0 < self.dominance <= 1.0:
            raise ValueError("dominance must be in (0, 1]")
        if self.noise_temp <= 0:
            raise ValueError("noise_temp must be positive")
        for name in ("branch_corr_pos", "branch_corr_neg", "confusable_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if any(t <= 0 or t >= self.vocab_size for t in self.keyword):
            raise ValueError("keyword tokens must be non-blank ids below vocab_size")


@dataclass
class GroundTruth:
    id: str
    keyword_present: bool
    keyword_span: tuple[int, int] | None  # 1-based inclusive frames
    snr_tag: str | None = None


def _background(rng: np.random.Generator, n_frames: int, vocab_size: int,
                noise_temp: float) -> np.ndarray:
    """Confident ASR-style frames: one dominant token per frame (the blank
    about half the time) holding all but a tiny residual, the rest orders of
    magnitude down. Larger noise_temp lifts the residual toward flat noise."""
    residual = np.exp(rng.uniform(*_RESIDUAL_LOG_RANGE, size=n_frames))
    dom_token = np.where(rng.random(n_frames) < _BLANK_DOMINANT_RATE, 0,
                         rng.integers(1, vocab_size, size=n_frames))
    lo, hi = _TAIL_LOG_RANGE
    tail = np.exp(rng.uniform(lo, hi, size=(n_frames, vocab_size)) / noise_temp)
    rows = np.arange(n_frames)
    tail[rows, dom_token] = 0.0
    tail *= (residual / tail.sum(axis=1))[:, None]
    probs = tail
    probs[rows, dom_token] = 1.0 - residual
    return probs


def _span_layout(rng: np.random.Generator, tokens: tuple[int, ...],
                 max_span_frames: int) -> list[tuple[int, int]]:
    """Per-frame (token, is_gap) plan: 2-6 frames per token, blanks forced
    between repeated tokens. Resamples until it fits the span budget."""
    min_span = 2 * len(tokens) + sum(
        1 for a, b in zip(tokens, tokens[1:]) if a == b)
    if min_span > max_span_frames:
        raise SpanTooLong(
            f"{len(tokens)}-token keyword needs at least {min_span} frames, "
            f"budget is {max_span_frames}")
    for attempt in range(100):
        plan: list[tuple[int, int]] = []
        prev = None
        for tok in tokens:
            forced_gap = prev is not None and tok == prev
            gap = rng.integers(1, 3) if forced_gap else rng.integers(0, 2)
            for _ in range(gap):
                plan.append((0, 1))
            for _ in range(rng.integers(2, 7)):
                plan.append((tok, 0))
            prev = tok
        if len(plan) <= max_span_frames:
            return plan
    # Deterministic fallback: minimal segments always fit (checked above).
    plan = []
    prev = None
    for tok in tokens:
        if prev is not None and tok == prev:
            plan.append((0, 1))
        plan.extend([(tok, 0), (tok, 0)])
        prev = tok
    return plan


def _span_probs(rng: np.random.Generator, plan: list[tuple[int, int]],
                dominance: float, vocab_size: int) -> np.ndarray:
    """Posteriors for span frames: the aligned token holds ``dominance`` mass,
    the blank takes most of the remainder, the rest is spread uniformly."""
    n = len(plan)
    probs = np.zeros((n, vocab_size))
    for i, (tok, is_gap) in enumerate(plan):
        if is_gap:
            d = max(dominance, 0.7)
            probs[i, 0] = d
            rest = (1.0 - d) / (vocab_size - 1)
            probs[i, 1:] = rest
        else:
            rest = 1.0 - dominance
            probs[i, 1:] = rest * 0.3 / (vocab_size - 2)
            probs[i, 0] = rest * 0.7
            probs[i, tok] = dominance
    return probs


def _perturb_branch(rng: np.random.Generator, main: np.ndarray,
                    span: tuple[int, int] | None, corr: float,
                    vocab_size: int, noise_temp: float) -> np.ndarray:
    """Intermediate branch. At corr == 1 it is the main branch verbatim.

    Below that it models a shallower layer: an independent background draw
    everywhere, with each span frame copied from the main branch with
    probability ``corr`` (a decorrelated layer misses the pattern that often).
    """
    if corr >= 1.0:
        return main.copy()
    inter = _background(rng, main.shape[0], vocab_size, noise_temp)
    if span is not None:
        lo, hi = span  # 0-based half-open
        keep = rng.random(hi - lo) < corr
        inter[lo:hi][keep] = main[lo:hi][keep]
    return inter


def _to_pg(probs: np.ndarray, frame_duration_ms: float) -> PosteriorGram:
    with np.errstate(divide="ignore"):
        return PosteriorGram(np.log(probs), frame_duration_ms=frame_duration_ms)


def synth_positive(config: SynthConfig, rng: np.random.Generator,
                   utt_id: str = "pos", dominance: float | None = None,
                   snr_tag: str | None = None
                   ) -> tuple[PosteriorGram, PosteriorGram, GroundTruth]:
    """One keyword utterance: random length, keyword planted at a random offset."""
    d = config.dominance if dominance is None else dominance
    plan = _span_layout(rng, config.keyword, config.max_span_frames)
    span_len = len(plan)
    n_frames = span_len + int(rng.integers(20, 121))
    offset = int(rng.integers(0, n_frames - span_len + 1))

    probs = _background(rng, n_frames, config.vocab_size, config.noise_temp)
    probs[offset:offset + span_len] = _span_probs(rng, plan, d, config.vocab_size)
    inter = _perturb_branch(rng, probs, (offset, offset + span_len),
                            config.branch_corr_pos, config.vocab_size,
                            config.noise_temp)
    truth = GroundTruth(id=utt_id, keyword_present=True,
                        keyword_span=(offset + 1, offset + span_len),
                        snr_tag=snr_tag)
    return (_to_pg(probs, config.frame_duration_ms),
            _to_pg(inter, config.frame_duration_ms), truth)


def synth_negative(config: SynthConfig, rng: np.random.Generator,
                   utt_id: str = "neg"
                   ) -> tuple[PosteriorGram, PosteriorGram, GroundTruth]:
    """Keyword-free audio; with prob confusable_rate a near-keyword span is
    planted in the main branch while the intermediate branch decorrelates."""
    n_frames = max(2, round(config.neg_duration_s * 1000.0 / config.frame_duration_ms))
    probs = _background(rng, n_frames, config.vocab_size, config.noise_temp)
    span = None
    if rng.random() < config.confusable_rate:
        keep = config.confusable_keep or len(config.keyword)
        tokens = config.keyword[:max(1, keep)]
        plan = _span_layout(rng, tokens, config.max_span_frames)
        span_len = len(plan)
        if span_len < n_frames:
            offset = int(rng.integers(0, n_frames - span_len + 1))
            probs[offset:offset + span_len] = _span_probs(
                rng, plan, config.dominance, config.vocab_size)
            span = (offset, offset + span_len)
    inter = _perturb_branch(rng, probs, span, config.branch_corr_neg,
                            config.vocab_size, config.noise_temp)
    truth = GroundTruth(id=utt_id, keyword_present=False, keyword_span=None)
    return (_to_pg(probs, config.frame_duration_ms),
            _to_pg(inter, config.frame_duration_ms), truth)


def _rng_for(seed: int, kind: int, index: int) -> np.random.Generator:
    # Per-utterance streams keyed by (seed, kind, index): generation order
    # and parallelism cannot change any utterance's content.
    return np.random.default_rng([seed, kind, index])


def synth_corpus(config: SynthConfig, out_dir,
                 tiers: dict[str, float] | None = None,
                 lexicon: dict[str, list[str]] | None = None) -> Manifest:
    """Write a corpus: posterior pairs, manifest, phone table, demo lexicon.

    Positives are spread round-robin over the dominance tiers and tagged with
    the tier's SNR-style label. Returns the manifest (also saved to
    ``manifest.jsonl``).
    """
    out_dir = Path(out_dir)
    (out_dir / "posteriors").mkdir(parents=True, exist_ok=True)
    tiers = dict(tiers) if tiers else dict(DEFAULT_DOMINANCE_TIERS)
    tier_items = list(tiers.items())
    entries = []
    truths = []

    for i in range(config.num_pos):
        tag, dom = tier_items[i % len(tier_items)]
        rng = _rng_for(config.seed, 1, i)
        utt_id = f"pos-{i:06d}"
        main, inter, truth = synth_positive(config, rng, utt_id=utt_id,
                                            dominance=dom, snr_tag=tag)
        main_path = f"posteriors/{utt_id}.main.kwsp"
        inter_path = f"posteriors/{utt_id}.inter.kwsp"
        save_posteriors(main, out_dir / main_path)
        save_posteriors(inter, out_dir / inter_path)
        entries.append(ManifestEntry(
            id=utt_id, main_path=main_path, inter_path=inter_path,
            label="positive", snr_db=None if tag == "+inf" else float(tag),
            duration_s=main.num_frames * config.frame_duration_ms / 1000.0))
        truths.append(truth)

    for j in range(config.num_neg):
        rng = _rng_for(config.seed, 2, j)
        utt_id = f"neg-{j:06d}"
        main, inter, truth = synth_negative(config, rng, utt_id=utt_id)
        main_path = f"posteriors/{utt_id}.main.kwsp"
        inter_path = f"posteriors/{utt_id}.inter.kwsp"
        save_posteriors(main, out_dir / main_path)
        save_posteriors(inter, out_dir / inter_path)
        entries.append(ManifestEntry(
            id=utt_id, main_path=main_path, inter_path=inter_path,
            label="negative", snr_db=None,
            duration_s=main.num_frames * config.frame_duration_ms / 1000.0))
        truths.append(truth)

    manifest = Manifest(entries, base_dir=out_dir)
    save_manifest(manifest, out_dir / "manifest.jsonl")
    save_phone_table(CMU_PHONES, out_dir / "phones.txt")
    save_lexicon(lexicon or DEMO_LEXICON, out_dir / "lexicon.txt")

    with open(out_dir / "truth.jsonl", "w") as fh:
        for t in truths:
            fh.write(json.dumps({
                "id": t.id, "keyword_present": t.keyword_present,
                "keyword_span": t.keyword_span, "snr_tag": t.snr_tag,
            }, sort_keys=True) + "\n")
    return manifest
