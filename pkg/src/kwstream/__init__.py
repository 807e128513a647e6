"""Streaming keyword spotting on CTC posteriorgrams.

A frame-synchronous keyword trellis search that can start at any frame, plus
cross-layer consistency rescoring of the resulting score streams, detection,
evaluation at fixed false-alarm rates, a synthetic corpus generator, and a
brute-force reference decoder for verification.
"""

from .cdc import (
    CdcConfig,
    ScoreStream,
    cdc_scores,
    linear_unit,
    refine,
    streaming_refine,
    to_linear_unit,
)
from .detect import DetectConfig, DetectionEvent, count_events, detect_events
from .evaluation import (
    EvalReport,
    ScoredUtterance,
    SweepPoint,
    UtteranceRecord,
    det_sweep,
    evaluate_at_far,
    far_at_threshold,
    recall_at_threshold,
    snr_bucket,
    sweep_to_csv,
    threshold_for_far,
)
from .io import (
    Manifest,
    ManifestEntry,
    PosteriorGram,
    keyword_to_tokens,
    load_lexicon,
    load_manifest,
    load_phone_table,
    load_posteriors,
    load_scores,
    save_manifest,
    save_posteriors,
    save_scores,
)
from .oracle import ExplicitPath, oracle_decode, oracle_decode_with_paths
from .synth import GroundTruth, SynthConfig, synth_corpus, synth_negative, synth_positive
from .trellis import (
    DecoderConfig,
    DecoderState,
    FrameScore,
    KeywordSpec,
    decode_utterance,
    expand_keyword,
    init_state,
    step,
)

__version__ = "0.1.0"
