"""Command-line pipeline: synth -> decode -> refine -> eval / sweep.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import cdc, evaluation, io, synth, trellis
from .detect import DetectConfig
from .errors import KwsError

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--quiet", action="store_true")


def _say(args, msg: str) -> None:
    if not args.quiet:
        print(msg)


def _parse_tiers(text: str) -> dict[str, float]:
    tiers = {}
    for part in text.split(","):
        label, _, value = part.partition(":")
        if not value:
            raise argparse.ArgumentTypeError(
                f"tier {part!r} is not of the form LABEL:DOMINANCE")
        tiers[label.strip()] = float(value)
    return tiers


def cmd_synth(args) -> int:
    phones = io.default_phone_table()
    tokens = io.keyword_to_tokens(args.keyword, io.DEMO_LEXICON, phones)
    num_neg = args.num_neg
    if num_neg is None:
        num_neg = max(1, round(args.neg_hours * 3600.0 / args.neg_utt_s))
    config = synth.SynthConfig(
        keyword=tuple(tokens),
        vocab_size=len(phones) + 1,
        frame_duration_ms=args.frame_ms,
        num_pos=args.num_pos,
        num_neg=num_neg,
        neg_duration_s=args.neg_hours * 3600.0 / num_neg,
        confusable_rate=args.confusable_rate,
        branch_corr_pos=args.branch_corr_pos,
        branch_corr_neg=args.branch_corr_neg,
        seed=args.seed,
    )
    manifest = synth.synth_corpus(config, args.out, tiers=args.dominance_tiers)
    _say(args, f"wrote {len(manifest)} utterances ({config.num_pos} positive, "
               f"{config.num_neg} negative) to {args.out}")
    return 0


def _decode_one(entry, manifest, spec, config, out_dir):
    pg = io.load_posteriors(manifest.resolve(entry.main_path),
                            frame_duration_ms=config.frame_duration_ms,
                            validate=False)
    frames = trellis.decode_utterance(pg, spec, config)
    stream = cdc.to_linear_unit(frames, role=cdc.ROLE_INIT)
    io.save_scores(stream.scores, out_dir / "init" / f"{entry.id}.kwsp")
    if entry.inter_path is not None:
        pg2 = io.load_posteriors(manifest.resolve(entry.inter_path),
                                 frame_duration_ms=config.frame_duration_ms,
                                 validate=False)
        frames2 = trellis.decode_utterance(pg2, spec, config)
        stream2 = cdc.to_linear_unit(frames2, role=cdc.ROLE_INTER)
        io.save_scores(stream2.scores, out_dir / "inter" / f"{entry.id}.kwsp")
    return entry.id


def cmd_decode(args) -> int:
    manifest = io.load_manifest(args.manifest)
    lexicon = io.load_lexicon(args.lexicon)
    phones = io.load_phone_table(args.phones)
    tokens = io.keyword_to_tokens(args.keyword, lexicon, phones)
    spec = trellis.expand_keyword(tokens)
    config = trellis.DecoderConfig(
        log_bonus=args.bonus_log, timeout_s=args.timeout_s,
        literal_entry=not args.variant_entry, frame_duration_ms=args.frame_ms)
    out_dir = Path(args.out)
    (out_dir / "init").mkdir(parents=True, exist_ok=True)
    if any(e.inter_path for e in manifest):
        (out_dir / "inter").mkdir(parents=True, exist_ok=True)

    entries = sorted(manifest, key=lambda e: e.id)
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            list(pool.map(lambda e: _decode_one(e, manifest, spec, config, out_dir),
                          entries))
    else:
        for e in entries:
            _decode_one(e, manifest, spec, config, out_dir)
    _say(args, f"decoded {len(entries)} utterances "
               f"(keyword {args.keyword!r} -> {len(tokens)} tokens) into {out_dir}")
    return 0


def cmd_refine(args) -> int:
    init_dir = Path(args.init_dir)
    inter_dir = Path(args.inter_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = cdc.CdcConfig(l_his=args.l_his, l_fut=args.l_fut)
    init_files = sorted(init_dir.glob("*.kwsp"))
    if not init_files:
        raise KwsError(f"no .kwsp score files in {init_dir}")
    for path in init_files:
        other = inter_dir / path.name
        if not other.exists():
            raise KwsError(f"missing intermediate scores {other}")
        init = cdc.ScoreStream(io.load_scores(path), stream_role=cdc.ROLE_INIT)
        inter = cdc.ScoreStream(io.load_scores(other), stream_role=cdc.ROLE_INTER)
        refined = cdc.refine(init, cdc.cdc_scores(init, inter, config))
        io.save_scores(refined.scores, out_dir / path.name)
    _say(args, f"refined {len(init_files)} streams "
               f"(l_his={config.l_his}, l_fut={config.l_fut}, "
               f"latency {config.added_latency_ms():.0f} ms) into {out_dir}")
    return 0


def _load_scored(args) -> tuple[list, list]:
    manifest = io.load_manifest(args.manifest)
    scores_dir = Path(args.scores_dir)
    positives, negatives = [], []
    for e in sorted(manifest, key=lambda x: x.id):
        path = scores_dir / f"{e.id}.kwsp"
        stream = cdc.ScoreStream(io.load_scores(path))
        scored = evaluation.ScoredUtterance.build(
            id=e.id, label=e.label, snr_db=e.snr_db,
            duration_s=e.duration_s, stream=stream)
        (positives if e.label == "positive" else negatives).append(scored)
    return positives, negatives


def cmd_eval(args) -> int:
    positives, negatives = _load_scored(args)
    config = DetectConfig(lockout_s=args.lockout_s, frame_duration_ms=args.frame_ms)
    report = evaluation.evaluate_at_far(positives, negatives, args.far, config)
    if args.report == "json":
        print(report.to_json())
    else:
        print(report.to_text(), end="")
    return 0


def cmd_sweep(args) -> int:
    positives, negatives = _load_scored(args)
    config = DetectConfig(lockout_s=args.lockout_s, frame_duration_ms=args.frame_ms)
    grid = args.grid
    if grid != "auto":
        grid = np.array([float(x) for x in grid.split(",")])
    points = evaluation.det_sweep(positives, negatives, grid, config)
    Path(args.out).write_text(evaluation.sweep_to_csv(points))
    _say(args, f"wrote {len(points)} sweep points to {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="kws", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="generate a synthetic dual-branch corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--keyword", default="HEY SNIPS")
    p.add_argument("--num-pos", type=int, default=100)
    p.add_argument("--num-neg", type=int, default=None,
                   help="default: neg-hours split into neg-utt-s pieces")
    p.add_argument("--neg-hours", type=float, default=2.0)
    p.add_argument("--neg-utt-s", type=float, default=120.0)
    p.add_argument("--dominance-tiers", type=_parse_tiers, default=None)
    p.add_argument("--confusable-rate", type=float, default=0.25)
    p.add_argument("--branch-corr-pos", type=float, default=0.95)
    p.add_argument("--branch-corr-neg", type=float, default=0.1)
    p.add_argument("--frame-ms", type=float, default=io.DEFAULT_FRAME_MS)
    _common_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("decode", help="run the keyword trellis over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--lexicon", required=True)
    p.add_argument("--phones", required=True)
    p.add_argument("--keyword", required=True)
    p.add_argument("--bonus-log", type=float, default=3.0)
    p.add_argument("--timeout-s", type=float, default=3.0)
    p.add_argument("--variant-entry", action="store_true",
                   help="charge the first token's posterior at path entry")
    p.add_argument("--frame-ms", type=float, default=io.DEFAULT_FRAME_MS)
    p.add_argument("--out", required=True)
    _common_flags(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("refine", help="consistency-rescore init/inter streams")
    p.add_argument("--init-dir", required=True)
    p.add_argument("--inter-dir", required=True)
    p.add_argument("--l-his", type=int, default=0)
    p.add_argument("--l-fut", type=int, default=30)
    p.add_argument("--out", required=True)
    _common_flags(p)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("eval", help="recall at a fixed false-alarm rate")
    p.add_argument("--manifest", required=True)
    p.add_argument("--scores-dir", required=True)
    p.add_argument("--far", type=float, default=0.05)
    p.add_argument("--report", choices=["text", "json"], default="text")
    p.add_argument("--lockout-s", type=float, default=3.0)
    p.add_argument("--frame-ms", type=float, default=io.DEFAULT_FRAME_MS)
    _common_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="DET sweep to CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--scores-dir", required=True)
    p.add_argument("--grid", default="auto",
                   help="'auto' or comma-separated thresholds")
    p.add_argument("--out", required=True)
    p.add_argument("--lockout-s", type=float, default=3.0)
    p.add_argument("--frame-ms", type=float, default=io.DEFAULT_FRAME_MS)
    _common_flags(p)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KwsError as exc:
        print(f"kws {args.command}: {exc}", file=sys.stderr)
        return DATA_EXIT
    except OSError as exc:
        print(f"kws {args.command}: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
