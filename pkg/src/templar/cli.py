"""Command-line entry point.

Exit codes: 0 success, 1 domain error (one ``error:`` line on stderr),
2 usage error. Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .audio_io import TrimConfig, read_wav
from .dtw import DtwOptions, Metric, Normalize
from .errors import TemplarError
from .evaluation import (
    load_corpus,
    run_all_pairs,
    run_cross_speaker,
    run_same_speaker,
    synthesize_corpus,
    write_corpus,
)
from .mfcc import MfccConfig, Window
from .recognizer import enroll, recognize, utterance_features
from .template_store import TemplateStore, load_store, save_store


def _non_negative_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _mfcc_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("feature extraction")
    g.add_argument("--config", type=Path, help="MFCC config file in key=value form")
    g.add_argument("--frame-len-ms", type=float)
    g.add_argument("--frame-shift-ms", type=float)
    g.add_argument("--window", choices=[w.value for w in Window])
    g.add_argument("--fft-size", type=int)
    g.add_argument("--num-filters", type=int)
    g.add_argument("--fmin", dest="fmin_hz", type=float)
    g.add_argument("--fmax", dest="fmax_hz", type=float)
    g.add_argument("--num-ceps", type=int)
    g.add_argument("--log-floor", type=float)
    t = p.add_argument_group("endpoint trimming")
    t.add_argument("--trim-threshold", type=float, default=TrimConfig.energy_threshold_ratio)
    t.add_argument("--guard-frames", type=_non_negative_int, default=TrimConfig.guard_frames)
    t.add_argument("--trim-frame-ms", type=float, default=TrimConfig.trim_frame_ms)
    t.add_argument("--no-trim", action="store_true", help="skip silence trimming")
    p.add_argument("--json", action="store_true", help="emit a single JSON document")
    return p


def _dtw_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("matching")
    g.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.EUCLIDEAN.value)
    g.add_argument("--band", type=_non_negative_int, help="Sakoe-Chiba band radius in frames")
    g.add_argument(
        "--normalize", choices=[n.value for n in Normalize], default=Normalize.NONE.value
    )
    return p


_MFCC_FIELDS = (
    "frame_len_ms",
    "frame_shift_ms",
    "window",
    "fft_size",
    "num_filters",
    "fmin_hz",
    "fmax_hz",
    "num_ceps",
    "log_floor",
)


def mfcc_config(args) -> MfccConfig:
    base = MfccConfig()
    if args.config is not None:
        base = MfccConfig.from_text(args.config.read_text())
    overrides = {k: getattr(args, k) for k in _MFCC_FIELDS if getattr(args, k) is not None}
    if not overrides:
        return base
    values = {k: getattr(base, k) for k in _MFCC_FIELDS}
    values.update(overrides)
    return MfccConfig(**values)


def trim_config(args) -> TrimConfig | None:
    if args.no_trim:
        return None
    return TrimConfig(args.trim_threshold, args.guard_frames, args.trim_frame_ms)


def dtw_options(args) -> DtwOptions:
    return DtwOptions(metric=args.metric, band_radius=args.band, normalize=args.normalize)


def _finite(x: float | None) -> float | None:
    return None if x is None or not math.isfinite(x) else x


def _fp(value: int | None) -> str | None:
    return None if value is None else f"{value:016x}"


def _emit(text: str, out: Path | None = None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
        print(f"wrote {out}", file=sys.stderr)


def _dump(doc) -> str:
    return json.dumps(doc, indent=2) + "\n"


def cmd_extract(args) -> int:
    cfg = mfcc_config(args)
    features = utterance_features(read_wav(args.wav), cfg, trim_config(args))
    doc = {
        "fingerprint": _fp(features.config_fingerprint),
        "config": cfg.to_text(),
        "num_frames": features.num_frames,
        "num_ceps": features.num_ceps,
        "frames": features.frames.tolist(),
    }
    if args.out is not None:
        args.out.write_text(_dump(doc))
        summary = {"out": str(args.out), "num_frames": features.num_frames}
        _emit(_dump(summary) if args.json else f"{features.num_frames} frames -> {args.out}\n")
    else:
        _emit(_dump(doc))
    return 0


def cmd_enroll(args) -> int:
    cfg = mfcc_config(args)
    store = load_store(args.store) if args.store.exists() else TemplateStore(cfg.fingerprint())
    store = enroll(
        read_wav(args.wav), args.speaker, args.word, args.rep, cfg, store, trim_config(args)
    )
    nbytes = save_store(store, args.store)
    t = store.templates[-1]
    if args.json:
        _emit(
            _dump(
                {
                    "store": str(args.store),
                    "templates": len(store),
                    "bytes": nbytes,
                    "enrolled": {
                        "speaker_id": t.speaker_id,
                        "word_label": t.word_label,
                        "repetition_index": t.repetition_index,
                        "num_frames": t.features.num_frames,
                    },
                }
            )
        )
    else:
        _emit(
            f"enrolled {t.speaker_id}/{t.word_label}/{t.repetition_index} "
            f"({t.features.num_frames} frames); store has {len(store)} templates\n"
        )
    return 0


def cmd_recognize(args) -> int:
    cfg = mfcc_config(args)
    store = load_store(args.store)
    result = recognize(read_wav(args.wav), store, cfg, dtw_options(args), trim_config(args))
    top = result.ranking[: args.top_k]
    if args.json:
        doc = {
            "best": result.best.word_label,
            "distance": _finite(result.best.distance),
            "margin": _finite(result.margin),
            "ranking": [
                {
                    "word_label": m.word_label,
                    "speaker_id": m.speaker_id,
                    "repetition_index": m.repetition_index,
                    "distance": _finite(m.distance),
                }
                for m in top
            ],
        }
        _emit(_dump(doc))
    else:
        lines = [f"best: {result.best.word_label} distance={result.best.distance:.6f}"]
        for rank, m in enumerate(top, 1):
            lines.append(
                f"{rank:>3d}  {m.word_label:<16}{m.distance:>14.6f}  "
                f"({m.speaker_id} rep {m.repetition_index})"
            )
        _emit("\n".join(lines) + "\n")
    return 0


def _report(args, report) -> int:
    _emit(_dump(report.to_dict()) if args.json else report.to_text(), args.out)
    return 0


def cmd_eval_same(args) -> int:
    corpus = load_corpus(args.corpus)
    report = run_same_speaker(
        corpus, args.speaker, mfcc_config(args), dtw_options(args), trim_config(args)
    )
    return _report(args, report)


def cmd_eval_cross(args) -> int:
    corpus = load_corpus(args.corpus)
    report = run_cross_speaker(
        corpus, args.ref, args.test, mfcc_config(args), dtw_options(args), trim_config(args)
    )
    return _report(args, report)


def cmd_eval_all(args) -> int:
    corpus = load_corpus(args.corpus)
    report = run_all_pairs(corpus, mfcc_config(args), dtw_options(args), trim_config(args))
    return _report(args, report)


def cmd_synth(args) -> int:
    corpus = synthesize_corpus(
        seed=args.seed,
        num_speakers=args.speakers,
        num_words=args.words,
        num_reps=args.reps,
        noise_level=args.noise,
        speaker_spread=args.spread,
        max_stretch=args.stretch,
    )
    count = write_corpus(corpus, args.out)
    if args.json:
        _emit(
            _dump(
                {
                    "out": str(args.out),
                    "files": count,
                    "speakers": list(corpus.speakers),
                    "words": list(corpus.words),
                }
            )
        )
    else:
        _emit(f"wrote {count} utterances to {args.out}\n")
    return 0


def cmd_inspect(args) -> int:
    store = load_store(args.store)
    rows = [
        {
            "speaker_id": t.speaker_id,
            "word_label": t.word_label,
            "repetition_index": t.repetition_index,
            "num_frames": t.features.num_frames,
        }
        for t in store.templates
    ]
    if args.json:
        doc = {
            "version": 1,
            "fingerprint": _fp(store.config_fingerprint),
            "num_ceps": store.num_ceps,
            "template_count": len(store),
            "templates": rows,
        }
        _emit(_dump(doc))
        return 0
    lines = [
        "TMPL version 1",
        f"fingerprint  {_fp(store.config_fingerprint)}",
        f"num_ceps     {store.num_ceps}",
        f"templates    {len(store)}",
        "",
        f"{'SPEAKER':<14}{'WORD':<16}{'REP':>4}{'FRAMES':>8}",
    ]
    for r in rows:
        lines.append(
            f"{r['speaker_id']:<14}{r['word_label']:<16}"
            f"{r['repetition_index']:>4d}{r['num_frames']:>8d}"
        )
    _emit("\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="templar", description="Isolated-word recognition with MFCC templates and DTW."
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    mfcc, dtw = _mfcc_parent(), _dtw_parent()

    p = sub.add_parser("extract", parents=[mfcc], help="compute MFCCs for one WAV file")
    p.add_argument("wav", type=Path)
    p.add_argument("--out", type=Path, help="write the features JSON here")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("enroll", parents=[mfcc], help="add an utterance to a template store")
    p.add_argument("wav", type=Path)
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--speaker", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--rep", type=_non_negative_int, required=True)
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("recognize", parents=[mfcc, dtw], help="label an utterance")
    p.add_argument("wav", type=Path)
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--top-k", type=_non_negative_int, default=1)
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("eval-same", parents=[mfcc, dtw], help="same-speaker experiment")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--speaker", required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_eval_same)

    p = sub.add_parser("eval-cross", parents=[mfcc, dtw], help="cross-speaker experiment")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_eval_cross)

    p = sub.add_parser("eval-all", parents=[mfcc, dtw], help="both experiments, all speakers")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_eval_all)

    p = sub.add_parser("synth", help="write a synthetic corpus")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--speakers", type=int, default=4)
    p.add_argument("--words", type=int, default=10)
    p.add_argument("--reps", type=int, default=4)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--spread", type=float, default=0.15)
    p.add_argument("--stretch", type=float, default=0.1)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("inspect", help="show a template store")
    p.add_argument("--store", type=Path, required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (TemplarError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
