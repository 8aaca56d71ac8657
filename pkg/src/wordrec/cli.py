"""Command-line front end: synth, train, evaluate, crossval, sweep,
recognize, segment."""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import dhbn, harness, imaging, synthetic
from .config import Config, load_config
from .errors import WordRecError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wordrec",
        description="Cursive word-image recognition toolkit.",
    )
    parser.add_argument("--config", help="config file (key = value lines)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="output directory or file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic PGM corpus + manifest")
    p.add_argument("--classes", type=int, default=5)
    p.add_argument("--per-class", type=int, default=40)

    p = sub.add_parser("train", help="train lexicon + codebook on chosen folds")
    p.add_argument("--data", required=True, help="corpus root directory")
    p.add_argument("--manifest", help="manifest path (default: <data>/manifest.tsv)")
    p.add_argument("--folds", default="a,b", help="comma-separated training folds")
    p.add_argument("--dump-features", help="write per-cell feature CSV here")

    p = sub.add_parser("evaluate", help="classify the chosen folds and report")
    p.add_argument("--model", required=True, help="trained model directory")
    p.add_argument("--data", required=True)
    p.add_argument("--manifest")
    p.add_argument("--folds", default="d")

    p = sub.add_parser("crossval", help="four-fold cross-validation")
    p.add_argument("--data", required=True)
    p.add_argument("--manifest")

    p = sub.add_parser("sweep", help="sweep one hyper-parameter axis")
    p.add_argument("--data", required=True)
    p.add_argument("--manifest")
    p.add_argument("--axis", required=True, choices=harness.SWEEP_AXES)
    p.add_argument("--values", help="comma-separated values (default per axis)")
    p.add_argument("--train-folds", default="a,b")
    p.add_argument("--eval-folds", default="c")

    p = sub.add_parser("recognize", help="rank lexicon labels for one image")
    p.add_argument("image")
    p.add_argument("--model", required=True)
    p.add_argument("--top", type=int, default=0, help="print only the best N (0 = all)")

    p = sub.add_parser("segment", help="print character intervals for one image")
    p.add_argument("image")
    p.add_argument("--debug-pgm", help="write the canonical image with boundary columns marked")
    return parser


def _config_from(args, default: Config | None = None) -> Config:
    cfg = default or Config()
    if args.config:
        cfg = load_config(args.config, cfg)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _folds(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _dataset(args) -> harness.Dataset:
    manifest = args.manifest or str(Path(args.data) / "manifest.tsv")
    return harness.ingest(args.data, manifest)


def _print_report(report: harness.EvalReport) -> None:
    print(f"overall recognition rate: {report.overall_rate:.4f}")
    for label in report.labels:
        print(f"  {label}: {report.per_class_rate[label]:.4f}")


def _write_report_csvs(report: harness.EvalReport, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    harness.write_csv(out_dir / "rates.csv", ["class", "recognition_rate"],
                      [(label, f"{report.per_class_rate[label]:.6f}")
                       for label in report.labels]
                      + [("overall", f"{report.overall_rate:.6f}")])
    harness.write_csv(out_dir / "confusion.csv", ["true\\pred"] + report.labels,
                      [[label] + report.confusion[i].tolist()
                       for i, label in enumerate(report.labels)])
    harness.write_csv(out_dir / "pr_curve.csv", ["threshold", "precision", "recall"],
                      [(f"{t:.6f}", f"{p:.6f}", f"{r:.6f}") for t, p, r in report.curve])


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except WordRecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "synth":
        cfg = _config_from(args)
        if not args.out:
            print("error: synth requires --out", file=sys.stderr)
            return 2
        ds = synthetic.synthesize(args.classes, args.per_class, cfg.seed, args.out)
        print(f"wrote {len(ds.samples)} images for {args.classes} classes under {args.out}")
        return 0

    if args.command == "train":
        cfg = _config_from(args)
        if not args.out:
            print("error: train requires --out", file=sys.stderr)
            return 2
        ds = _dataset(args)
        folds = _folds(args.folds)
        lex, cb = harness.train_lexicon(ds, folds, cfg)
        harness.save_model(lex, cb, cfg, args.out)
        if args.dump_features:
            harness.dump_features_csv(ds, folds, cfg, args.dump_features)
        print(f"trained {len(lex.entries)} word models on folds {','.join(folds)} -> {args.out}")
        return 0

    if args.command == "evaluate":
        lex, cb, cfg = harness.load_model(args.model)
        cfg = _config_from(args, cfg)
        report = harness.evaluate(lex, cb, _dataset(args), _folds(args.folds), cfg)
        _print_report(report)
        if args.out:
            _write_report_csvs(report, Path(args.out))
        return 0

    if args.command == "crossval":
        cfg = _config_from(args)
        report = harness.cross_validate(_dataset(args), cfg)
        for fold in harness.FOLDS:
            print(f"test fold {fold}: {report.fold_rates[fold]:.4f}")
        print(f"mean recognition rate: {report.mean_rate:.4f}")
        if args.out:
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            harness.write_csv(out_dir / "crossval.csv", ["test_fold", "recognition_rate"],
                              [(fold, f"{report.fold_rates[fold]:.6f}")
                               for fold in harness.FOLDS]
                              + [("mean", f"{report.mean_rate:.4f}")])
        return 0

    if args.command == "sweep":
        cfg = _config_from(args)
        values = None
        if args.values:
            values = [int(v) for v in args.values.split(",")]
        out_csv = Path(args.out) if args.out else None
        rows, best = harness.sweep(_dataset(args), cfg, args.axis, values,
                                   _folds(args.train_folds), _folds(args.eval_folds),
                                   out_csv=out_csv)
        for value, rate in rows:
            print(f"{args.axis} = {value}: {rate:.4f}")
        print(f"best {args.axis}: {best}")
        return 0

    if args.command == "recognize":
        lex, cb, cfg = harness.load_model(args.model)
        seq = harness.image_symbols(imaging.load_image(args.image), cb, cfg)
        ranked = dhbn.classify(lex, seq)
        if args.top > 0:
            ranked = ranked[: args.top]
        for label, loglik in ranked:
            print(f"{label}\t{loglik:.6f}")
        return 0

    if args.command == "segment":
        cfg = _config_from(args)
        canon, bounds = harness.segment_image(imaging.load_image(args.image), cfg)
        for start, end in bounds:
            print(f"{start}\t{end}")
        if args.debug_pgm:
            gray = np.where(canon, 0, 255).astype(np.uint8)
            for start, end in bounds:
                for col in (start, end - 1):
                    column = gray[:, col]
                    column[column == 255] = 128
            imaging.write_pgm(args.debug_pgm, gray)
        return 0

    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
