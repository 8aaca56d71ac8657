"""Dataset ingestion, training/evaluation orchestration, sweeps, persistence.

The full pipeline per word image: preprocess -> strip diacritics -> smoothed
vertical projection -> valley segmentation -> frame/cell grid on the
un-stripped image -> moment features -> codebook symbols -> per-class model
likelihoods.  All tabular output is CSV; see the README for the schemas.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dhbn, features, imaging, quantize
from .config import Config, load_config, save_config
from ._textio import read_checked, write_checked
from .errors import (
    ClassTooSmall,
    EmptyEvalSet,
    IoFailure,
    MalformedManifest,
    MissingImage,
    TooFewVectors,
)

FOLDS = ("a", "b", "c", "d")

# Cross-validation: (training folds, test fold) per run.
CROSSVAL_SCHEME = (
    (("b", "c", "d"), "a"),
    (("a", "c", "d"), "b"),
    (("a", "b", "d"), "c"),
    (("a", "b", "c"), "d"),
)

SWEEP_AXES = ("cells", "states", "codebook", "smooth_width")
DEFAULT_SWEEP_VALUES = {
    "cells": tuple(range(2, 9)),
    "states": tuple(range(9, 26)),
    "codebook": (6, 18, 24, 36, 48, 58, 68, 100),
    "smooth_width": (3, 5, 7, 9, 11, 13, 15, 21),
}

PR_CURVE_POINTS = 51


@dataclass
class Sample:
    word_id: str
    label: str
    path: Path
    fold: str


@dataclass
class Dataset:
    samples: list[Sample] = field(default_factory=list)

    def labels(self) -> list[str]:
        return sorted({s.label for s in self.samples})

    def subset(self, folds) -> list[Sample]:
        folds = set(folds)
        return [s for s in self.samples if s.fold in folds]


@dataclass
class EvalReport:
    labels: list[str]
    confusion: np.ndarray                  # (L, L) counts, rows = true class
    overall_rate: float
    per_class_rate: dict[str, float]
    curve: np.ndarray                      # (P, 3): threshold, precision, recall
    margins: np.ndarray                    # per-sample top1 - top2 log-likelihood
    correct: np.ndarray                    # per-sample top-1 correctness
    fold_rates: dict[str, float] | None = None
    mean_rate: float | None = None


def ingest(root_dir, manifest) -> Dataset:
    """Read a `word_id<TAB>label<TAB>relative-path<TAB>fold` manifest and
    validate that every image exists and parses."""
    root = Path(root_dir)
    try:
        text = Path(manifest).read_text()
    except OSError as exc:
        raise MalformedManifest(f"{manifest}: {exc}") from exc
    samples = []
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) != 4:
            raise MalformedManifest(f"line {lineno}: expected 4 tab-separated fields")
        word_id, label, rel, fold = (p.strip() for p in parts)
        if not word_id or not label or not rel:
            raise MalformedManifest(f"line {lineno}: empty field")
        if word_id in seen:
            raise MalformedManifest(f"line {lineno}: duplicate word_id {word_id!r}")
        if fold not in FOLDS:
            raise MalformedManifest(f"line {lineno}: unknown fold {fold!r}")
        seen.add(word_id)
        path = root / rel
        if not path.is_file():
            raise MissingImage(str(path))
        imaging.load_image(path)  # parse errors propagate
        samples.append(Sample(word_id=word_id, label=label, path=path, fold=fold))
    return Dataset(samples=samples)


def segment_image(img: np.ndarray, cfg: Config):
    """Canonical image plus its character intervals."""
    canon = imaging.preprocess(img, cfg.canvas_height, cfg.canvas_width)
    stripped = imaging.remove_diacritics(canon, cfg.diacritic_area_ratio)
    hist = imaging.vertical_projection(stripped)
    smoothed = imaging.smooth_histogram(hist, cfg.smooth_width)
    bounds = imaging.segment_characters(smoothed, cfg.valley_frac)
    return canon, bounds


def image_features(img: np.ndarray, cfg: Config) -> np.ndarray:
    """(blocks, frames, cells, d) feature array for one word image."""
    canon, bounds = segment_image(img, cfg)
    grid = imaging.split_grid(canon, bounds, cfg.grid_frames, cfg.grid_cells)
    return features.extract_features(grid, cfg.zernike_order)


def image_symbols(img: np.ndarray, cb: quantize.Codebook, cfg: Config) -> np.ndarray:
    return quantize.quantize_word(cb, image_features(img, cfg))


def train_lexicon(ds: Dataset, folds, cfg: Config) -> tuple[dhbn.Lexicon, quantize.Codebook]:
    """Full training pass over the selected folds.

    Fits one global codebook on every training cell, then EM-trains one word
    model per class on that class's symbol sequences.  Lexicon entries are in
    sorted label order; all randomness is seeded from cfg.seed.
    """
    labels = ds.labels()
    train = ds.subset(folds)
    by_label: dict[str, list[np.ndarray]] = {label: [] for label in labels}
    for sample in train:
        feats = image_features(imaging.load_image(sample.path), cfg)
        by_label[sample.label].append(feats)
    for label in labels:
        if not by_label[label]:
            raise ClassTooSmall(f"class {label!r} has no sample in folds {sorted(set(folds))}")

    d = features.feature_length(cfg.zernike_order)
    all_cells = np.vstack([f.reshape(-1, d) for label in labels for f in by_label[label]])
    try:
        cb = quantize.kmeans_fit(
            all_cells,
            cfg.codebook_size,
            seed=cfg.seed,
            max_iter=cfg.kmeans_max_iter,
            tol=cfg.kmeans_tol,
            standardize=cfg.standardize,
        )
    except TooFewVectors as exc:
        raise TooFewVectors(
            f"codebook.size = {cfg.codebook_size} over {all_cells.shape[0]} training cells: {exc}"
        ) from exc

    entries = []
    for ci, label in enumerate(labels):
        seqs = [quantize.quantize_word(cb, f) for f in by_label[label]]
        model = dhbn.init_model(
            cfg.n_states,
            cfg.n_substates,
            cfg.grid_frames,
            cfg.grid_cells,
            cfg.codebook_size,
            topology=cfg.topology,
            seed=cfg.seed + ci,
        )
        model, _ = dhbn.em_train(model, seqs, max_iter=cfg.em_max_iter, tol=cfg.em_tol)
        entries.append((label, model))
    return dhbn.Lexicon(entries=entries), cb


def precision_recall_curve(margins: np.ndarray, correct: np.ndarray,
                           n_points: int = PR_CURVE_POINTS) -> np.ndarray:
    """Acceptance-threshold sweep over top-1/top-2 log-likelihood margins.

    A sample is accepted when its margin >= threshold; precision is the
    correct fraction of accepted samples, recall the accepted fraction of all
    correctly classified samples.  Thresholds span the observed margins,
    descending, so recall grows along the curve.
    """
    margins = np.asarray(margins, dtype=float)
    correct = np.asarray(correct, dtype=bool)
    total_correct = int(correct.sum())
    thresholds = np.linspace(margins.max(), margins.min(), n_points)
    rows = []
    for thr in thresholds:
        accepted = margins >= thr
        n_acc = int(accepted.sum())
        n_ok = int((accepted & correct).sum())
        precision = n_ok / n_acc if n_acc else 1.0
        recall = n_ok / total_correct if total_correct else 0.0
        rows.append((float(thr), precision, recall))
    return np.array(rows)


def evaluate(lex: dhbn.Lexicon, cb: quantize.Codebook, ds: Dataset, folds,
             cfg: Config) -> EvalReport:
    """Classify every sample of the chosen folds and assemble the report."""
    samples = ds.subset(folds)
    if not samples:
        raise EmptyEvalSet(f"no samples in folds {sorted(set(folds))}")
    labels = lex.labels()
    index = {label: i for i, label in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=int)
    margins = np.empty(len(samples))
    correct = np.zeros(len(samples), dtype=bool)
    for i, sample in enumerate(samples):
        if sample.label not in index:
            raise ValueError(f"sample {sample.word_id}: label {sample.label!r} not in lexicon")
        seq = image_symbols(imaging.load_image(sample.path), cb, cfg)
        ranked = dhbn.classify(lex, seq)
        top_label, top_ll = ranked[0]
        margins[i] = top_ll - ranked[1][1] if len(ranked) > 1 else 0.0
        correct[i] = top_label == sample.label
        confusion[index[sample.label], index[top_label]] += 1

    overall = float(np.trace(confusion)) / confusion.sum()
    per_class = {}
    for label, row in zip(labels, confusion):
        per_class[label] = float(row[index[label]]) / row.sum() if row.sum() else 0.0
    curve = precision_recall_curve(margins, correct)
    return EvalReport(labels=labels, confusion=confusion, overall_rate=overall,
                      per_class_rate=per_class, curve=curve,
                      margins=margins, correct=correct)


def mean_fold_rate(fold_rates: dict[str, float]) -> float:
    """Arithmetic mean of the per-fold recognition rates."""
    return float(np.mean(list(fold_rates.values())))


def cross_validate(ds: Dataset, cfg: Config) -> EvalReport:
    """Four train/test runs with rotating test fold; reports per-fold rates,
    their arithmetic mean, the pooled confusion matrix, and a pooled
    precision/recall curve."""
    labels = ds.labels()
    index = {label: i for i, label in enumerate(labels)}
    confusion = np.zeros((len(labels), len(labels)), dtype=int)
    fold_rates: dict[str, float] = {}
    all_margins = []
    all_correct = []
    for train_folds, test_fold in CROSSVAL_SCHEME:
        lex, cb = train_lexicon(ds, train_folds, cfg)
        report = evaluate(lex, cb, ds, (test_fold,), cfg)
        fold_rates[test_fold] = report.overall_rate
        confusion += report.confusion  # same sorted label order by construction
        all_margins.append(report.margins)
        all_correct.append(report.correct)
    margins = np.concatenate(all_margins)
    correct = np.concatenate(all_correct)
    per_class = {}
    for label, row in zip(labels, confusion):
        per_class[label] = float(row[index[label]]) / row.sum() if row.sum() else 0.0
    return EvalReport(labels=labels, confusion=confusion,
                      overall_rate=float(np.trace(confusion)) / confusion.sum(),
                      per_class_rate=per_class,
                      curve=precision_recall_curve(margins, correct),
                      margins=margins, correct=correct,
                      fold_rates=fold_rates, mean_rate=mean_fold_rate(fold_rates))


def sweep(ds: Dataset, cfg: Config, axis: str, values=None,
          train_folds=("a", "b"), eval_folds=("c",),
          out_csv=None) -> tuple[list[tuple[float, float]], float]:
    """Re-run train + evaluate for each value of one hyper-parameter axis.

    Returns the (value, recognition rate) rows and the argmax value (first on
    ties).  Optionally writes the rows as CSV.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}")
    if values is None:
        values = DEFAULT_SWEEP_VALUES[axis]
    values = list(values)
    if not values:
        raise ValueError("sweep needs at least one value")
    if axis == "cells" and any(v < 2 or v > 8 for v in values):
        raise ValueError("cells values must lie in [2, 8]")
    if axis == "states" and any(v < 9 or v > 25 for v in values):
        raise ValueError("states values must lie in [9, 25]")
    if axis == "codebook" and any(v < 1 for v in values):
        raise ValueError("codebook sizes must be >= 1")
    if axis == "smooth_width" and any(v < 1 or v % 2 == 0 for v in values):
        raise ValueError("smoothing widths must be odd and >= 1")

    attr = {"cells": "grid_cells", "states": "n_states",
            "codebook": "codebook_size", "smooth_width": "smooth_width"}[axis]
    rows = []
    for value in values:
        run_cfg = cfg.replace(**{attr: int(value)})
        lex, cb = train_lexicon(ds, train_folds, run_cfg)
        report = evaluate(lex, cb, ds, eval_folds, run_cfg)
        rows.append((value, report.overall_rate))
    best = max(rows, key=lambda vr: vr[1])[0]
    if out_csv is not None:
        write_csv(out_csv, [axis, "recognition_rate"],
                  [(v, f"{r:.6f}") for v, r in rows])
    return rows, best


def write_csv(path, header, rows) -> None:
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def dump_features_csv(ds: Dataset, folds, cfg: Config, path) -> None:
    """One row per cell: word_id, block, frame, cell, v0..v{d-1}."""
    d = features.feature_length(cfg.zernike_order)
    header = ["word_id", "block", "frame", "cell"] + [f"v{i}" for i in range(d)]
    rows = []
    for sample in ds.subset(folds):
        feats = image_features(imaging.load_image(sample.path), cfg)
        for b in range(feats.shape[0]):
            for f in range(feats.shape[1]):
                for c in range(feats.shape[2]):
                    rows.append([sample.word_id, b, f, c]
                                + [format(x, ".17g") for x in feats[b, f, c]])
    write_csv(path, header, rows)


def save_model(lex: dhbn.Lexicon, cb: quantize.Codebook, cfg: Config, out_dir) -> None:
    """Persist lexicon + codebook + config into a directory.

    Every persisted artifact carries a trailing content-hash line except
    config.txt, which stays directly parseable by the config reader.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"{out}: {exc}") from exc
    quantize.write_codebook(cb, out / "codebook.txt")
    lines = []
    for i, (label, model) in enumerate(lex.entries):
        name = f"model_{i:03d}.txt"
        dhbn.write_model(model, out / name)
        lines.append(f"{label}\t{name}")
    write_checked(out / "lexicon.tsv", lines)
    save_config(cfg, out / "config.txt")


def load_model(model_dir) -> tuple[dhbn.Lexicon, quantize.Codebook, Config]:
    out = Path(model_dir)
    cb = quantize.read_codebook(out / "codebook.txt")
    entries = []
    for line in read_checked(out / "lexicon.tsv"):
        parts = line.split("\t")
        if len(parts) != 2:
            raise IoFailure(f"{out / 'lexicon.tsv'}: bad line {line!r}")
        label, name = parts
        entries.append((label, dhbn.read_model(out / name)))
    cfg = load_config(out / "config.txt")
    return dhbn.Lexicon(entries=entries), cb, cfg
