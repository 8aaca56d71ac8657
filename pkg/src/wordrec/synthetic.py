"""Synthetic pseudo-word corpus with known ground truth.

Stands in for a licensed handwriting database at desk scale.  Each class is a
fixed sequence of 3-6 glyph prototypes (distinct blob shapes); every sample
renders that sequence with seeded per-glyph jitter (translation within 2 px,
rotation within 10 degrees, scale 0.9-1.1) plus occasional small diacritic
dots above or below the body.  Glyphs sit in separate column slots, so the
generating glyph count is the segmentation ground truth.
"""

from pathlib import Path

import numpy as np

from .errors import IoFailure
from .harness import Dataset, FOLDS, Sample
from .imaging import write_pgm

GLYPH_COUNT = 10
_TILE = 44          # glyph box, includes jitter margin
_GAP = 12           # blank columns between glyph boxes
_BAND = 8           # rows reserved above/below for diacritic dots
_PROTO = 40         # prototype raster size


def glyph_prototype(index: int, size: int = _PROTO) -> np.ndarray:
    """One of the distinct blob shapes, as a bool (size, size) raster."""
    if not 0 <= index < GLYPH_COUNT:
        raise ValueError(f"glyph index {index} out of range")
    half = (size - 1) / 2.0
    v, u = np.mgrid[0:size, 0:size] - half
    r = np.hypot(u, v)
    if index == 0:      # solid disc
        return r <= 15.0
    if index == 1:      # ring
        return (r <= 15.0) & (r >= 9.0)
    if index == 2:      # solid square
        return (np.abs(u) <= 13) & (np.abs(v) <= 13)
    if index == 3:      # hollow square
        outer = (np.abs(u) <= 13) & (np.abs(v) <= 13)
        inner = (np.abs(u) <= 7) & (np.abs(v) <= 7)
        return outer & ~inner
    if index == 4:      # plus
        return ((np.abs(u) <= 5) & (np.abs(v) <= 15)) | ((np.abs(v) <= 5) & (np.abs(u) <= 15))
    if index == 5:      # horizontal bar
        return (np.abs(v) <= 6) & (np.abs(u) <= 15)
    if index == 6:      # vertical bar
        return (np.abs(u) <= 6) & (np.abs(v) <= 15)
    if index == 7:      # downward-widening wedge
        return (v >= -14) & (v <= 14) & (np.abs(u) <= (v + 14) * 0.55)
    if index == 8:      # X
        return (np.abs(np.abs(u) - np.abs(v)) <= 5) & (np.abs(u) <= 15) & (np.abs(v) <= 15)
    # L
    stroke_v = (u >= -15) & (u <= -5) & (np.abs(v) <= 15)
    stroke_h = (v >= 5) & (v <= 15) & (np.abs(u) <= 15)
    return stroke_v | stroke_h


def _warp(glyph: np.ndarray, angle_deg: float, scale: float) -> np.ndarray:
    """Rotate and scale about the raster center, nearest-neighbor."""
    h, w = glyph.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    rows, cols = np.mgrid[0:h, 0:w]
    a = np.deg2rad(angle_deg)
    cos_a, sin_a = np.cos(a), np.sin(a)
    u = cols - cx
    v = rows - cy
    src_c = np.rint((cos_a * u + sin_a * v) / scale + cx).astype(int)
    src_r = np.rint((-sin_a * u + cos_a * v) / scale + cy).astype(int)
    valid = (src_r >= 0) & (src_r < h) & (src_c >= 0) & (src_c < w)
    out = np.zeros_like(glyph)
    out[valid] = glyph[src_r[valid], src_c[valid]]
    return out


def render_word(glyph_ids, rng: np.random.Generator) -> np.ndarray:
    """Render a glyph sequence with per-glyph jitter and optional dots."""
    n = len(glyph_ids)
    height = _BAND + _TILE + _BAND
    width = n * _TILE + (n + 1) * _GAP
    canvas = np.zeros((height, width), dtype=bool)
    for k, gid in enumerate(glyph_ids):
        angle = rng.uniform(-10.0, 10.0)
        scale = rng.uniform(0.9, 1.1)
        dy, dx = rng.integers(-2, 3, size=2)
        glyph = _warp(glyph_prototype(int(gid)), angle, scale)
        r0 = _BAND + 2 + int(dy)
        c0 = _GAP + k * (_TILE + _GAP) + 2 + int(dx)
        canvas[r0 : r0 + _PROTO, c0 : c0 + _PROTO] |= glyph
        if rng.random() < 0.4:
            above = rng.random() < 0.5
            dot_r = 2 if above else height - 5
            dot_c = _GAP + k * (_TILE + _GAP) + _TILE // 2 + int(rng.integers(-4, 5))
            canvas[dot_r : dot_r + 3, dot_c - 1 : dot_c + 2] = True
    return canvas


def class_glyph_sequences(n_classes: int, seed: int) -> list[tuple[int, ...]]:
    """The deterministic glyph sequence of every class; segmentation ground
    truth is the sequence length."""
    rng = np.random.default_rng(seed)
    sequences: list[tuple[int, ...]] = []
    seen = set()
    while len(sequences) < n_classes:
        length = int(rng.integers(3, 7))
        seq = tuple(int(g) for g in rng.integers(0, GLYPH_COUNT, size=length))
        if seq in seen:
            continue
        seen.add(seq)
        sequences.append(seq)
    return sequences


def synthesize(n_classes: int, per_class: int, seed: int, out_dir) -> Dataset:
    """Write a PGM corpus plus manifest under out_dir and return its Dataset.

    Folds are assigned round-robin a, b, c, d per class.  The same seed always
    produces a byte-identical corpus.
    """
    if n_classes < 2:
        raise ValueError("n_classes must be >= 2")
    if per_class < 4:
        raise ValueError("per_class must be >= 4")
    out_dir = Path(out_dir)
    img_dir = out_dir / "images"
    try:
        img_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"{img_dir}: {exc}") from exc

    sequences = class_glyph_sequences(n_classes, seed)
    samples = []
    manifest_lines = []
    class_lines = []
    for ci, glyph_ids in enumerate(sequences):
        label = f"w{ci:02d}"
        class_lines.append(f"{label}\t{','.join(str(g) for g in glyph_ids)}")
        for si in range(per_class):
            rng = np.random.default_rng([seed, ci, si])
            word_id = f"{label}_{si:03d}"
            rel = f"images/{word_id}.pgm"
            write_pgm(out_dir / rel, render_word(glyph_ids, rng))
            fold = FOLDS[si % 4]
            manifest_lines.append(f"{word_id}\t{label}\t{rel}\t{fold}")
            samples.append(Sample(word_id=word_id, label=label,
                                  path=out_dir / rel, fold=fold))
    try:
        (out_dir / "manifest.tsv").write_text("\n".join(manifest_lines) + "\n")
        (out_dir / "classes.tsv").write_text("\n".join(class_lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"{out_dir}: {exc}") from exc
    return Dataset(samples=samples)
