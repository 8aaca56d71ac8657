"""Cursive word-image recognition.

Pipeline: binary word image -> crop/rescale -> diacritic stripping ->
smoothed vertical projection -> valley segmentation into character blocks ->
frame/cell grid -> Hu + Zernike moment features -> k-means codebook symbols
-> per-class hierarchical dynamic Bayesian word models scored by the forward
algorithm (Viterbi for state paths, EM for training).
"""

from . import errors
from .config import Config, load_config, parse_config_text
from .dhbn import (
    Lexicon,
    WordModel,
    classify,
    em_train,
    forward_loglik,
    init_model,
    read_model,
    slice_emission_loglik,
    viterbi_decode,
    write_model,
)
from .features import extract_features, feature_length, hu_moments, zernike_moments
from .harness import (
    Dataset,
    EvalReport,
    Sample,
    cross_validate,
    evaluate,
    image_features,
    image_symbols,
    ingest,
    load_model,
    mean_fold_rate,
    save_model,
    segment_image,
    sweep,
    train_lexicon,
)
from .imaging import (
    CellGrid,
    load_image,
    preprocess,
    remove_diacritics,
    segment_characters,
    smooth_histogram,
    split_grid,
    vertical_projection,
    write_pgm,
)
from .quantize import (
    Codebook,
    assign_symbol,
    kmeans_fit,
    quantize_word,
    read_codebook,
    write_codebook,
)
from .synthetic import class_glyph_sequences, glyph_prototype, render_word, synthesize

__version__ = "0.1.0"

__all__ = [
    "Codebook",
    "CellGrid",
    "Config",
    "Dataset",
    "EvalReport",
    "Lexicon",
    "Sample",
    "WordModel",
    "assign_symbol",
    "class_glyph_sequences",
    "classify",
    "cross_validate",
    "em_train",
    "errors",
    "evaluate",
    "extract_features",
    "feature_length",
    "forward_loglik",
    "glyph_prototype",
    "hu_moments",
    "image_features",
    "image_symbols",
    "ingest",
    "init_model",
    "kmeans_fit",
    "load_config",
    "load_image",
    "load_model",
    "mean_fold_rate",
    "parse_config_text",
    "preprocess",
    "quantize_word",
    "read_codebook",
    "read_model",
    "remove_diacritics",
    "render_word",
    "save_model",
    "segment_characters",
    "segment_image",
    "slice_emission_loglik",
    "smooth_histogram",
    "split_grid",
    "sweep",
    "synthesize",
    "train_lexicon",
    "vertical_projection",
    "viterbi_decode",
    "write_codebook",
    "write_model",
    "write_pgm",
    "zernike_moments",
]
