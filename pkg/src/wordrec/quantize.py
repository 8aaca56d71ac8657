"""K-means codebook over cell feature vectors and symbol assignment.

Feature vectors are z-score standardized per component before clustering so
no single moment dominates the Euclidean metric; the codebook stores the
standardization parameters and its centroids live in standardized space.
"""

from dataclasses import dataclass

import numpy as np

from ._textio import format_floats, parse_floats, read_checked, write_checked
from .errors import DimensionMismatch, IoFailure, TooFewVectors, VersionMismatch

CODEBOOK_MAGIC = "DHBN-CB"
CODEBOOK_VERSION = "v1"


@dataclass
class Codebook:
    centroids: np.ndarray      # (K, d), standardized space
    feature_mean: np.ndarray   # (d,)
    feature_std: np.ndarray    # (d,), strictly positive

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def d(self) -> int:
        return self.centroids.shape[1]

    def standardize(self, vectors: np.ndarray) -> np.ndarray:
        return (np.asarray(vectors, dtype=float) - self.feature_mean) / self.feature_std


def _kmeans_pp_init(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded k-means++ seeding: D^2-weighted draws."""
    centroids = np.empty((k, points.shape[1]))
    idx = int(rng.integers(points.shape[0]))
    centroids[0] = points[idx]
    d2 = ((points - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        idx = int(rng.choice(points.shape[0], p=d2 / d2.sum()))
        centroids[j] = points[idx]
        d2 = np.minimum(d2, ((points - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans_fit(
    vectors: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-6,
    standardize: bool = True,
) -> Codebook:
    """Lloyd's algorithm with k-means++ seeding.

    Iterates until the largest centroid shift drops below `tol` or `max_iter`
    is reached.  A cluster that empties is reseeded with the point farthest
    from its assigned centroid.  Total distortion is checked to be
    non-increasing on every iteration.  Raises TooFewVectors when the input
    has fewer than k distinct rows.
    """
    points = np.asarray(vectors, dtype=float)
    if points.ndim != 2 or points.shape[0] == 0:
        raise TooFewVectors("need a non-empty 2-D array of vectors")
    if k < 1:
        raise ValueError("k must be >= 1")
    n_distinct = np.unique(points, axis=0).shape[0]
    if n_distinct < k:
        raise TooFewVectors(f"{n_distinct} distinct vectors < k = {k}")

    d = points.shape[1]
    if standardize:
        mean = points.mean(axis=0)
        std = points.std(axis=0)
        std[std == 0.0] = 1.0
    else:
        mean = np.zeros(d)
        std = np.ones(d)
    pts = (points - mean) / std

    rng = np.random.default_rng(seed)
    centroids = _kmeans_pp_init(pts, k, rng)
    prev_distortion = np.inf
    for _ in range(max_iter):
        d2 = ((pts[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        distortion = float(d2[np.arange(pts.shape[0]), assign].sum())
        assert distortion <= prev_distortion + 1e-9, "Lloyd distortion increased"
        prev_distortion = distortion

        new_centroids = centroids.copy()
        counts = np.bincount(assign, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                new_centroids[j] = pts[assign == j].mean(axis=0)
        # Reseed emptied clusters with the points farthest from their centroid.
        if (counts == 0).any():
            dist_to_own = d2[np.arange(pts.shape[0]), assign].copy()
            for j in np.flatnonzero(counts == 0):
                far = int(dist_to_own.argmax())
                new_centroids[j] = pts[far]
                dist_to_own[far] = -1.0
        shift = float(np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max())
        centroids = new_centroids
        if shift < tol:
            break
    return Codebook(centroids=centroids, feature_mean=mean, feature_std=std)


def assign_symbol(cb: Codebook, v: np.ndarray) -> int:
    """Index of the nearest centroid to the standardized v; ties go to the
    lowest index."""
    v = np.asarray(v, dtype=float)
    if v.shape != (cb.d,):
        raise DimensionMismatch(f"vector shape {v.shape} != ({cb.d},)")
    d2 = ((cb.centroids - cb.standardize(v)) ** 2).sum(axis=1)
    return int(d2.argmin())


def quantize_word(cb: Codebook, features: np.ndarray) -> np.ndarray:
    """Map a (blocks, frames, cells, d) feature array to symbol indices.

    Returns an int array of shape (blocks, frames, cells) preserving order.
    """
    feats = np.asarray(features, dtype=float)
    if feats.ndim != 4 or feats.shape[3] != cb.d:
        raise DimensionMismatch(f"feature array shape {feats.shape} incompatible with d = {cb.d}")
    flat = cb.standardize(feats.reshape(-1, cb.d))
    d2 = ((flat[:, None, :] - cb.centroids[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1).reshape(feats.shape[:3])


def write_codebook(cb: Codebook, path) -> None:
    """Versioned text format, lossless for float64 (17 significant digits)."""
    lines = [f"{CODEBOOK_MAGIC} {CODEBOOK_VERSION} {cb.k} {cb.d}"]
    lines.append(format_floats(cb.feature_mean))
    lines.append(format_floats(cb.feature_std))
    lines.extend(format_floats(row) for row in cb.centroids)
    write_checked(path, lines)


def read_codebook(path) -> Codebook:
    lines = read_checked(path)
    header = lines[0].split()
    if len(header) != 4 or header[0] != CODEBOOK_MAGIC or header[1] != CODEBOOK_VERSION:
        raise VersionMismatch(f"{path}: bad codebook header {lines[0]!r}")
    k, d = int(header[2]), int(header[3])
    if len(lines) != 3 + k:
        raise IoFailure(f"{path}: expected {3 + k} body lines, found {len(lines)}")
    mean = parse_floats(lines[1], d)
    std = parse_floats(lines[2], d)
    centroids = np.vstack([parse_floats(line, d) for line in lines[3 : 3 + k]])
    return Codebook(centroids=centroids, feature_mean=mean, feature_std=std)
