"""Rotation/translation/scale-invariant moment descriptors per grid cell.

Each cell yields a fixed-length feature vector: the seven Hu invariants
followed by the Zernike moment magnitudes |Z_nm| for all orders n up to
``max_order`` (m >= 0, n - m even), in (n, m) lexicographic order.  With the
default max_order = 8 that is 7 + 25 = 32 components.
"""

from functools import lru_cache
from math import factorial, pi

import numpy as np

from .errors import InvalidOrder
from .imaging import CellGrid

HU_COUNT = 7
DEFAULT_ZERNIKE_ORDER = 8


def hu_moments(cell: np.ndarray) -> np.ndarray:
    """Seven Hu invariants of a binary cell.

    Raw moments m_pq are taken over foreground pixel coordinates (x = column,
    y = row), central moments mu_pq about the centroid, and normalized moments
    eta_pq = mu_pq / mu_00^(1 + (p+q)/2).  The central moments are evaluated
    from exact integer raw moments, so whole-pixel translation reproduces the
    Hu values bit for bit.  An empty cell returns all zeros by convention,
    since segmentation legitimately produces blank cells.
    """
    ys, xs = np.nonzero(np.asarray(cell, dtype=bool))
    if xs.size == 0:
        return np.zeros(HU_COUNT)
    x = xs.astype(np.int64)
    y = ys.astype(np.int64)

    # int64 holds every raw moment for word-image sizes (third moments of a
    # fully-inked 10^4 x 10^4 image stay below 2^63).
    def raw(p: int, q: int) -> int:
        return int((x**p * y**q).sum())

    m00 = raw(0, 0)
    m10, m01 = raw(1, 0), raw(0, 1)
    m20, m11, m02 = raw(2, 0), raw(1, 1), raw(0, 2)
    m30, m21, m12, m03 = raw(3, 0), raw(2, 1), raw(1, 2), raw(0, 3)

    # Central moments as exact integer numerators over powers of m00.
    mu20 = m20 * m00 - m10 * m10                        # / m00
    mu02 = m02 * m00 - m01 * m01                        # / m00
    mu11 = m11 * m00 - m10 * m01                        # / m00
    mu30 = m30 * m00**2 - 3 * m10 * m20 * m00 + 2 * m10**3           # / m00^2
    mu03 = m03 * m00**2 - 3 * m01 * m02 * m00 + 2 * m01**3           # / m00^2
    mu21 = m21 * m00**2 - 2 * m10 * m11 * m00 - m01 * m20 * m00 + 2 * m10**2 * m01
    mu12 = m12 * m00**2 - 2 * m01 * m11 * m00 - m10 * m02 * m00 + 2 * m01**2 * m10

    # eta_pq = mu_pq / m00^(1 + (p+q)/2), folding in the deferred denominators.
    second = float(m00) ** 3
    third = float(m00) ** 4.5
    n20, n02, n11 = mu20 / second, mu02 / second, mu11 / second
    n30, n03 = mu30 / third, mu03 / third
    n21, n12 = mu21 / third, mu12 / third

    a = n30 + n12
    b = n21 + n03
    c = n30 - 3.0 * n12
    d = 3.0 * n21 - n03

    phi1 = n20 + n02
    phi2 = (n20 - n02) ** 2 + 4.0 * n11**2
    phi3 = c**2 + d**2
    phi4 = a**2 + b**2
    phi5 = c * a * (a**2 - 3.0 * b**2) + d * b * (3.0 * a**2 - b**2)
    phi6 = (n20 - n02) * (a**2 - b**2) + 4.0 * n11 * a * b
    phi7 = d * a * (a**2 - 3.0 * b**2) - c * b * (3.0 * a**2 - b**2)
    return np.array([phi1, phi2, phi3, phi4, phi5, phi6, phi7])


def zernike_index_pairs(max_order: int) -> list[tuple[int, int]]:
    """All (n, m) with 0 <= n <= max_order, m >= 0, n - m even."""
    if max_order < 0:
        raise InvalidOrder(f"max_order {max_order} must be >= 0")
    return [(n, m) for n in range(max_order + 1) for m in range(n % 2, n + 1, 2)]


def _radial_poly(n: int, m: int, rho: np.ndarray) -> np.ndarray:
    out = np.zeros_like(rho)
    for s in range((n - m) // 2 + 1):
        coef = (
            (-1) ** s
            * factorial(n - s)
            / (factorial(s) * factorial((n + m) // 2 - s) * factorial((n - m) // 2 - s))
        )
        out += coef * rho ** (n - 2 * s)
    return out


@lru_cache(maxsize=256)
def _zernike_basis(height: int, width: int, max_order: int):
    """Conjugate Zernike basis sampled at the pixel centers inside the disc.

    The unit disc is inscribed in the cell rectangle: centered at the cell
    center, diameter equal to the shorter side.  Returns (inside mask,
    basis matrix of shape (n_inside, n_pairs), per-pair order array).
    Cached per (height, width, max_order); callers must not mutate.
    """
    pairs = zernike_index_pairs(max_order)
    ys, xs = np.mgrid[0:height, 0:width]
    radius = min(height, width) / 2.0
    x = (xs + 0.5 - width / 2.0) / radius
    y = (ys + 0.5 - height / 2.0) / radius
    rho = np.hypot(x, y)
    inside = rho <= 1.0
    rho_in = rho[inside]
    theta_in = np.arctan2(y[inside], x[inside])
    basis = np.empty((int(inside.sum()), len(pairs)), dtype=complex)
    for k, (n, m) in enumerate(pairs):
        basis[:, k] = _radial_poly(n, m, rho_in) * np.exp(-1j * m * theta_in)
    orders = np.array([n for n, _ in pairs], dtype=float)
    return inside, basis, orders


def zernike_moments(cell: np.ndarray, max_order: int = DEFAULT_ZERNIKE_ORDER) -> np.ndarray:
    """Zernike moment magnitudes |Z_nm| of a binary cell.

    Z_nm = ((n+1)/pi) * sum over in-disc foreground pixels of V*_nm(rho, theta),
    normalized by the number of pixel centers inside the disc.  Pixels outside
    the inscribed disc are ignored; an empty cell returns all zeros.
    """
    if max_order < 0:
        raise InvalidOrder(f"max_order {max_order} must be >= 0")
    cell = np.asarray(cell, dtype=bool)
    inside, basis, orders = _zernike_basis(cell.shape[0], cell.shape[1], max_order)
    fg = cell[inside]
    if not fg.any():
        return np.zeros(basis.shape[1])
    sums = basis[fg].sum(axis=0)
    z = (orders + 1.0) / pi * sums / basis.shape[0]
    return np.abs(z)


def feature_length(max_order: int = DEFAULT_ZERNIKE_ORDER) -> int:
    return HU_COUNT + len(zernike_index_pairs(max_order))


def extract_features(grid: CellGrid, max_order: int = DEFAULT_ZERNIKE_ORDER) -> np.ndarray:
    """One feature vector per cell of the grid.

    Returns an array of shape (blocks, frames, cells, d) with blocks in
    segmentation order, frames top to bottom, cells left to right, and
    d = 7 Hu components followed by the Zernike magnitudes.
    """
    d = feature_length(max_order)
    out = np.zeros((grid.n_blocks, grid.frames_per_block, grid.cells_per_frame, d))
    for b, f, c, cell in grid.iter_cells():
        out[b, f, c, :HU_COUNT] = hu_moments(cell)
        out[b, f, c, HU_COUNT:] = zernike_moments(cell, max_order)
    return out
