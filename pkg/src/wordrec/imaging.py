"""Binary word-image loading, preprocessing, and projection-profile segmentation.

A binary image is a 2-D numpy bool array of shape (height, width), row-major,
True = foreground ink.  Column indices grow left to right, row indices top to
bottom.  A projection histogram is a 1-D float array, one value per column.
Segment bounds are an ordered list of half-open (start_col, end_col) column
intervals.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import (
    DegenerateBlock,
    EmptyImage,
    InvalidWidth,
    IoFailure,
    MalformedHeader,
    MissingFile,
    NoForeground,
    UnsupportedFormat,
)

_WHITESPACE = b" \t\r\n\x0b\x0c"
_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)

# Grayscale binarization threshold: ink is darker than paper.
INK_THRESHOLD = 128


@dataclass
class CellGrid:
    """Per-word grid of cells: blocks[b][f][c] is one binary cell image.

    Each character block is cut into `frames_per_block` horizontal bands and
    each band into `cells_per_frame` vertical cells.
    """

    blocks: list
    frames_per_block: int
    cells_per_frame: int

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def iter_cells(self):
        """Yield (block, frame, cell, image) in reading order."""
        for b, block in enumerate(self.blocks):
            for f, band in enumerate(block):
                for c, cell in enumerate(band):
                    yield b, f, c, cell


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Return next whitespace-delimited token, skipping '#' comments."""
    n = len(data)
    while pos < n:
        b = data[pos]
        if b in _WHITESPACE:
            pos += 1
        elif b == 0x23:  # '#'
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos] not in _WHITESPACE and data[pos] != 0x23:
        pos += 1
    return data[start:pos], pos


def load_image(path) -> np.ndarray:
    """Read a PBM/PGM file (magic P1, P2, P4, or P5) as a binary image.

    Grayscale pixels below 128 are foreground (ink on white paper); PBM bits
    are foreground where 1 (black).  Returns a bool array (height, width).
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError as exc:
        raise MissingFile(str(path)) from exc
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc

    magic, pos = _next_token(data, 0)
    if magic not in (b"P1", b"P2", b"P4", b"P5"):
        raise UnsupportedFormat(f"{path}: magic {magic!r} is not P1/P2/P4/P5")

    def read_int() -> int:
        nonlocal pos
        tok, pos = _next_token(data, pos)
        try:
            return int(tok)
        except ValueError as exc:
            raise MalformedHeader(f"{path}: bad header token {tok!r}") from exc

    width = read_int()
    height = read_int()
    if width <= 0 or height <= 0:
        raise MalformedHeader(f"{path}: non-positive dimensions {width}x{height}")
    if magic in (b"P2", b"P5"):
        maxval = read_int()
        if maxval <= 0:
            raise MalformedHeader(f"{path}: non-positive maxval {maxval}")
    else:
        maxval = 1

    npix = width * height
    if magic == b"P1":
        bits = []
        p = pos
        n = len(data)
        while p < n and len(bits) < npix:
            b = data[p]
            if b in _WHITESPACE:
                p += 1
            elif b == 0x23:
                while p < n and data[p] not in b"\r\n":
                    p += 1
            elif b in b"01":
                bits.append(b - 0x30)
                p += 1
            else:
                raise MalformedHeader(f"{path}: bad P1 pixel byte {bytes([b])!r}")
        if len(bits) < npix:
            raise MalformedHeader(f"{path}: truncated pixel data")
        img = np.array(bits, dtype=bool).reshape(height, width)
    elif magic == b"P2":
        values = []
        p = pos
        while len(values) < npix:
            tok, p = _next_token(data, p)
            if not tok:
                raise MalformedHeader(f"{path}: truncated pixel data")
            try:
                values.append(int(tok))
            except ValueError as exc:
                raise MalformedHeader(f"{path}: bad P2 pixel {tok!r}") from exc
        img = np.array(values).reshape(height, width) < INK_THRESHOLD
    elif magic == b"P4":
        # Raw data starts one whitespace byte after the header.
        row_bytes = (width + 7) // 8
        raw = data[pos + 1 : pos + 1 + height * row_bytes]
        if len(raw) < height * row_bytes:
            raise MalformedHeader(f"{path}: truncated pixel data")
        rows = np.frombuffer(raw, dtype=np.uint8).reshape(height, row_bytes)
        img = np.unpackbits(rows, axis=1)[:, :width].astype(bool)
    else:  # P5
        sample_bytes = 1 if maxval < 256 else 2
        need = npix * sample_bytes
        raw = data[pos + 1 : pos + 1 + need]
        if len(raw) < need:
            raise MalformedHeader(f"{path}: truncated pixel data")
        dtype = np.uint8 if sample_bytes == 1 else np.dtype(">u2")
        img = np.frombuffer(raw, dtype=dtype).reshape(height, width) < INK_THRESHOLD
    return img


def write_pgm(path, img: np.ndarray) -> None:
    """Write a binary image as raw 8-bit PGM: ink black (0) on white (255)."""
    img = np.asarray(img)
    if img.dtype == bool:
        gray = np.where(img, 0, 255).astype(np.uint8)
    else:
        gray = img.astype(np.uint8)
    h, w = gray.shape
    header = f"P5\n{w} {h}\n255\n".encode()
    try:
        Path(path).write_bytes(header + gray.tobytes())
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc


def preprocess(img: np.ndarray, target_h: int = 100, target_w: int = 200) -> np.ndarray:
    """Crop to the foreground bounding box, then rescale to target_h x target_w.

    Rescaling is nearest-neighbor, so the result stays strictly binary.
    Raises EmptyImage when there is no foreground pixel.
    """
    img = np.asarray(img, dtype=bool)
    if target_h < 1 or target_w < 1:
        raise ValueError("target size must be positive")
    rows = np.flatnonzero(img.any(axis=1))
    if rows.size == 0:
        raise EmptyImage("no foreground pixels")
    cols = np.flatnonzero(img.any(axis=0))
    crop = img[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    ch, cw = crop.shape
    ri = (np.arange(target_h) * ch) // target_h
    ci = (np.arange(target_w) * cw) // target_w
    return crop[np.ix_(ri, ci)]


def remove_diacritics(img: np.ndarray, area_ratio: float = 0.08) -> np.ndarray:
    """Drop small satellite marks: 8-connected components whose area is below
    area_ratio times the largest component's area.

    The caller keeps the original image for cell extraction; this stripped
    copy is only used to build the projection histogram.
    """
    img = np.asarray(img, dtype=bool)
    if not img.any():
        raise EmptyImage("no foreground pixels")
    labels, n = ndimage.label(img, structure=_EIGHT_CONNECTED)
    areas = np.bincount(labels.ravel())
    areas[0] = 0  # background
    keep = areas >= area_ratio * areas.max()
    keep[0] = False
    return keep[labels]


def vertical_projection(img: np.ndarray) -> np.ndarray:
    """Per-column foreground pixel counts, as a float array of length width."""
    return np.asarray(img, dtype=bool).sum(axis=0).astype(float)


def smooth_histogram(hist: np.ndarray, width: int) -> np.ndarray:
    """Centered moving average of odd window `width`.

    At the boundaries the window is truncated to valid indices and the mean is
    taken over the truncated window, so width 1 is the identity and constant
    histograms are fixed points.
    """
    hist = np.asarray(hist, dtype=float)
    n = hist.size
    if width % 2 == 0 or width < 1 or width > n:
        raise InvalidWidth(f"width {width} must be odd and within [1, {n}]")
    if width == 1:
        return hist.copy()
    kernel = np.ones(width)
    sums = np.convolve(hist, kernel, mode="same")
    counts = np.convolve(np.ones(n), kernel, mode="same")
    return sums / counts


def segment_characters(hist: np.ndarray, valley_frac: float = 0.05) -> list[tuple[int, int]]:
    """Cut a (smoothed) projection histogram at its valleys.

    A column is a valley when its value is <= valley_frac * max(hist); maximal
    runs of non-valley columns become half-open (start, end) intervals.
    Intervals narrower than 2 columns are merged into the nearest neighboring
    interval (by gap; ties go left).  Raises NoForeground when the histogram
    is all zero.
    """
    hist = np.asarray(hist, dtype=float)
    peak = hist.max() if hist.size else 0.0
    if peak <= 0.0:
        raise NoForeground("histogram carries no ink")
    ink = hist > valley_frac * peak
    edges = np.flatnonzero(np.diff(np.concatenate(([False], ink, [False])).astype(np.int8)))
    intervals = [(int(edges[i]), int(edges[i + 1])) for i in range(0, edges.size, 2)]

    while len(intervals) > 1:
        narrow = next((i for i, (s, e) in enumerate(intervals) if e - s < 2), None)
        if narrow is None:
            break
        s, e = intervals[narrow]
        if narrow == 0:
            partner = 1
        elif narrow == len(intervals) - 1:
            partner = narrow - 1
        else:
            gap_left = s - intervals[narrow - 1][1]
            gap_right = intervals[narrow + 1][0] - e
            partner = narrow - 1 if gap_left <= gap_right else narrow + 1
        lo, hi = sorted((narrow, partner))
        merged = (intervals[lo][0], intervals[hi][1])
        intervals[lo : hi + 1] = [merged]
    return intervals


def _band_edges(total: int, parts: int) -> np.ndarray:
    """Split `total` into `parts` pieces; the first total % parts get one extra."""
    base, extra = divmod(total, parts)
    sizes = np.full(parts, base)
    sizes[:extra] += 1
    return np.concatenate(([0], np.cumsum(sizes)))


def split_grid(img: np.ndarray, bounds: list[tuple[int, int]], frames: int = 3, cells: int = 2) -> CellGrid:
    """Cut each segmented interval of `img` into frames x cells binary cells.

    Applied to the un-stripped image, so diacritics contribute to the cells
    even though segmentation ignored them.
    """
    img = np.asarray(img, dtype=bool)
    if not bounds:
        raise ValueError("bounds must contain at least one interval")
    if frames < 1 or cells < 1:
        raise ValueError("frames and cells must be >= 1")
    h = img.shape[0]
    if h < frames:
        raise DegenerateBlock(f"image height {h} < {frames} frames")
    row_edges = _band_edges(h, frames)
    blocks = []
    for start, end in bounds:
        if end - start < cells:
            raise DegenerateBlock(f"interval ({start},{end}) narrower than {cells} cells")
        col_edges = start + _band_edges(end - start, cells)
        block = [
            [
                img[row_edges[f] : row_edges[f + 1], col_edges[c] : col_edges[c + 1]].copy()
                for c in range(cells)
            ]
            for f in range(frames)
        ]
        blocks.append(block)
    return CellGrid(blocks=blocks, frames_per_block=frames, cells_per_frame=cells)
