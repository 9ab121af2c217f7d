"""Texture descriptors over enhanced nodule patches.

Four feature families share this module:

* ``dct``       global 2-D orthonormal DCT, zigzag-truncated
* ``ldct``      per-cell DCT coefficients, zigzag-truncated, concatenated
* ``ilbp``      improved local binary pattern histogram (256 bins)
* ``bpd-ldct``  per-cell binary pattern over the selected DCT coefficients,
                packed into one scalar code per cell
"""

from functools import lru_cache

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

__all__ = [
    "dct2",
    "idct2",
    "zigzag_order",
    "zigzag_select",
    "partition_cells",
    "ldct",
    "dct_global",
    "ilbp_code",
    "ilbp_codes",
    "ilbp_histogram",
    "bpd_ldct_codes",
    "bpd_ldct",
    "DctDescriptor",
    "LdctDescriptor",
    "IlbpDescriptor",
    "BpdLdctDescriptor",
    "make_descriptor",
    "DESCRIPTOR_NAMES",
]

DESCRIPTOR_NAMES = ("dct", "ldct", "ilbp", "bpd-ldct")


@lru_cache(maxsize=None)
def _dct_matrix(n: int) -> np.ndarray:
    # Orthonormal type-II DCT basis: row u holds alpha(u) * cos((2x+1) u pi / 2n).
    k = np.arange(n, dtype=np.float64)
    basis = np.cos(np.pi * (2.0 * k[None, :] + 1.0) * k[:, None] / (2.0 * n))
    basis *= np.sqrt(2.0 / n)
    basis[0] /= np.sqrt(2.0)
    basis.setflags(write=False)
    return basis


def _square_float(a, name="patch") -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.size == 0:
        raise ValueError("%s must be a non-empty square 2-D array, got shape %s" % (name, arr.shape))
    return arr


def dct2(block) -> np.ndarray:
    """2-D orthonormal (type II) DCT of a square block, computed separably."""
    a = _square_float(block, "block")
    m = _dct_matrix(a.shape[0])
    return m @ a @ m.T


def idct2(coeffs) -> np.ndarray:
    """Inverse of :func:`dct2` (orthonormal type III)."""
    c = _square_float(coeffs, "coeffs")
    m = _dct_matrix(c.shape[0])
    return m.T @ c @ m


@lru_cache(maxsize=None)
def zigzag_order(n: int) -> tuple:
    """(row, col) visit order over an n x n grid: anti-diagonals from (0, 0),
    first step to (0, 1), direction alternating per diagonal."""
    if n < 1:
        raise ValueError("grid side must be >= 1")
    order = []
    for s in range(2 * n - 1):
        rows = range(max(0, s - n + 1), min(s, n - 1) + 1)
        diag = [(r, s - r) for r in rows]
        if s % 2 == 0:
            diag.reverse()
        order.extend(diag)
    return tuple(order)


@lru_cache(maxsize=None)
def _zigzag_indices(n: int):
    order = np.array(zigzag_order(n), dtype=np.intp)
    rows = order[:, 0].copy()
    cols = order[:, 1].copy()
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


def zigzag_select(coeffs, n_coeffs: int) -> np.ndarray:
    """First *n_coeffs* entries of a square coefficient grid in zigzag order."""
    c = _square_float(coeffs, "coeffs")
    n = c.shape[0]
    if not 1 <= n_coeffs <= n * n:
        raise ValueError("n_coeffs must be in [1, %d], got %d" % (n * n, n_coeffs))
    rows, cols = _zigzag_indices(n)
    return c[rows[:n_coeffs], cols[:n_coeffs]]


def partition_cells(patch, cell_size: int) -> np.ndarray:
    """Split a square patch into a (side, side, cell, cell) grid of cells in
    row-major order. The cell size must divide the patch side."""
    p = _square_float(patch)
    n = p.shape[0]
    if cell_size < 1 or n % cell_size != 0:
        raise ValueError("cell size %d must divide patch side %d" % (cell_size, n))
    t = n // cell_size
    return p.reshape(t, cell_size, t, cell_size).swapaxes(1, 2)


def _cell_zigzag_coeffs(patch, cell_size: int, n_coeffs: int) -> np.ndarray:
    # (n_cells, n_coeffs) zigzag-selected DCT coefficients, cells in row-major order.
    if not 1 <= n_coeffs <= cell_size * cell_size:
        raise ValueError(
            "n_coeffs must be in [1, %d] for cell size %d, got %d"
            % (cell_size * cell_size, cell_size, n_coeffs)
        )
    cells = partition_cells(patch, cell_size)
    t = cells.shape[0]
    flat = cells.reshape(t * t, cell_size, cell_size)
    m = _dct_matrix(cell_size)
    coeffs = m @ flat @ m.T
    rows, cols = _zigzag_indices(cell_size)
    return coeffs[:, rows[:n_coeffs], cols[:n_coeffs]]


def ldct(patch, cell_size: int = 8, n_coeffs: int = 36) -> np.ndarray:
    """Local DCT feature vector: per-cell zigzag coefficients, concatenated.

    Length is (side / cell_size)**2 * n_coeffs.
    """
    return _cell_zigzag_coeffs(patch, cell_size, n_coeffs).ravel()


def dct_global(patch, n_coeffs: int = 1024) -> np.ndarray:
    """Whole-patch DCT feature vector: zigzag-truncated coefficients."""
    return zigzag_select(dct2(patch), n_coeffs)


# Neighbor offsets clockwise from the top-left corner; bit p has weight 2**p.
_ILBP_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))


def ilbp_code(block) -> int:
    """Code of a single 3x3 block: bit p set when the p-th neighbor (clockwise
    from top-left) is >= the mean of all nine block pixels."""
    b = np.asarray(block, dtype=np.float64)
    if b.shape != (3, 3):
        raise ValueError("expected a 3x3 block, got shape %s" % (b.shape,))
    mean = b.sum() / 9.0
    code = 0
    for p, (dy, dx) in enumerate(_ILBP_OFFSETS):
        if b[1 + dy, 1 + dx] >= mean:
            code |= 1 << p
    return code


def ilbp_codes(img) -> np.ndarray:
    """Codes for every pixel with a full 3x3 neighborhood; shape (h-2, w-2)."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 3 or a.shape[1] < 3:
        raise ValueError("image must be at least 3x3, got shape %s" % (a.shape,))
    h, w = a.shape
    total = np.zeros((h - 2, w - 2))
    for dy in range(3):
        for dx in range(3):
            total += a[dy : h - 2 + dy, dx : w - 2 + dx]
    mean = total / 9.0
    codes = np.zeros((h - 2, w - 2), dtype=np.uint8)
    for p, (dy, dx) in enumerate(_ILBP_OFFSETS):
        nb = a[1 + dy : h - 1 + dy, 1 + dx : w - 1 + dx]
        codes += (nb >= mean).astype(np.uint8) << p
    return codes


def ilbp_histogram(img) -> np.ndarray:
    """256-bin histogram of codes, normalized to sum 1."""
    codes = ilbp_codes(img)
    hist = np.bincount(codes.ravel(), minlength=256).astype(np.float64)
    return hist / codes.size


def bpd_ldct_codes(patch, cell_size: int = 8, n_coeffs: int = 36) -> np.ndarray:
    """Raw per-cell binary pattern codes as uint64, cells in row-major order.

    Within each cell the selected coefficients are compared against their own
    mean (DC included); coefficient l >= mean contributes 2**l to the code.
    """
    if n_coeffs > 63:
        raise ValueError("n_coeffs must be <= 63 so codes fit a 64-bit integer")
    coeffs = _cell_zigzag_coeffs(patch, cell_size, n_coeffs)
    mu = coeffs.mean(axis=1, keepdims=True)
    bits = (coeffs - mu) >= 0.0
    weights = np.uint64(1) << np.arange(n_coeffs, dtype=np.uint64)
    return (bits.astype(np.uint64) * weights).sum(axis=1, dtype=np.uint64)


def bpd_ldct(patch, cell_size: int = 8, n_coeffs: int = 36) -> np.ndarray:
    """Binary-pattern-of-DCT feature vector: one scalar per cell, each the
    packed code divided by 2**n_coeffs - 1 so values lie in (0, 1]."""
    codes = bpd_ldct_codes(patch, cell_size, n_coeffs)
    return codes.astype(np.float64) / float((1 << n_coeffs) - 1)


def _as_unit_batch(X) -> list:
    # Accepts an (n, h, w) array or an iterable of 2-D arrays; integer input
    # is scaled from [0, 255] to [0, 1].
    patches = []
    for item in X:
        a = np.asarray(item)
        if a.ndim != 2:
            raise ValueError("each patch must be 2-D, got shape %s" % (a.shape,))
        if np.issubdtype(a.dtype, np.integer):
            a = a.astype(np.float64) / 255.0
        else:
            a = a.astype(np.float64)
        patches.append(a)
    return patches


class _PatchDescriptor(BaseEstimator, TransformerMixin):
    """Base class for stateless patch-to-vector transformers."""

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        rows = [self._extract(p) for p in self._prepare(X)]
        return np.vstack(rows) if rows else np.empty((0, 0))

    def _prepare(self, X):
        return _as_unit_batch(X)

    def _extract(self, patch):  # pragma: no cover - abstract
        raise NotImplementedError


class DctDescriptor(_PatchDescriptor):
    """Global zigzag-truncated DCT coefficients.

    Parameters
    ----------
    n_coeffs : int, default=1024
        Number of retained coefficients.
    """

    def __init__(self, n_coeffs=1024):
        self.n_coeffs = n_coeffs

    def _extract(self, patch):
        return dct_global(patch, self.n_coeffs)


class LdctDescriptor(_PatchDescriptor):
    """Concatenated per-cell zigzag DCT coefficients.

    Parameters
    ----------
    cell_size : int, default=8
    n_coeffs : int, default=36
        Coefficients kept per cell.
    """

    def __init__(self, cell_size=8, n_coeffs=36):
        self.cell_size = cell_size
        self.n_coeffs = n_coeffs

    def _extract(self, patch):
        return ldct(patch, self.cell_size, self.n_coeffs)


class IlbpDescriptor(_PatchDescriptor):
    """Normalized 256-bin improved LBP histogram.

    Operates on 0..255 intensities; float patches in [0, 1] are requantized.
    """

    def _prepare(self, X):
        patches = []
        for item in X:
            a = np.asarray(item)
            if a.ndim != 2:
                raise ValueError("each patch must be 2-D, got shape %s" % (a.shape,))
            if not np.issubdtype(a.dtype, np.integer):
                a = np.floor(np.clip(a, 0.0, 1.0) * 255.0 + 0.5)
            patches.append(a)
        return patches

    def _extract(self, patch):
        return ilbp_histogram(patch)


class BpdLdctDescriptor(_PatchDescriptor):
    """One packed binary-pattern code per cell, scaled to (0, 1].

    Parameters
    ----------
    cell_size : int, default=8
    n_coeffs : int, default=36
        Coefficients entering the pattern; at most 63.
    """

    def __init__(self, cell_size=8, n_coeffs=36):
        self.cell_size = cell_size
        self.n_coeffs = n_coeffs

    def _extract(self, patch):
        return bpd_ldct(patch, self.cell_size, self.n_coeffs)


def make_descriptor(
    name: str,
    cell_size: int = 8,
    n_coeffs: int = 36,
    n_global_coeffs: int = 1024,
):
    """Instantiate a descriptor by CLI name: dct, ldct, ilbp, or bpd-ldct."""
    key = name.lower()
    if key == "dct":
        return DctDescriptor(n_coeffs=n_global_coeffs)
    if key == "ldct":
        return LdctDescriptor(cell_size=cell_size, n_coeffs=n_coeffs)
    if key == "ilbp":
        return IlbpDescriptor()
    if key == "bpd-ldct":
        return BpdLdctDescriptor(cell_size=cell_size, n_coeffs=n_coeffs)
    raise ValueError("unknown descriptor %r (expected one of %s)" % (name, ", ".join(DESCRIPTOR_NAMES)))


def feature_length(name: str, patch_size: int, cell_size: int, n_coeffs: int, n_global_coeffs: int) -> int:
    """Feature vector length for a descriptor under the given geometry."""
    key = name.lower()
    if key == "dct":
        return n_global_coeffs
    if key == "ilbp":
        return 256
    if patch_size % cell_size != 0:
        raise ValueError("cell size %d must divide patch size %d" % (cell_size, patch_size))
    cells = (patch_size // cell_size) ** 2
    if key == "ldct":
        return cells * n_coeffs
    if key == "bpd-ldct":
        return cells
    raise ValueError("unknown descriptor %r (expected one of %s)" % (name, ", ".join(DESCRIPTOR_NAMES)))
