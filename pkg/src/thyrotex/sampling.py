"""Minority oversampling (SMOTE) with a pinned pseudo-random draw order."""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_X_y

__all__ = ["smote", "Smote"]


def smote(X, y, k_neighbors: int = 5, random_state=None):
    """Balance a binary dataset by synthesizing minority samples.

    Originals are preserved in their input order; synthetics are appended with
    the minority label until both classes have equal counts. Each synthetic
    lies on the segment between a minority sample and one of its k nearest
    minority neighbors (Euclidean distance, ties toward the smaller original
    index).

    Randomness comes from ``numpy.random.default_rng(random_state)`` (PCG64).
    Per synthetic, draws happen in a fixed order: base sample index
    (``integers``), neighbor slot (``integers``), interpolation factor
    (``random``), which makes outputs bit-identical for a fixed seed.

    Parameters
    ----------
    X : array-like of shape (n_samples, n_features)
    y : array-like of shape (n_samples,)
        Exactly two distinct labels.
    k_neighbors : int, default=5
        Neighborhood size; must satisfy 1 <= k <= minority_count - 1.
    random_state : int, numpy Generator, or None

    Returns
    -------
    X_out, y_out : ndarray
        Balanced data; equal class counts. Already-balanced input is returned
        unchanged (as copies).
    """
    X, y = check_X_y(X, y, dtype=np.float64)
    labels, counts = np.unique(y, return_counts=True)
    if len(labels) != 2:
        raise ValueError("smote requires exactly two classes, got %d" % len(labels))
    if counts[0] == counts[1]:
        return X.copy(), y.copy()
    minority = labels[int(np.argmin(counts))]
    n_minority = int(counts.min())
    n_needed = int(counts.max() - counts.min())
    if n_minority < 2:
        raise ValueError("minority class needs at least 2 samples, got %d" % n_minority)
    if k_neighbors < 1:
        raise ValueError("k_neighbors must be >= 1, got %d" % k_neighbors)
    if k_neighbors > n_minority - 1:
        raise ValueError(
            "k_neighbors=%d exceeds minority_count-1=%d" % (k_neighbors, n_minority - 1)
        )
    rng = random_state if isinstance(random_state, np.random.Generator) else np.random.default_rng(random_state)
    minority_rows = X[y == minority]
    sq = np.sum(minority_rows**2, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (minority_rows @ minority_rows.T)
    np.fill_diagonal(d2, -1.0)  # self sorts strictly first even among duplicates
    neighbors = np.argsort(d2, axis=1, kind="stable")[:, 1 : k_neighbors + 1]
    synth = np.empty((n_needed, X.shape[1]))
    for s in range(n_needed):
        base = int(rng.integers(n_minority))
        slot = int(rng.integers(k_neighbors))
        u = float(rng.random())
        xb = minority_rows[base]
        xn = minority_rows[neighbors[base, slot]]
        row = xb + u * (xn - xb)
        # clamp float drift so synthetics stay inside the parent box
        synth[s] = np.clip(row, np.minimum(xb, xn), np.maximum(xb, xn))
    X_out = np.vstack([X, synth])
    y_out = np.concatenate([y, np.full(n_needed, minority, dtype=y.dtype)])
    return X_out, y_out


class Smote(BaseEstimator):
    """Estimator-style wrapper around :func:`smote`.

    Parameters
    ----------
    k_neighbors : int, default=5
    random_state : int, numpy Generator, or None
    """

    def __init__(self, k_neighbors=5, random_state=None):
        self.k_neighbors = k_neighbors
        self.random_state = random_state

    def fit_resample(self, X, y):
        return smote(X, y, k_neighbors=self.k_neighbors, random_state=self.random_state)
