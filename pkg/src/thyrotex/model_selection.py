"""Fold construction and hyperparameter search."""

from dataclasses import dataclass

import numpy as np

from .svm import SmoSvc, _resolve_gamma

__all__ = [
    "stratified_kfold",
    "shuffled_kfold",
    "grid_search",
    "TrainConfig",
    "DEFAULT_C_GRID",
    "DEFAULT_GAMMA_MULTIPLIERS",
]

DEFAULT_C_GRID = (0.1, 1.0, 10.0, 100.0)
DEFAULT_GAMMA_MULTIPLIERS = (0.01, 0.1, 1.0, 10.0)


@dataclass(frozen=True)
class TrainConfig:
    """Resolved SVM training hyperparameters."""

    C: float
    gamma: float
    tol: float = 1e-3
    max_iter: int | None = None
    seed: int = 0


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def stratified_kfold(labels, n_folds: int, seed=0) -> list:
    """Split sample indices into n_folds stratified test folds.

    Indices are shuffled within each class (classes visited in sorted label
    order) and dealt round-robin; the deal position carries from one class to
    the next, so fold sizes never differ by more than one and per-fold class
    counts stay within one of perfect stratification. Every class must have at
    least n_folds members.

    Returns a list of sorted index arrays, one per fold; each sample appears
    in exactly one.
    """
    y = np.asarray(labels)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("labels must be a non-empty 1-D sequence")
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2, got %d" % n_folds)
    rng = _rng(seed)
    folds = [[] for _ in range(n_folds)]
    pointer = 0
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        if len(idx) < n_folds:
            raise ValueError(
                "class %r has %d samples, fewer than n_folds=%d" % (cls, len(idx), n_folds)
            )
        rng.shuffle(idx)
        for i in idx:
            folds[pointer % n_folds].append(int(i))
            pointer += 1
    return [np.array(sorted(f), dtype=np.intp) for f in folds]


def shuffled_kfold(n_samples: int, n_folds: int, seed=0) -> list:
    """Unstratified variant: shuffle all indices, deal round-robin."""
    if n_samples < n_folds:
        raise ValueError("cannot split %d samples into %d folds" % (n_samples, n_folds))
    if n_folds < 2:
        raise ValueError("n_folds must be >= 2, got %d" % n_folds)
    rng = _rng(seed)
    idx = np.arange(n_samples)
    rng.shuffle(idx)
    folds = [[] for _ in range(n_folds)]
    for pos, i in enumerate(idx):
        folds[pos % n_folds].append(int(i))
    return [np.array(sorted(f), dtype=np.intp) for f in folds]


def grid_search(
    X,
    y,
    C_grid=DEFAULT_C_GRID,
    gamma_grid=None,
    inner_folds: int = 3,
    seed=0,
    tol: float = 1e-3,
) -> TrainConfig:
    """Pick (C, gamma) by mean accuracy over stratified inner folds.

    ``gamma_grid=None`` uses the data's auto gamma scaled by
    ``DEFAULT_GAMMA_MULTIPLIERS``. Ties resolve toward the smaller C, then the
    smaller gamma.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if len(C_grid) == 0:
        raise ValueError("C_grid must not be empty")
    if gamma_grid is None:
        auto = _resolve_gamma("auto", X)
        gamma_grid = [auto * m for m in DEFAULT_GAMMA_MULTIPLIERS]
    if len(gamma_grid) == 0:
        raise ValueError("gamma_grid must not be empty")
    folds = stratified_kfold(y, inner_folds, seed)
    all_idx = np.arange(len(y))
    best = None
    for C in sorted(set(float(c) for c in C_grid)):
        for gamma in sorted(set(float(g) for g in gamma_grid)):
            correct = []
            for test_idx in folds:
                train_idx = np.setdiff1d(all_idx, test_idx)
                clf = SmoSvc(C=C, gamma=gamma, tol=tol)
                clf.fit(X[train_idx], y[train_idx])
                pred = clf.predict(X[test_idx])
                correct.append(float(np.mean(pred == y[test_idx])))
            score = float(np.mean(correct))
            if best is None or score > best[0]:
                best = (score, C, gamma)
    _, C, gamma = best
    return TrainConfig(C=C, gamma=gamma, tol=tol, seed=seed if isinstance(seed, int) else 0)
