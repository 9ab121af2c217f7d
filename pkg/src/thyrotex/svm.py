"""Soft-margin RBF-kernel SVM trained by sequential minimal optimization."""

import logging
import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils import check_array, check_X_y
from sklearn.utils.validation import check_is_fitted

__all__ = ["rbf_kernel", "SmoSvc", "kkt_report", "save_model", "load_model"]

logger = logging.getLogger(__name__)

MODEL_SCHEMA_VERSION = 1

_EPS = 1e-12
_KERNEL_MATRIX_MAX = 4096


def rbf_kernel(x, z, gamma: float):
    """Gaussian kernel exp(-gamma * ||x - z||^2).

    Two 1-D inputs give a scalar; 2-D inputs give the pairwise matrix.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive, got %r" % (gamma,))
    xa = np.asarray(x, dtype=np.float64)
    za = np.asarray(z, dtype=np.float64)
    if xa.ndim == 1 and za.ndim == 1:
        if xa.shape != za.shape:
            raise ValueError("dimension mismatch: %d vs %d" % (xa.shape[0], za.shape[0]))
        return float(np.exp(-gamma * np.sum((xa - za) ** 2)))
    X = np.atleast_2d(xa)
    Z = np.atleast_2d(za)
    if X.shape[1] != Z.shape[1]:
        raise ValueError("dimension mismatch: %d vs %d" % (X.shape[1], Z.shape[1]))
    d2 = np.sum(X**2, axis=1)[:, None] + np.sum(Z**2, axis=1)[None, :] - 2.0 * (X @ Z.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


def _resolve_gamma(gamma, X) -> float:
    if gamma == "auto":
        mean_var = float(X.var(axis=0).mean())
        if mean_var > 0:
            return 1.0 / (X.shape[1] * mean_var)
        return 1.0 / X.shape[1]
    g = float(gamma)
    if not g > 0:
        raise ValueError("gamma must be positive, got %r" % (gamma,))
    return g


def _solve_smo(kernel_row, y, C, tol, max_iter, track_objective=False):
    """Maximal-violating-pair SMO over the dual box [0, C]^n.

    ``kernel_row(i)`` returns the i-th kernel row. ``y`` holds labels in
    {-1, +1}. Stops when no pair violates the KKT conditions beyond ``tol``
    (gap between the worst lower and upper errors) or at ``max_iter`` pair
    updates, whichever comes first.

    Returns (alpha, bias, n_iter, converged, objective_deltas).
    """
    n = y.size
    alpha = np.zeros(n)
    e = -y.astype(np.float64)  # bias-free error: sum_j alpha_j y_j K_ij - y_i
    deltas = [] if track_objective else None
    it = 0
    converged = False
    while it < max_iter:
        up = ((y > 0) & (alpha < C - _EPS)) | ((y < 0) & (alpha > _EPS))
        low = ((y < 0) & (alpha < C - _EPS)) | ((y > 0) & (alpha > _EPS))
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmin(np.where(up, e, np.inf)))
        j = int(np.argmax(np.where(low, e, -np.inf)))
        if e[j] - e[i] <= tol:
            converged = True
            break
        ki = kernel_row(i)
        kj = kernel_row(j)
        eta = ki[i] + kj[j] - 2.0 * ki[j]
        if y[i] == y[j]:
            lo = max(0.0, alpha[i] + alpha[j] - C)
            hi = min(C, alpha[i] + alpha[j])
        else:
            lo = max(0.0, alpha[j] - alpha[i])
            hi = min(C, C + alpha[j] - alpha[i])
        if eta > _EPS:
            a_j = alpha[j] + y[j] * (e[i] - e[j]) / eta
            a_j = min(max(a_j, lo), hi)
        else:
            # Objective is linear along this pair; jump to the better endpoint.
            best = alpha[j]
            best_gain = 0.0
            for cand in (lo, hi):
                lam = y[j] * (cand - alpha[j])
                gain = lam * (e[i] - e[j]) - 0.5 * lam * lam * eta
                if gain > best_gain + _EPS:
                    best, best_gain = cand, gain
            a_j = best
        d_j = a_j - alpha[j]
        if abs(d_j) <= _EPS * (abs(a_j) + abs(alpha[j]) + _EPS):
            warnings.warn("SMO stalled before reaching tolerance; returning current iterate")
            break
        d_i = -y[i] * y[j] * d_j
        if track_objective:
            lam = y[j] * d_j
            gain = lam * (e[i] - e[j]) - 0.5 * lam * lam * eta
            assert gain >= -1e-9, "dual objective decreased by %g" % (-gain,)
            deltas.append(gain)
        # clamp float drift so the box constraint holds exactly
        alpha[i] = min(max(alpha[i] + d_i, 0.0), C)
        alpha[j] = a_j
        e += d_i * y[i] * ki + d_j * y[j] * kj
        it += 1
    else:
        warnings.warn(
            "SMO hit the iteration cap (%d pair updates) before reaching tolerance" % max_iter
        )
    free = (alpha > _EPS) & (alpha < C - _EPS)
    if free.any():
        bias = float(-e[free].mean())
    else:
        up = ((y > 0) & (alpha < C - _EPS)) | ((y < 0) & (alpha > _EPS))
        low = ((y < 0) & (alpha < C - _EPS)) | ((y > 0) & (alpha > _EPS))
        lo_bound = float(-e[up].min()) if up.any() else None
        hi_bound = float(-e[low].max()) if low.any() else None
        if lo_bound is None and hi_bound is None:
            bias = 0.0
        elif lo_bound is None:
            bias = hi_bound
        elif hi_bound is None:
            bias = lo_bound
        else:
            bias = 0.5 * (lo_bound + hi_bound)
    return alpha, bias, it, converged, deltas


class SmoSvc(BaseEstimator, ClassifierMixin):
    """Binary classifier with an RBF kernel, fitted by SMO.

    Parameters
    ----------
    C : float, default=1.0
        Soft-margin penalty; dual variables are boxed to [0, C].
    gamma : float or "auto", default="auto"
        Kernel width. "auto" resolves to 1 / (n_features * mean per-feature
        variance) of the training data (1 / n_features if the variance is 0).
    tol : float, default=1e-3
        KKT violation tolerance; training stops when no pair violates beyond it.
    max_iter : int or None, default=None
        Cap on pair updates; None means max(100 * n_samples, 2000). Hitting
        the cap emits a warning and keeps the current iterate.
    track_objective : bool, default=False
        Record per-update dual objective gains in ``objective_deltas_`` and
        assert they are never negative.

    Attributes
    ----------
    classes_ : ndarray of shape (2,)
        Sorted class labels; the second maps to the positive side.
    support_ : ndarray
        Indices of training rows with nonzero dual variables.
    support_vectors_ : ndarray
    dual_coef_ : ndarray
        alpha_i * y_i for each support vector.
    intercept_ : float
        Bias, recomputed after training from in-bound support vectors.
    alphas_ : ndarray of shape (n_samples,)
        Full dual solution, kept for KKT auditing.
    gamma_ : float
        Resolved kernel width.
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, C=1.0, gamma="auto", tol=1e-3, max_iter=None, track_objective=False):
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.track_objective = track_objective

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        classes = np.unique(y)
        if len(classes) != 2:
            raise ValueError("exactly two classes are required, got %d" % len(classes))
        if not self.C > 0:
            raise ValueError("C must be positive, got %r" % (self.C,))
        if not self.tol > 0:
            raise ValueError("tol must be positive, got %r" % (self.tol,))
        y_pm = np.where(y == classes[1], 1.0, -1.0)
        gamma = _resolve_gamma(self.gamma, X)
        n = X.shape[0]
        max_iter = self.max_iter if self.max_iter is not None else max(100 * n, 2000)
        if n <= _KERNEL_MATRIX_MAX:
            K = rbf_kernel(X, X, gamma)
            np.fill_diagonal(K, 1.0)
            kernel_row = lambda i: K[i]
        else:
            def kernel_row(i, _X=X, _g=gamma):
                row = rbf_kernel(_X[i : i + 1], _X, _g)[0]
                row[i] = 1.0
                return row
        alpha, bias, n_iter, converged, deltas = _solve_smo(
            kernel_row, y_pm, float(self.C), float(self.tol), int(max_iter), self.track_objective
        )
        drift = float(abs(np.dot(alpha, y_pm)))
        if drift > 1e-8:
            logger.warning("dual equality constraint drifted to %g", drift)
        sv = alpha > _EPS
        self.classes_ = classes
        self.gamma_ = gamma
        self.alphas_ = alpha
        self.support_ = np.flatnonzero(sv)
        self.support_vectors_ = X[sv].copy()
        self.dual_coef_ = (alpha[sv] * y_pm[sv]).copy()
        self.intercept_ = bias
        self.n_iter_ = n_iter
        self.converged_ = converged
        self.objective_deltas_ = deltas
        self.n_features_in_ = X.shape[1]
        return self

    def decision_function(self, X):
        """Signed score sum_i dual_coef_i * K(sv_i, x) + intercept_."""
        check_is_fitted(self, "support_vectors_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                "feature dimension mismatch: model expects %d, input has %d"
                % (self.n_features_in_, X.shape[1])
            )
        if len(self.support_vectors_) == 0:
            return np.full(X.shape[0], self.intercept_)
        K = rbf_kernel(X, self.support_vectors_, self.gamma_)
        return K @ self.dual_coef_ + self.intercept_

    def predict(self, X):
        """Positive class (``classes_[1]``) where the score is >= 0."""
        scores = self.decision_function(X)
        return np.where(scores >= 0.0, self.classes_[1], self.classes_[0])


def kkt_report(clf: SmoSvc, X, y, tol: float | None = None) -> dict:
    """Audit the fitted dual solution against the KKT conditions on its own
    training data.

    Checks, per training point with margin m = y * decision:
      alpha == 0      ->  m >= 1 - tol
      0 < alpha < C   ->  |m - 1| <= tol
      alpha == C      ->  m <= 1 + tol
    plus |sum alpha_i y_i| <= 1e-8.

    Returns a dict with the worst residual per condition and an ``ok`` flag.
    """
    check_is_fitted(clf, "alphas_")
    if tol is None:
        tol = clf.tol
    X = check_array(X, dtype=np.float64)
    y = np.asarray(y)
    y_pm = np.where(y == clf.classes_[1], 1.0, -1.0)
    margins = y_pm * clf.decision_function(X)
    alpha = clf.alphas_
    C = float(clf.C)
    at_zero = alpha <= _EPS
    at_c = alpha >= C - _EPS
    free = ~at_zero & ~at_c
    r_zero = float(np.max(1.0 - margins[at_zero])) if at_zero.any() else 0.0
    r_free = float(np.max(np.abs(margins[free] - 1.0))) if free.any() else 0.0
    r_c = float(np.max(margins[at_c] - 1.0)) if at_c.any() else 0.0
    balance = float(abs(np.dot(alpha, y_pm)))
    ok = r_zero <= tol and r_free <= tol and r_c <= tol and balance <= 1e-8
    return {
        "ok": bool(ok),
        "tol": float(tol),
        "zero_margin_deficit": r_zero,
        "free_margin_residual": r_free,
        "bound_margin_excess": r_c,
        "dual_balance": balance,
    }


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def save_model(clf: SmoSvc, path) -> None:
    """Persist a fitted model as structured text.

    Header lines carry the schema version, gamma, C, bias, feature count and
    class labels; each following line holds one support vector as the dual
    coefficient followed by its features. All reals use 17 significant digits,
    which round-trips float64 exactly.
    """
    check_is_fitted(clf, "support_vectors_")
    lines = [
        "schema_version=%d" % MODEL_SCHEMA_VERSION,
        "gamma=%s" % _fmt(clf.gamma_),
        "C=%s" % _fmt(clf.C),
        "bias=%s" % _fmt(clf.intercept_),
        "n_features=%d" % clf.n_features_in_,
        "classes=%s %s" % (clf.classes_[0], clf.classes_[1]),
        "n_support=%d" % len(clf.support_vectors_),
    ]
    for coef, vec in zip(clf.dual_coef_, clf.support_vectors_):
        lines.append(" ".join([_fmt(coef)] + [_fmt(v) for v in vec]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> SmoSvc:
    """Load a model written by :func:`save_model` into a fitted SmoSvc."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = {}
    idx = 0
    for idx, line in enumerate(lines):
        if "=" not in line:
            break
        key, _, value = line.partition("=")
        header[key.strip()] = value.strip()
    else:
        idx = len(lines)
    required = ("schema_version", "gamma", "C", "bias", "n_features", "classes", "n_support")
    missing = [k for k in required if k not in header]
    if missing:
        raise ValueError("model file %s is missing fields: %s" % (path, ", ".join(missing)))
    if int(header["schema_version"]) != MODEL_SCHEMA_VERSION:
        raise ValueError(
            "unsupported model schema version %s (expected %d)"
            % (header["schema_version"], MODEL_SCHEMA_VERSION)
        )
    n_features = int(header["n_features"])
    n_support = int(header["n_support"])
    sv_lines = lines[idx:]
    if len(sv_lines) != n_support:
        raise ValueError(
            "model file %s: expected %d support vector lines, found %d"
            % (path, n_support, len(sv_lines))
        )
    coefs = np.empty(n_support)
    vectors = np.empty((n_support, n_features))
    for r, line in enumerate(sv_lines):
        parts = line.split()
        if len(parts) != n_features + 1:
            raise ValueError(
                "model file %s: support vector line %d has %d values, expected %d"
                % (path, r + 1, len(parts), n_features + 1)
            )
        coefs[r] = float(parts[0])
        vectors[r] = [float(p) for p in parts[1:]]
    class_tokens = header["classes"].split()
    classes = []
    for tok in class_tokens:
        try:
            classes.append(int(tok))
        except ValueError:
            classes.append(float(tok))
    clf = SmoSvc(C=float(header["C"]), gamma=float(header["gamma"]))
    clf.classes_ = np.array(classes)
    clf.gamma_ = float(header["gamma"])
    clf.intercept_ = float(header["bias"])
    clf.support_vectors_ = vectors
    clf.dual_coef_ = coefs
    clf.support_ = np.arange(n_support)
    clf.alphas_ = np.abs(coefs)
    clf.n_features_in_ = n_features
    clf.n_iter_ = 0
    clf.converged_ = True
    clf.objective_deltas_ = None
    return clf
