"""Cross-validated evaluation: confusion counts, the five report metrics, and
the experiment harness producing CSV/text reports."""

import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .model_selection import (
    DEFAULT_C_GRID,
    DEFAULT_GAMMA_MULTIPLIERS,
    grid_search,
    shuffled_kfold,
    stratified_kfold,
)
from .sampling import smote
from .svm import SmoSvc, _resolve_gamma

__all__ = [
    "ConfusionMatrix",
    "confusion",
    "MetricSet",
    "compute_metrics",
    "FoldResult",
    "EvalReport",
    "run_experiment",
    "METRIC_NAMES",
]

logger = logging.getLogger(__name__)

METRIC_NAMES = ("pre", "f1", "spec", "sen", "acc")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    tn: int
    fp: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.tn + self.fp

    def __add__(self, other):
        return ConfusionMatrix(
            self.tp + other.tp, self.fn + other.fn, self.tn + other.tn, self.fp + other.fp
        )


def confusion(y_true, y_pred, positive=1) -> ConfusionMatrix:
    """Count tp/fn/tn/fp with *positive* as the positive class."""
    t = np.asarray(y_true)
    p = np.asarray(y_pred)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError("y_true and y_pred must be 1-D with equal length, got %s vs %s" % (t.shape, p.shape))
    pos_t = t == positive
    pos_p = p == positive
    return ConfusionMatrix(
        tp=int(np.sum(pos_t & pos_p)),
        fn=int(np.sum(pos_t & ~pos_p)),
        tn=int(np.sum(~pos_t & ~pos_p)),
        fp=int(np.sum(~pos_t & pos_p)),
    )


@dataclass(frozen=True)
class MetricSet:
    """Precision, F1, specificity, sensitivity, accuracy in [0, 1].

    ``undefined`` names the metrics whose denominator was zero (reported as
    0.0 by convention).
    """

    pre: float
    f1: float
    spec: float
    sen: float
    acc: float
    undefined: tuple = ()

    def as_tuple(self) -> tuple:
        return (self.pre, self.f1, self.spec, self.sen, self.acc)

    @property
    def avg(self) -> float:
        return sum(self.as_tuple()) / 5.0


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def compute_metrics(cm: ConfusionMatrix) -> MetricSet:
    """Five metrics from a confusion matrix; 0/0 ratios become 0.0 and are
    flagged in ``undefined``."""
    if cm.total == 0:
        raise ValueError("confusion matrix is empty")
    undefined = []
    pre = _ratio(cm.tp, cm.tp + cm.fp, "pre", undefined)
    sen = _ratio(cm.tp, cm.tp + cm.fn, "sen", undefined)
    spec = _ratio(cm.tn, cm.tn + cm.fp, "spec", undefined)
    if pre + sen == 0:
        undefined.append("f1")
        f1 = 0.0
    else:
        f1 = 2.0 * pre * sen / (pre + sen)
    acc = (cm.tp + cm.tn) / cm.total
    return MetricSet(pre=pre, f1=f1, spec=spec, sen=sen, acc=acc, undefined=tuple(undefined))


@dataclass(frozen=True)
class FoldResult:
    index: int
    cm: ConfusionMatrix
    metrics: MetricSet
    C: float
    gamma: float


@dataclass
class EvalReport:
    """Cross-validation outcome: per-fold rows, fold-averaged metrics, the
    pooled-confusion metrics, and the fully resolved config echo."""

    folds: list
    averaged: MetricSet
    pooled: MetricSet
    config: dict = field(default_factory=dict)

    @property
    def avg(self) -> float:
        """Mean of the five fold-averaged metrics (the headline number)."""
        return self.averaged.avg

    def to_csv_text(self) -> str:
        """CSV rows ``fold,pre,f1,spec,sen,acc,avg`` as percentages with two
        decimals; one row per fold plus an ``avg`` row."""
        out = io.StringIO()
        out.write("fold,pre,f1,spec,sen,acc,avg\n")
        for fr in self.folds:
            cells = ["%.2f" % (100.0 * v) for v in fr.metrics.as_tuple()]
            out.write("%d,%s,%.2f\n" % (fr.index + 1, ",".join(cells), 100.0 * fr.metrics.avg))
        cells = ["%.2f" % (100.0 * v) for v in self.averaged.as_tuple()]
        out.write("avg,%s,%.2f\n" % (",".join(cells), 100.0 * self.avg))
        return out.getvalue()

    def to_summary_text(self) -> str:
        out = io.StringIO()
        out.write("cross-validation summary\n")
        out.write("========================\n\n")
        out.write("config:\n")
        for key in sorted(self.config):
            out.write("  %s=%s\n" % (key, self.config[key]))
        out.write("\nper-fold metrics (%):\n")
        header = "  %-5s %8s %8s %8s %8s %8s %8s" % ("fold", "pre", "f1", "spec", "sen", "acc", "avg")
        out.write(header + "\n")
        for fr in self.folds:
            vals = tuple(100.0 * v for v in fr.metrics.as_tuple()) + (100.0 * fr.metrics.avg,)
            out.write("  %-5d %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f\n" % ((fr.index + 1,) + vals))
        vals = tuple(100.0 * v for v in self.averaged.as_tuple()) + (100.0 * self.avg,)
        out.write("  %-5s %8.2f %8.2f %8.2f %8.2f %8.2f %8.2f\n" % (("avg",) + vals))
        if self.config.get("grid_search"):
            out.write("\nper-fold selected hyperparameters:\n")
            for fr in self.folds:
                out.write("  fold %d: C=%g gamma=%g\n" % (fr.index + 1, fr.C, fr.gamma))
        pooled_cm = self._pooled_cm()
        out.write("\npooled confusion: tp=%d fn=%d tn=%d fp=%d\n" % (
            pooled_cm.tp, pooled_cm.fn, pooled_cm.tn, pooled_cm.fp))
        out.write("pooled metrics (%%): pre=%.2f f1=%.2f spec=%.2f sen=%.2f acc=%.2f\n" % tuple(
            100.0 * v for v in self.pooled.as_tuple()))
        flagged = sorted({name for fr in self.folds for name in fr.metrics.undefined})
        if flagged:
            out.write("\nundefined (0/0) metrics reported as 0.0 in some folds: %s\n" % ", ".join(flagged))
        return out.getvalue()

    def _pooled_cm(self) -> ConfusionMatrix:
        total = ConfusionMatrix(0, 0, 0, 0)
        for fr in self.folds:
            total = total + fr.cm
        return total


def run_experiment(
    X,
    y,
    n_folds: int = 5,
    seed: int = 42,
    stratify: bool = True,
    use_smote: bool = True,
    smote_k: int = 5,
    C: float = 1.0,
    gamma="auto",
    tol: float = 1e-3,
    max_iter: int | None = None,
    search: bool = False,
    C_grid=DEFAULT_C_GRID,
    gamma_multipliers=DEFAULT_GAMMA_MULTIPLIERS,
    inner_folds: int = 3,
    positive_label=1,
    config_extra: dict | None = None,
) -> EvalReport:
    """K-fold cross-validation of the SMOTE + RBF-SVM stage.

    Features are taken as given (extracted once upstream and reused across
    folds). Per fold: oversample the training portion only, optionally run the
    inner grid search on it, fit, and score the untouched test portion. Fold
    ``i`` draws its randomness from ``numpy.random.default_rng(seed + i)``.

    Any fold failure aborts the experiment with the fold index in the error.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per label")
    folds = (
        stratified_kfold(y, n_folds, seed)
        if stratify
        else shuffled_kfold(len(y), n_folds, seed)
    )
    all_idx = np.arange(len(y))
    results = []
    for fold_i, test_idx in enumerate(folds):
        try:
            train_idx = np.setdiff1d(all_idx, test_idx)
            rng = np.random.default_rng(seed + fold_i)
            X_tr, y_tr = X[train_idx], y[train_idx]
            if use_smote:
                X_tr, y_tr = smote(X_tr, y_tr, k_neighbors=smote_k, random_state=rng)
            if search:
                auto = _resolve_gamma("auto", X_tr)
                cfg = grid_search(
                    X_tr,
                    y_tr,
                    C_grid=C_grid,
                    gamma_grid=[auto * m for m in gamma_multipliers],
                    inner_folds=inner_folds,
                    seed=seed + fold_i,
                    tol=tol,
                )
                fold_c, fold_gamma = cfg.C, cfg.gamma
            else:
                fold_c, fold_gamma = C, gamma
            clf = SmoSvc(C=fold_c, gamma=fold_gamma, tol=tol, max_iter=max_iter)
            clf.fit(X_tr, y_tr)
            pred = clf.predict(X[test_idx])
            cm = confusion(y[test_idx], pred, positive=positive_label)
            results.append(
                FoldResult(index=fold_i, cm=cm, metrics=compute_metrics(cm), C=float(clf.C), gamma=float(clf.gamma_))
            )
        except Exception as exc:
            raise RuntimeError("fold %d failed: %s" % (fold_i, exc)) from exc
    by_metric = {
        name: float(np.mean([getattr(fr.metrics, name) for fr in results])) for name in METRIC_NAMES
    }
    flagged = tuple(sorted({name for fr in results for name in fr.metrics.undefined}))
    averaged = MetricSet(undefined=flagged, **by_metric)
    pooled_cm = ConfusionMatrix(0, 0, 0, 0)
    for fr in results:
        pooled_cm = pooled_cm + fr.cm
    pooled = compute_metrics(pooled_cm)
    config = {
        "n_folds": n_folds,
        "seed": seed,
        "stratify": stratify,
        "use_smote": use_smote,
        "smote_k": smote_k,
        "svm_c": C,
        "svm_gamma": gamma,
        "tol": tol,
        "grid_search": search,
        "inner_folds": inner_folds,
        "positive_label": positive_label,
    }
    if config_extra:
        config.update(config_extra)
    return EvalReport(folds=results, averaged=averaged, pooled=pooled, config=config)
