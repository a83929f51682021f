"""Kernel SVM surrogate for cluster membership.

Binary SVMs are trained with simplified SMO (random second index), then
polished with maximal-violating-pair steps until the KKT conditions hold
within ``tol``. One-vs-rest models are Platt-calibrated and normalized into
class probabilities.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .cluster import check_schema
from .dataset import Dataset, ScalerParams, as_matrix, fit_scaler, kfold_split, stratified_kfold_split
from .errors import ConfigError, DataError, NumericalError

SCHEMA = "explainit.model"
SCHEMA_VERSION = 1
ALPHA_EPS = 1e-12


class PlattOrientationWarning(UserWarning):
    """Calibration slope A > 0: larger decision values mean lower probability."""


class CrossValidationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class Kernel:
    kind: str = "rbf"
    gamma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("rbf", "linear"):
            raise ConfigError(f"unknown kernel {self.kind!r}")

    def resolve(self, X) -> "Kernel":
        """Fill in the default rbf gamma = 1 / (m * Var(X))."""
        if self.kind != "rbf" or self.gamma is not None:
            return self
        var = float(np.var(X))
        return Kernel("rbf", 1.0 / (X.shape[1] * var) if var > 0 else 1.0)

    def __call__(self, A, B) -> np.ndarray:
        A = np.atleast_2d(A)
        B = np.atleast_2d(B)
        if self.kind == "linear":
            return A @ B.T
        d2 = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2 * A @ B.T
        return np.exp(-self.gamma * np.maximum(d2, 0.0))


@dataclass(frozen=True)
class BinarySvm:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # alpha_i * y_i
    bias: float
    kernel: Kernel
    C: float
    support: np.ndarray = field(default=None)  # training-row indices of the support vectors
    n_train: int = 0

    def alphas(self) -> np.ndarray:
        """Full-length dual variables over the training rows."""
        a = np.zeros(self.n_train)
        a[self.support] = np.abs(self.dual_coef)
        return a

    def to_dict(self) -> dict:
        return {
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "bias": self.bias,
            "kernel": {"kind": self.kernel.kind, "gamma": self.kernel.gamma},
            "C": self.C,
            "support": self.support.tolist(),
            "n_train": self.n_train,
        }

    @classmethod
    def from_dict(cls, obj) -> "BinarySvm":
        return cls(
            np.array(obj["support_vectors"], dtype=float).reshape(len(obj["dual_coef"]), -1),
            np.array(obj["dual_coef"], dtype=float),
            float(obj["bias"]),
            Kernel(**obj["kernel"]),
            float(obj["C"]),
            np.array(obj["support"], dtype=int),
            int(obj["n_train"]),
        )


def decision_function(model: BinarySvm, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    m = model.support_vectors.shape[1]
    if X.shape[1] != m:
        raise DataError(f"expected {m} features, got {X.shape[1]}")
    if len(model.dual_coef) == 0:
        return np.full(X.shape[0], model.bias)
    return model.kernel(X, model.support_vectors) @ model.dual_coef + model.bias


def svm_decision(model: BinarySvm, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DataError("svm_decision expects a single m-vector")
    return float(decision_function(model, x[None, :])[0])


def kkt_violations(model: BinarySvm, X, y, tol: float) -> np.ndarray:
    """Indices of training rows violating the KKT conditions by more than ``tol``."""
    y = np.asarray(y, dtype=float)
    alpha = model.alphas()
    u = y * decision_function(model, X)
    at_zero = alpha <= ALPHA_EPS
    at_c = alpha >= model.C - ALPHA_EPS
    free = ~at_zero & ~at_c
    bad = (at_zero & (u < 1 - tol)) | (free & (np.abs(u - 1) > tol)) | (at_c & (u > 1 + tol))
    return np.flatnonzero(bad)


def _check_binary(y):
    y = np.asarray(y, dtype=float)
    if not np.all((y == 1) | (y == -1)):
        raise DataError("binary labels must be -1 or +1")
    if len(y) < 2 or (y == 1).all() or (y == -1).all():
        raise DataError("binary SVM training needs both classes present")
    return y


def svm_train_binary(
    X,
    y,
    kernel: Kernel = Kernel(),
    C: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 10,
    seed: int = 0,
    max_polish: int = 100_000,
) -> BinarySvm:
    """Train a soft-margin kernel SVM on labels in {-1, +1}."""
    X = as_matrix(X)
    y = _check_binary(y)
    if not C > 0:
        raise ConfigError(f"C must be positive, got {C}")
    n = X.shape[0]
    kernel = kernel.resolve(X)
    K = kernel(X, X)
    rng = np.random.default_rng(seed)
    alpha = np.zeros(n)
    b = 0.0
    # E_i = f(x_i) - y_i, kept in sync with alpha and b
    E = -y.copy()

    def step(i, j, b):
        if i == j:
            return False, b
        ai, aj = alpha[i], alpha[j]
        if y[i] != y[j]:
            L, H = max(0.0, aj - ai), min(C, C + aj - ai)
        else:
            L, H = max(0.0, ai + aj - C), min(C, ai + aj)
        if L >= H:
            return False, b
        eta = 2 * K[i, j] - K[i, i] - K[j, j]
        if eta >= 0:
            return False, b
        aj_new = min(H, max(L, aj - y[j] * (E[i] - E[j]) / eta))
        if abs(aj_new - aj) < 1e-5 * (aj_new + aj + 1e-5):
            return False, b
        ai_new = ai + y[i] * y[j] * (aj - aj_new)
        dai, daj = ai_new - ai, aj_new - aj
        b1 = b - E[i] - y[i] * dai * K[i, i] - y[j] * daj * K[i, j]
        b2 = b - E[j] - y[i] * dai * K[i, j] - y[j] * daj * K[j, j]
        if 0 < ai_new < C:
            b_new = b1
        elif 0 < aj_new < C:
            b_new = b2
        else:
            b_new = (b1 + b2) / 2
        alpha[i], alpha[j] = ai_new, aj_new
        E[:] += y[i] * dai * K[i] + y[j] * daj * K[j] + (b_new - b)
        return True, b_new

    passes = 0
    sweeps = 0
    while passes < max_passes and sweeps < 50 * max_passes:
        changed = 0
        for i in range(n):
            r = y[i] * E[i]
            if (r < -tol and alpha[i] < C) or (r > tol and alpha[i] > 0):
                j = int(rng.integers(n - 1))
                j += j >= i
                ok, b = step(i, j, b)
                changed += ok
        passes = passes + 1 if changed == 0 else 0
        sweeps += 1

    # maximal violating pair on the bias-free gradient g_i = sum_j alpha_j y_j K_ij - y_i
    g = E - b
    for _ in range(max_polish):
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        vals = -g
        i = int(np.flatnonzero(up)[np.argmax(vals[up])])
        j = int(np.flatnonzero(low)[np.argmin(vals[low])])
        gap = vals[i] - vals[j]
        if gap <= tol:
            break
        # move along y_i d_i = +t, y_j d_j = -t
        quad = K[i, i] + K[j, j] - 2 * K[i, j]
        t = gap / quad if quad > 1e-12 else np.inf
        ti = C - alpha[i] if y[i] > 0 else alpha[i]
        tj = alpha[j] if y[j] > 0 else C - alpha[j]
        t = min(t, ti, tj)
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)
        g += t * (K[i] - K[j])
    else:
        raise NumericalError(f"SMO did not reach KKT tolerance {tol} in {max_polish} polishing steps")

    up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
    # any b between the two extremes satisfies every KKT condition within tol
    b = float((np.max(-g[up]) + np.min(-g[low])) / 2)

    sv = np.flatnonzero(alpha > ALPHA_EPS)
    model = BinarySvm(X[sv].copy(), alpha[sv] * y[sv], b, kernel, float(C), sv, n)
    return model


# ------------------------------------------------------------ calibration


@dataclass(frozen=True)
class PlattCalibration:
    A: float
    B: float

    def __call__(self, f) -> np.ndarray:
        z = self.A * np.asarray(f, dtype=float) + self.B
        return np.exp(-np.logaddexp(0.0, z))

    def log_proba(self, f) -> np.ndarray:
        return -np.logaddexp(0.0, self.A * np.asarray(f, dtype=float) + self.B)


def platt_fit(decisions, y, max_newton: int = 100, gtol: float = 1e-10) -> PlattCalibration:
    """Newton's method with backtracking on Platt's smoothed-target likelihood."""
    f = np.asarray(decisions, dtype=float)
    y = np.asarray(y)
    pos = y > 0
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("Platt calibration needs both classes present")
    t = np.where(pos, (n_pos + 1) / (n_pos + 2), 1.0 / (n_neg + 2))

    def objective(A, B):
        z = A * f + B
        return float(np.sum(t * np.logaddexp(0, z) + (1 - t) * np.logaddexp(0, -z)))

    A, B = 0.0, math.log((n_neg + 1) / (n_pos + 1))
    fval = objective(A, B)
    sigma = 1e-12
    for _ in range(max_newton):
        z = A * f + B
        p = np.exp(-np.logaddexp(0, z))  # 1 / (1 + e^z)
        q = 1 - p
        d1 = t - p
        d2 = p * q
        gA, gB = float(d1 @ f), float(d1.sum())
        if max(abs(gA), abs(gB)) < gtol:
            break
        h11 = float(d2 @ (f * f)) + sigma
        h22 = float(d2.sum()) + sigma
        h21 = float(d2 @ f)
        det = h11 * h22 - h21 * h21
        dA = -(h22 * gA - h21 * gB) / det
        dB = -(-h21 * gA + h11 * gB) / det
        gd = gA * dA + gB * dB
        step = 1.0
        while step >= 1e-12:
            nA, nB = A + step * dA, B + step * dB
            nval = objective(nA, nB)
            if nval < fval + 1e-4 * step * gd:
                A, B, fval = nA, nB, nval
                break
            step /= 2
        else:
            # no decrease along the Newton direction: already at machine-precision optimum
            break
    else:
        raise NumericalError(f"Platt calibration did not converge in {max_newton} Newton steps")
    if A > 0:
        warnings.warn(f"Platt slope A = {A:.4g} > 0: decision values are anti-correlated", PlattOrientationWarning)
    return PlattCalibration(float(A), float(B))


# ------------------------------------------------------------- multiclass


@dataclass(frozen=True)
class SvmParams:
    kernel: str = "rbf"
    gamma: Optional[float] = None
    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 10
    seed: int = 0
    standardize: bool = True


@dataclass(frozen=True)
class MulticlassSvm:
    """One-vs-rest calibrated SVMs. ``scaler`` (if set) is applied to raw inputs."""

    classes: tuple
    binaries: tuple
    calibrations: tuple
    scaler: Optional[ScalerParams] = None
    feature_names: tuple = ()

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def _prepare(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m = self.binaries[0].support_vectors.shape[1]
        if X.shape[1] != m:
            raise DataError(f"expected {m} features, got {X.shape[1]}")
        return self.scaler.transform(X) if self.scaler is not None else X

    def decision_values(self, X) -> np.ndarray:
        Z = self._prepare(X)
        return np.column_stack([decision_function(b, Z) for b in self.binaries])

    def predict_proba(self, X) -> np.ndarray:
        F = self.decision_values(X)
        logp = np.column_stack([c.log_proba(F[:, i]) for i, c in enumerate(self.calibrations)])
        return np.exp(logp - logsumexp(logp, axis=1, keepdims=True))

    def predict(self, X) -> np.ndarray:
        return np.asarray(self.classes)[self.predict_proba(X).argmax(axis=1)]

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "schema_version": SCHEMA_VERSION,
            "classes": list(self.classes),
            "feature_names": list(self.feature_names),
            "scaler": None if self.scaler is None else self.scaler.to_dict(),
            "binaries": [b.to_dict() for b in self.binaries],
            "calibrations": [{"A": c.A, "B": c.B} for c in self.calibrations],
        }

    @classmethod
    def from_dict(cls, obj) -> "MulticlassSvm":
        check_schema(obj, SCHEMA, SCHEMA_VERSION)
        return cls(
            tuple(int(c) for c in obj["classes"]),
            tuple(BinarySvm.from_dict(b) for b in obj["binaries"]),
            tuple(PlattCalibration(c["A"], c["B"]) for c in obj["calibrations"]),
            None if obj["scaler"] is None else ScalerParams.from_dict(obj["scaler"]),
            tuple(obj.get("feature_names") or ()),
        )

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_json(cls, path) -> "MulticlassSvm":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def predict_proba(model, x) -> np.ndarray:
    """Class probabilities for a single m-vector."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DataError("predict_proba expects a single m-vector")
    return model.predict_proba(x[None, :])[0]


def multiclass_train(d, labels, params: SvmParams = SvmParams(), n_classes: Optional[int] = None) -> MulticlassSvm:
    """Fit one calibrated binary SVM per class (class vs rest)."""
    X = as_matrix(d)
    labels = np.asarray(labels, dtype=int)
    if len(labels) != X.shape[0]:
        raise DataError(f"{len(labels)} labels for {X.shape[0]} rows")
    classes = np.unique(labels)
    if n_classes is not None:
        missing = sorted(set(range(n_classes)) - set(classes.tolist()))
        if missing:
            raise DataError(f"classes {missing} are absent from the labels")
    if len(classes) < 2:
        raise DataError("the surrogate needs at least 2 classes")
    scaler = fit_scaler(X) if params.standardize else None
    Z = scaler.transform(X) if scaler is not None else X
    kernel = Kernel(params.kernel, params.gamma).resolve(Z)
    binaries, cals = [], []
    for c in classes:
        y = np.where(labels == c, 1.0, -1.0)
        svm = svm_train_binary(Z, y, kernel, params.C, params.tol, params.max_passes, params.seed)
        binaries.append(svm)
        cals.append(platt_fit(decision_function(svm, Z), y))
    names = d.columns if isinstance(d, Dataset) else ()
    return MulticlassSvm(tuple(int(c) for c in classes), tuple(binaries), tuple(cals), scaler, tuple(names))


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class ClassificationReport:
    classes: tuple
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    averages: dict  # {"micro"|"macro"|"weighted": (precision, recall, f1)}
    confusion: np.ndarray
    accuracy: float

    def to_dict(self) -> dict:
        rows = {
            str(c): {
                "precision": float(self.precision[i]),
                "recall": float(self.recall[i]),
                "f1": float(self.f1[i]),
                "support": int(self.support[i]),
            }
            for i, c in enumerate(self.classes)
        }
        total = int(self.support.sum())
        for name, (p, r, f) in self.averages.items():
            rows[f"{name} avg"] = {"precision": p, "recall": r, "f1": f, "support": total}
        return {"rows": rows, "accuracy": self.accuracy, "confusion": self.confusion.tolist()}

    def to_markdown(self) -> str:
        lines = ["| class | precision | recall | f1-score | support |", "|---|---:|---:|---:|---:|"]
        for name, r in self.to_dict()["rows"].items():
            label = f"C{name}" if name.isdigit() else name
            lines.append(
                f"| {label} | {r['precision']:.3f} | {r['recall']:.3f} | {r['f1']:.3f} | {r['support']} |"
            )
        return "\n".join(lines) + "\n"


def _safe_div(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return np.divide(a, b, out=np.zeros_like(a), where=b > 0)


def report_from_confusion(cm, classes=None) -> ClassificationReport:
    """Per-class and averaged scores; rows of ``cm`` are true classes, columns predictions."""
    cm = np.asarray(cm, dtype=np.int64)
    k = cm.shape[0]
    classes = tuple(range(k)) if classes is None else tuple(classes)
    tp = np.diag(cm).astype(float)
    pred_tot = cm.sum(axis=0)
    true_tot = cm.sum(axis=1)
    precision = _safe_div(tp, pred_tot)
    recall = _safe_div(tp, true_tot)
    f1 = _safe_div(2 * tp, pred_tot + true_tot)
    total = cm.sum()
    T = tp.sum()
    # single-label: every false positive is someone's false negative
    micro = float(T / total)
    micro_f1 = float(2 * T / (2 * total))
    w = true_tot / total
    averages = {
        "micro": (micro, micro, micro_f1),
        "macro": (float(precision.mean()), float(recall.mean()), float(f1.mean())),
        "weighted": (float(precision @ w), float(recall @ w), float(f1 @ w)),
    }
    return ClassificationReport(classes, precision, recall, f1, true_tot, averages, cm, float(T / total))


def classification_report(y_true, y_pred, classes=None) -> ClassificationReport:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if classes is None:
        classes = np.unique(np.concatenate([y_true, y_pred]))
    classes = np.asarray(classes)
    index = {int(c): i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        cm[index[int(t)], index[int(p)]] += 1
    return report_from_confusion(cm, tuple(int(c) for c in classes))


def crossval_predictions(d, labels, params: SvmParams = SvmParams(), k_folds: int = 10, seed: int = 0):
    """Pooled out-of-fold predictions from stratified k-fold CV."""
    X = as_matrix(d)
    labels = np.asarray(labels, dtype=int)
    counts = np.bincount(labels)
    if counts[counts > 0].min() < k_folds:
        warnings.warn(
            f"smallest class has {counts[counts > 0].min()} members < {k_folds} folds; using unstratified folds",
            CrossValidationWarning,
        )
        folds = kfold_split(len(labels), k_folds, seed)
    else:
        folds = stratified_kfold_split(labels, k_folds, seed)
    pred = np.empty(len(labels), dtype=int)
    for f, test in enumerate(folds):
        train = np.setdiff1d(np.arange(len(labels)), test)
        fold_params = replace(params, seed=params.seed + f)
        model = multiclass_train(X[train], labels[train], fold_params)
        pred[test] = model.predict(X[test])
    return pred


def crossval_report(d, labels, params: SvmParams = SvmParams(), k_folds: int = 10, seed: int = 0) -> ClassificationReport:
    labels = np.asarray(labels, dtype=int)
    pred = crossval_predictions(d, labels, params, k_folds, seed)
    return classification_report(labels, pred, np.unique(labels))
