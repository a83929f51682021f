"""Local surrogate explanations for tabular data.

An instance is explained by sampling a neighborhood in quartile-bin space,
weighting samples by their binary distance to the instance, and fitting a
sparse weighted ridge model to the black box's class probability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cluster import check_schema
from .dataset import Dataset, as_matrix
from .errors import ConfigError, DataError

SCHEMA = "explainit.explanations"
SCHEMA_VERSION = 1


def format_number(v: float) -> str:
    """Thousands separators, at most three decimals, no trailing zeros."""
    s = f"{v:,.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


@dataclass(frozen=True)
class Discretizer:
    """Quartile bins per feature.

    ``boundaries[j]`` are the distinct quartiles of feature j (empty for a
    constant feature, which has a single bin). Bin b holds values in
    (boundaries[b-1], boundaries[b]].
    """

    feature_names: tuple
    boundaries: tuple
    lo: tuple
    hi: tuple
    freqs: tuple
    degenerate: np.ndarray

    @property
    def m(self) -> int:
        return len(self.feature_names)

    def n_bins(self, j: int) -> int:
        return len(self.boundaries[j]) + 1

    def bin_of(self, j: int, values) -> np.ndarray:
        return np.searchsorted(self.boundaries[j], values, side="left")

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.column_stack([self.bin_of(j, X[:, j]) for j in range(self.m)])

    def interval(self, j: int, b: int) -> str:
        name = self.feature_names[j]
        bd = self.boundaries[j]
        if len(bd) == 0:
            return f"{name} = {format_number(self.lo[j][0])}"
        if b == 0:
            return f"{name} <= {format_number(bd[0])}"
        if b == len(bd):
            return f"{name} > {format_number(bd[-1])}"
        return f"{format_number(bd[b - 1])} < {name} <= {format_number(bd[b])}"

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "boundaries": [list(map(float, b)) for b in self.boundaries],
            "lo": [list(map(float, v)) for v in self.lo],
            "hi": [list(map(float, v)) for v in self.hi],
            "freqs": [list(map(float, v)) for v in self.freqs],
            "degenerate": self.degenerate.tolist(),
        }

    @classmethod
    def from_dict(cls, obj) -> "Discretizer":
        return cls(
            tuple(obj["feature_names"]),
            tuple(np.array(b, dtype=float) for b in obj["boundaries"]),
            tuple(np.array(v, dtype=float) for v in obj["lo"]),
            tuple(np.array(v, dtype=float) for v in obj["hi"]),
            tuple(np.array(v, dtype=float) for v in obj["freqs"]),
            np.array(obj["degenerate"], dtype=bool),
        )


def fit_discretizer(d) -> Discretizer:
    X = as_matrix(d)
    n, m = X.shape
    if n < 4:
        raise DataError(f"discretizer needs at least 4 rows, got {n}")
    names = tuple(d.columns) if isinstance(d, Dataset) else tuple(f"x{j}" for j in range(m))
    bounds, los, his, freqs = [], [], [], []
    degenerate = np.zeros(m, dtype=bool)
    for j in range(m):
        col = X[:, j]
        if np.ptp(col) == 0:
            degenerate[j] = True
            bd = np.empty(0)
        else:
            bd = np.unique(np.quantile(col, [0.25, 0.5, 0.75]))
        bins = np.searchsorted(bd, col, side="left")
        nb = len(bd) + 1
        edges = np.concatenate([[col.min()], bd, [col.max()]])
        lo = np.empty(nb)
        hi = np.empty(nb)
        for b in range(nb):
            inside = col[bins == b]
            if inside.size:
                lo[b], hi[b] = inside.min(), inside.max()
            else:
                lo[b], hi[b] = edges[b], edges[b + 1]
        bounds.append(bd)
        los.append(lo)
        his.append(hi)
        freqs.append(np.bincount(bins, minlength=nb) / n)
    return Discretizer(names, tuple(bounds), tuple(los), tuple(his), tuple(freqs), degenerate)


@dataclass(frozen=True)
class NeighborhoodSample:
    Z_binary: np.ndarray
    Z_raw: np.ndarray
    weights: np.ndarray
    f_values: np.ndarray


def default_kernel_width(m: int) -> float:
    return 0.75 * np.sqrt(m)


def sample_neighborhood(x, disc: Discretizer, model, n_samples: int = 100, kernel_width: Optional[float] = None,
                        seed=0) -> NeighborhoodSample:
    """Perturb ``x`` in bin space; row 0 is ``x`` itself.

    ``seed`` may be anything ``numpy.random.default_rng`` accepts.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != disc.m:
        raise DataError(f"instance has shape {x.shape}, discretizer expects {disc.m} features")
    if n_samples < 2:
        raise ConfigError(f"n_samples must be >= 2, got {n_samples}")
    width = default_kernel_width(disc.m) if kernel_width is None else float(kernel_width)
    rng = np.random.default_rng(seed)
    x_bins = disc.transform(x)[0]
    B = np.empty((n_samples, disc.m), dtype=int)
    raw = np.empty((n_samples, disc.m))
    for j in range(disc.m):
        drawn = rng.choice(disc.n_bins(j), size=n_samples, p=disc.freqs[j])
        u = rng.uniform(size=n_samples)
        raw[:, j] = disc.lo[j][drawn] + u * (disc.hi[j][drawn] - disc.lo[j][drawn])
        B[:, j] = drawn
    binary = (B == x_bins).astype(float)
    raw = np.where(binary == 1, x, raw)
    binary[0] = 1.0
    raw[0] = x
    d2 = (1.0 - binary).sum(axis=1)
    weights = np.exp(-d2 / width**2)
    return NeighborhoodSample(binary, raw, weights, model.predict_proba(raw))


@dataclass(frozen=True)
class LocalLinearModel:
    intercept: float
    coefficients: np.ndarray
    selected: tuple
    fidelity: float


def _weighted_ridge(Z, y, w, alpha):
    """Intercept-unpenalized weighted ridge via an augmented least-squares system."""
    wsum = w.sum()
    zbar = w @ Z / wsum
    ybar = w @ y / wsum
    sw = np.sqrt(w)
    A = (Z - zbar) * sw[:, None]
    r = (y - ybar) * sw
    if alpha > 0:
        A = np.vstack([A, np.sqrt(alpha) * np.eye(Z.shape[1])])
        r = np.concatenate([r, np.zeros(Z.shape[1])])
    coef = np.linalg.lstsq(A, r, rcond=None)[0]
    return float(ybar - zbar @ coef), coef


def _weighted_r2(y, pred, w):
    ybar = w @ y / w.sum()
    ss_res = w @ (y - pred) ** 2
    ss_tot = w @ (y - ybar) ** 2
    if ss_tot <= 0:
        return 1.0 if ss_res <= 1e-30 else 0.0
    return float(1 - ss_res / ss_tot)


def fit_local_model(ns: NeighborhoodSample, target_class: int, K: int = 10, ridge_alpha: float = 1.0) -> LocalLinearModel:
    """Top-K features by |coefficient| of a full weighted ridge fit, then refit on those."""
    F = np.atleast_2d(ns.f_values)
    if not 0 <= target_class < F.shape[1]:
        raise DataError(f"target class {target_class} out of range 0..{F.shape[1] - 1}")
    Z = np.asarray(ns.Z_binary, dtype=float)
    if len(np.unique(Z, axis=0)) < 2:
        raise DataError("degenerate neighborhood: every sample equals the instance in bin space")
    y = F[:, target_class]
    w = np.asarray(ns.weights, dtype=float)
    m = Z.shape[1]
    _, full = _weighted_ridge(Z, y, w, ridge_alpha)
    order = np.argsort(-np.abs(full), kind="stable")
    selected = np.sort(order[: min(K, m)])
    intercept, coef_sel = _weighted_ridge(Z[:, selected], y, w, ridge_alpha)
    coef = np.zeros(m)
    coef[selected] = coef_sel
    fidelity = _weighted_r2(y, intercept + Z[:, selected] @ coef_sel, w)
    return LocalLinearModel(intercept, coef, tuple(int(s) for s in selected), fidelity)


@dataclass(frozen=True)
class ExplanationEntry:
    feature: str
    feature_index: int
    interval: str
    importance: float


@dataclass(frozen=True)
class Explanation:
    instance: int
    target_class: int
    probability: float
    entries: tuple
    intercept: float = 0.0
    fidelity: float = 1.0

    def features(self) -> list:
        return [e.feature for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "instance": self.instance,
            "target_class": self.target_class,
            "probability": self.probability,
            "intercept": self.intercept,
            "fidelity": self.fidelity,
            "entries": [
                {"feature": e.feature, "feature_index": e.feature_index, "interval": e.interval,
                 "importance": e.importance}
                for e in self.entries
            ],
        }

    @classmethod
    def from_dict(cls, obj) -> "Explanation":
        return cls(
            int(obj["instance"]),
            int(obj["target_class"]),
            float(obj["probability"]),
            tuple(ExplanationEntry(e["feature"], int(e["feature_index"]), e["interval"], float(e["importance"]))
                  for e in obj["entries"]),
            float(obj.get("intercept", 0.0)),
            float(obj.get("fidelity", 1.0)),
        )

    def to_markdown(self) -> str:
        lines = [
            f"Instance {self.instance}: cluster C{self.target_class} "
            f"(probability {self.probability:.3f}, local fidelity {self.fidelity:.3f})",
            "",
            "| Feature Interval | Feature Importance |",
            "|---|---:|",
        ]
        lines += [f"| {e.interval} | {e.importance:.3f} |" for e in self.entries]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class LimeParams:
    n_samples: int = 100
    K: int = 10
    kernel_width: Optional[float] = None
    ridge_alpha: float = 1.0
    seed: int = 0


def explain_instance(d, model, disc: Discretizer, row: int, target_class: Optional[int] = None,
                     params: LimeParams = LimeParams()) -> Explanation:
    """Explain why ``model`` assigns row ``row`` of ``d`` to ``target_class``.

    ``target_class`` defaults to the model's most probable class. The
    neighborhood generator is seeded by (params.seed, row) so explanations
    do not depend on the order rows are processed in.
    """
    X = as_matrix(d)
    if not 0 <= row < X.shape[0]:
        raise DataError(f"row {row} out of range 0..{X.shape[0] - 1}")
    x = X[row]
    ns = sample_neighborhood(x, disc, model, params.n_samples, params.kernel_width, seed=[params.seed, row])
    k = ns.f_values.shape[1]
    if target_class is None:
        target_class = int(np.argmax(ns.f_values[0]))
    if not 0 <= target_class < k:
        raise DataError(f"target class {target_class} out of range 0..{k - 1}")
    local = fit_local_model(ns, target_class, params.K, params.ridge_alpha)
    x_bins = disc.transform(x)[0]
    sel = sorted(local.selected, key=lambda j: (-abs(local.coefficients[j]), j))
    entries = tuple(
        ExplanationEntry(disc.feature_names[j], int(j), disc.interval(j, int(x_bins[j])), float(local.coefficients[j]))
        for j in sel
    )
    return Explanation(int(row), int(target_class), float(ns.f_values[0, target_class]), entries,
                       local.intercept, local.fidelity)


def explanation_stability(d, model, disc: Discretizer, row: int, seeds=range(10), top: int = 5,
                          params: LimeParams = LimeParams()) -> float:
    """Mean pairwise Jaccard overlap of the top features across seeds."""
    sets = []
    for s in seeds:
        p = LimeParams(params.n_samples, params.K, params.kernel_width, params.ridge_alpha, s)
        e = explain_instance(d, model, disc, row, params=p)
        sets.append(set(e.features()[:top]))
    scores = [len(a & b) / len(a | b) for i, a in enumerate(sets) for b in sets[i + 1:] if a | b]
    return float(np.mean(scores)) if scores else 1.0


def explanations_to_dict(explanations, extra: Optional[dict] = None) -> dict:
    out = {"schema": SCHEMA, "schema_version": SCHEMA_VERSION}
    out.update(extra or {})
    out["explanations"] = [e.to_dict() for e in explanations]
    return out


def explanations_from_dict(obj) -> list:
    check_schema(obj, SCHEMA, SCHEMA_VERSION)
    return [Explanation.from_dict(e) for e in obj["explanations"]]


def save_explanations(path, explanations, extra: Optional[dict] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(explanations_to_dict(explanations, extra), fh, indent=2)


def load_explanations(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return explanations_from_dict(json.load(fh))
