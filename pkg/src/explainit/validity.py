"""External (ground-truth) and internal clustering validity indices.

Conventions: natural log, 0 log 0 = 0. When a partition has zero entropy
its homogeneity (or completeness) is 1. Chance-corrected scores whose
correction denominator vanishes are only possible for two identical
trivial partitions and are reported as 1.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

from .dataset import encode_labels
from .errors import DataError

METRICS = (
    "adjusted_mutual_info",
    "adjusted_rand",
    "completeness",
    "fowlkes_mallows",
    "homogeneity",
    "silhouette",
    "v_measure",
)


@dataclass(frozen=True)
class ContingencyTable:
    """Counts ``table[i, j]`` of points with label_a == classes_a[i] and label_b == classes_b[j]."""

    table: np.ndarray
    classes_a: tuple = ()
    classes_b: tuple = ()

    @property
    def row_sums(self) -> np.ndarray:
        return self.table.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.table.sum(axis=0)

    @property
    def n(self) -> int:
        return int(self.table.sum())

    @property
    def T(self) -> "ContingencyTable":
        return ContingencyTable(self.table.T.copy(), self.classes_b, self.classes_a)


def contingency_table(labels_a, labels_b) -> ContingencyTable:
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape or a.ndim != 1:
        raise DataError(f"label vectors differ in shape: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise DataError("empty label vectors")
    ca, ia = encode_labels(a)
    cb, ib = encode_labels(b)
    table = np.zeros((len(ca), len(cb)), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return ContingencyTable(table, tuple(ca.tolist()), tuple(cb.tolist()))


@dataclass(frozen=True)
class ValidityReport:
    adjusted_mutual_info: Optional[float] = None
    adjusted_rand: Optional[float] = None
    completeness: Optional[float] = None
    fowlkes_mallows: Optional[float] = None
    homogeneity: Optional[float] = None
    silhouette: Optional[float] = None
    v_measure: Optional[float] = None

    def to_dict(self) -> dict:
        """Metrics that were computed; absent ones are omitted rather than zeroed."""
        return {k: v for k, v in asdict(self).items() if v is not None}

    def with_silhouette(self, s: float) -> "ValidityReport":
        return ValidityReport(**{**asdict(self), "silhouette": float(s)})


def _entropy(counts) -> float:
    counts = np.asarray(counts, dtype=float)
    counts = counts[counts > 0]
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(-(p * np.log(p)).sum())


def _comb2(x):
    x = np.asarray(x, dtype=float)
    return x * (x - 1) / 2


def mutual_info(ct: ContingencyTable) -> float:
    t = ct.table.astype(float)
    n = t.sum()
    a = t.sum(axis=1, keepdims=True)
    b = t.sum(axis=0, keepdims=True)
    nz = t > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(nz, t / n * np.log(n * t / (a * b)), 0.0)
    return max(float(terms.sum()), 0.0)


def expected_mutual_info(ct: ContingencyTable) -> float:
    """E[MI] under the hypergeometric model (random permutation, fixed marginals)."""
    a = ct.row_sums.astype(int)
    b = ct.col_sums.astype(int)
    N = int(a.sum())
    lg = gammaln
    emi = 0.0
    log_n_fact = lg(N + 1)
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - N)
            hi = min(ai, bj)
            if lo > hi:
                continue
            nij = np.arange(lo, hi + 1, dtype=float)
            log_p = (
                lg(ai + 1) + lg(bj + 1) + lg(N - ai + 1) + lg(N - bj + 1)
                - log_n_fact - lg(nij + 1) - lg(ai - nij + 1) - lg(bj - nij + 1)
                - lg(N - ai - bj + nij + 1)
            )
            term = nij / N * np.log(N * nij / (ai * bj))
            emi += float((term * np.exp(log_p)).sum())
    return emi


def adjusted_rand(ct: ContingencyTable) -> float:
    n = ct.n
    sum_ij = _comb2(ct.table).sum()
    sa = _comb2(ct.row_sums).sum()
    sb = _comb2(ct.col_sums).sum()
    if _comb2(n) == 0:
        return 1.0
    expected = sa * sb / _comb2(n)
    max_index = (sa + sb) / 2
    den = max_index - expected
    if den == 0:
        return 1.0
    return float((sum_ij - expected) / den)


def adjusted_mutual_info(ct: ContingencyTable) -> float:
    """AMI normalized by the arithmetic mean of the two entropies."""
    mi = mutual_info(ct)
    emi = expected_mutual_info(ct)
    normalizer = (_entropy(ct.row_sums) + _entropy(ct.col_sums)) / 2
    den = normalizer - emi
    if abs(den) <= 1e-15 * max(1.0, normalizer):
        return 1.0
    return float((mi - emi) / den)


def homogeneity_completeness_v(ct: ContingencyTable):
    """(homogeneity, completeness, v_measure) with labels_a as classes, labels_b as clusters."""
    h_c = _entropy(ct.row_sums)
    h_k = _entropy(ct.col_sums)
    mi = mutual_info(ct)
    # H(C|K) = H(C) - MI
    hom = 1.0 if h_c == 0 else max(0.0, min(1.0, mi / h_c))
    com = 1.0 if h_k == 0 else max(0.0, min(1.0, mi / h_k))
    v = 0.0 if hom + com == 0 else 2 * hom * com / (hom + com)
    return hom, com, v


def fowlkes_mallows(ct: ContingencyTable) -> float:
    tp = _comb2(ct.table).sum()
    same_a = _comb2(ct.row_sums).sum()
    same_b = _comb2(ct.col_sums).sum()
    if same_a == 0 and same_b == 0:
        # both partitions are all-singletons, hence identical
        return 1.0
    if tp == 0:
        return 0.0
    return float(tp / np.sqrt(same_a * same_b))


def external_metrics(ct: ContingencyTable) -> ValidityReport:
    """The six ground-truth metrics; rows of ``ct`` are true classes."""
    if ct.n < 2:
        raise DataError(f"external metrics need n >= 2, got {ct.n}")
    h, c, v = homogeneity_completeness_v(ct)
    return ValidityReport(
        adjusted_mutual_info=adjusted_mutual_info(ct),
        adjusted_rand=adjusted_rand(ct),
        completeness=c,
        fowlkes_mallows=fowlkes_mallows(ct),
        homogeneity=h,
        v_measure=v,
    )


def silhouette_samples(dm, assignments) -> np.ndarray:
    D = np.asarray(dm, dtype=float)
    a_ = np.asarray(assignments)
    n = D.shape[0]
    if D.shape != (n, n) or a_.shape != (n,):
        raise DataError("distance matrix and assignments disagree in size")
    if n < 3:
        raise DataError(f"silhouette needs n >= 3, got {n}")
    if a_.min() < 0:
        raise DataError(f"cluster id out of range: {a_.min()}")
    k = int(a_.max()) + 1
    counts = np.bincount(a_, minlength=k)
    if np.any(counts == 0):
        raise DataError(f"cluster id out of range: ids must be 0..{k - 1} with no gaps")
    if k < 2:
        raise DataError("silhouette needs at least 2 clusters")
    onehot = np.zeros((n, k))
    onehot[np.arange(n), a_] = 1.0
    sums = D @ onehot
    own = counts[a_]
    a = sums[np.arange(n), a_] / np.maximum(own - 1, 1)
    mean_other = sums / counts
    mean_other[np.arange(n), a_] = np.inf
    b = mean_other.min(axis=1)
    m = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(m > 0, (b - a) / m, 0.0)
    s[own == 1] = 0.0
    return s


def silhouette_score(dm, assignments) -> float:
    """Mean silhouette; singleton clusters contribute 0."""
    return float(silhouette_samples(dm, assignments).mean())


def render_markdown(rows: dict, provenance: str = "") -> str:
    """Table with one row per algorithm; the best value of each column in bold."""
    cols = [m for m in METRICS if any(r.get(m) is not None for r in rows.values())]
    best = {}
    for m in cols:
        vals = [r[m] for r in rows.values() if r.get(m) is not None]
        best[m] = max(vals)
    lines = []
    if provenance:
        lines.append(provenance)
    lines.append("| algorithm | " + " | ".join(cols) + " |")
    lines.append("|---|" + "---:|" * len(cols))
    for name, r in rows.items():
        cells = []
        for m in cols:
            v = r.get(m)
            if v is None:
                cells.append("")
            elif v == best[m] and len(rows) > 1:
                cells.append(f"**{v:.6f}**")
            else:
                cells.append(f"{v:.6f}")
        lines.append(f"| {name} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
