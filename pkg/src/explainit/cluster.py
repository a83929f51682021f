"""K-Means, agglomerative (ward / single) and BIRCH clustering.

All fits are deterministic given data, parameters and seed. Cluster ids
are canonicalized so that cluster 0 contains row 0, cluster 1 contains the
first row not in cluster 0, and so on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .dataset import as_matrix
from .errors import ConfigError, SchemaError

TIE_TOL = 1e-12
SCHEMA = "explainit.clustering"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ClusteringResult:
    assignments: np.ndarray
    k: int
    algorithm: str
    params: dict = field(default_factory=dict)
    centroids: Optional[np.ndarray] = None
    seed: Optional[int] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=int).copy()
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)
        if a.ndim != 1:
            raise ValueError("assignments must be 1-D")
        present = np.unique(a)
        if len(present) != self.k or (self.k and (present[0] != 0 or present[-1] != self.k - 1)):
            raise ValueError(f"assignments must use every id in 0..{self.k - 1}")
        if self.centroids is not None:
            c = np.array(self.centroids, dtype=float)
            c.setflags(write=False)
            object.__setattr__(self, "centroids", c)

    @property
    def n(self) -> int:
        return len(self.assignments)

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "schema_version": SCHEMA_VERSION,
            "algorithm": self.algorithm,
            "params": self.params,
            "seed": self.seed,
            "k": self.k,
            "assignments": self.assignments.tolist(),
            "centroids": None if self.centroids is None else self.centroids.tolist(),
        }

    @classmethod
    def from_dict(cls, obj) -> "ClusteringResult":
        check_schema(obj, SCHEMA, SCHEMA_VERSION)
        c = obj.get("centroids")
        return cls(
            np.array(obj["assignments"], dtype=int),
            int(obj["k"]),
            obj["algorithm"],
            dict(obj.get("params") or {}),
            None if c is None else np.array(c, dtype=float),
            obj.get("seed"),
        )

    def to_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)

    @classmethod
    def from_json(cls, path) -> "ClusteringResult":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def check_schema(obj, name, version):
    found = (obj.get("schema"), obj.get("schema_version")) if isinstance(obj, dict) else (None, None)
    if found != (name, version):
        raise SchemaError(f"{name} v{version}", f"{found[0]} v{found[1]}")


def canonical_labels(labels) -> np.ndarray:
    """Relabel so that ids appear in order of first occurrence."""
    labels = np.asarray(labels)
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inv.reshape(-1)]


def _check_k(k, n):
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ConfigError(f"k must be a positive integer, got {k!r}")
    if k > n:
        raise ConfigError(f"k = {k} exceeds the number of rows n = {n}")


# ---------------------------------------------------------------- K-Means


def _kmeanspp(X, k, rng):
    """Greedy k-means++: D^2-sample several candidates per step, keep the best."""
    n = X.shape[0]
    trials = 2 + int(np.log(k))
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    chosen = [first]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            cand = rng.choice(n, size=trials, p=d2 / total)
        else:
            # every point coincides with a chosen center
            cand = rng.choice(np.setdiff1d(np.arange(n), chosen), size=1)
        cand_d2 = np.minimum(d2[None, :], _sq_dists(X[cand], X).reshape(len(cand), n))
        best = int(np.argmin(cand_d2.sum(axis=1)))
        idx = int(cand[best])
        chosen.append(idx)
        centers[c] = X[idx]
        d2 = cand_d2[best]
    return centers


def _sq_dists(X, C):
    # exact per-pair differences; the expanded-norm trick loses ~1e-7 relative
    return ((X[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)


def kmeans_fit(d, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-4) -> ClusteringResult:
    """Lloyd iterations from a k-means++ start.

    Stops when no centroid moves more than ``tol`` (Euclidean) or after
    ``max_iter`` iterations. An emptied cluster is re-seeded with the point
    farthest from its current centroid.
    """
    X = as_matrix(d)
    n = X.shape[0]
    _check_k(k, n)
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(X, k, rng)
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        D2 = _sq_dists(X, centers)
        labels = D2.argmin(axis=1)
        cost = D2[np.arange(n), labels]
        labels, cost = _repair_empty(X, labels, cost, centers, k)
        history.append(float(cost.sum()))
        new = np.array([X[labels == c].mean(axis=0) for c in range(k)])
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if shift < tol:
            break
    D2 = _sq_dists(X, centers)
    labels = D2.argmin(axis=1)
    cost = D2[np.arange(n), labels]
    labels, cost = _repair_empty(X, labels, cost, centers, k)
    inertia = float(cost.sum())
    history.append(inertia)
    canon = canonical_labels(labels)
    return ClusteringResult(
        canon,
        k,
        "kmeans",
        {"k": int(k), "max_iter": int(max_iter), "tol": float(tol)},
        np.array([X[canon == c].mean(axis=0) for c in range(k)]),
        seed,
        {"inertia": inertia, "inertia_history": history, "n_iter": n_iter},
    )


def _repair_empty(X, labels, cost, centers, k):
    labels = labels.copy()
    cost = cost.copy()
    counts = np.bincount(labels, minlength=k)
    for c in np.flatnonzero(counts == 0):
        movable = counts[labels] > 1
        cand = np.flatnonzero(movable)
        far = cand[np.argmax(cost[cand])]
        counts[labels[far]] -= 1
        counts[c] += 1
        labels[far] = c
        cost[far] = 0.0
        centers[c] = X[far]
    return labels, cost


# ---------------------------------------------------------- agglomerative


def _initial_dissimilarity(X, linkage, weights):
    d2 = squareform(pdist(X, metric="sqeuclidean"))
    if linkage == "single":
        return np.sqrt(d2)
    # ward merge cost: n_a n_b / (n_a + n_b) * ||c_a - c_b||^2, i.e. d^2 / 2 for singletons
    w = weights
    return (w[:, None] * w[None, :]) / (w[:, None] + w[None, :]) * d2


def _agglomerate(X, k, linkage, weights=None):
    """Greedy bottom-up merging down to ``k`` clusters.

    Each cluster is identified by its smallest member index and kept in
    that row of the dissimilarity matrix. Ties within ``TIE_TOL`` go to the
    lexicographically smallest (min-id, max-id) pair. Returns per-row
    cluster ids (the identifying row index).
    """
    n = X.shape[0]
    sizes = np.ones(n) if weights is None else np.asarray(weights, dtype=float).copy()
    labels = np.arange(n)
    if k >= n:
        return labels
    D = _initial_dissimilarity(X, linkage, sizes)
    inf = np.inf
    # only the strict upper triangle is consulted
    D[np.tril_indices(n)] = inf
    active = np.ones(n, dtype=bool)
    rowarg = D.argmin(axis=1)
    rowmin = D[np.arange(n), rowarg]
    cols = np.arange(n)

    for _ in range(n - k):
        cutoff = rowmin.min() + TIE_TOL
        i = int(np.flatnonzero(rowmin <= cutoff)[0])
        j = int(np.flatnonzero(D[i] <= cutoff)[0])
        ni, nj = sizes[i], sizes[j]
        # dissimilarities from every cluster to i and to j
        di = np.where(cols < i, D[:, i], D[i, :])
        dj = np.where(cols < j, D[:, j], D[j, :])
        if linkage == "single":
            new = np.minimum(di, dj)
        else:
            nk = sizes
            with np.errstate(invalid="ignore"):
                new = ((nk + ni) * di + (nk + nj) * dj - nk * D[i, j]) / (nk + ni + nj)
        new[~active] = inf
        new[i] = new[j] = inf
        active[j] = False
        D[j, :] = inf
        D[:, j] = inf
        rowmin[j] = inf
        labels[labels == j] = i
        sizes[i] = ni + nj
        lower = cols < i
        D[lower, i] = new[lower]
        D[i, i + 1 :] = new[i + 1 :]
        # a row's cached minimum stays exact unless it pointed at i or j
        stale = active & ((rowarg == i) | (rowarg == j))
        stale[i] = True
        rows = np.flatnonzero(stale)
        if rows.size:
            rowarg[rows] = D[rows].argmin(axis=1)
            rowmin[rows] = D[rows, rowarg[rows]]
        better = active & lower & ~stale & (new < rowmin)
        rowarg[better] = i
        rowmin[better] = new[better]
    return labels


def agglomerative_fit(d, k: int, linkage: str = "ward") -> ClusteringResult:
    """Bottom-up merging from singletons until ``k`` clusters remain.

    ``ward`` uses the Lance-Williams recurrence on merge costs (singleton
    pairs start at squared distance / 2); ``single`` uses the minimum
    inter-set Euclidean distance.
    """
    if linkage not in ("ward", "single"):
        raise ConfigError(f"unknown linkage {linkage!r}")
    X = as_matrix(d)
    _check_k(k, X.shape[0])
    labels = canonical_labels(_agglomerate(X, k, linkage))
    return ClusteringResult(labels, k, f"agglomerative_{linkage}", {"k": int(k), "linkage": linkage})


# ------------------------------------------------------------------ BIRCH


class CfEntry:
    """Clustering feature (N, LS, SS) of a set of points.

    Leaf entries also remember which rows they absorbed.
    """

    __slots__ = ("N", "LS", "SS", "child", "rows")

    def __init__(self, N, LS, SS, child=None, rows=None):
        self.N = N
        self.LS = LS
        self.SS = SS
        self.child = child
        self.rows = rows

    @classmethod
    def from_point(cls, x, row=None):
        x = np.asarray(x, dtype=float)
        return cls(1, x.copy(), float(x @ x), rows=None if row is None else [row])

    @property
    def centroid(self):
        return self.LS / self.N

    @property
    def radius(self) -> float:
        c = self.centroid
        return float(np.sqrt(max(self.SS / self.N - c @ c, 0.0)))

    def merge(self, other: "CfEntry") -> "CfEntry":
        rows = None
        if self.rows is not None or other.rows is not None:
            rows = (self.rows or []) + (other.rows or [])
        return CfEntry(self.N + other.N, self.LS + other.LS, self.SS + other.SS, rows=rows)

    def absorb(self, other: "CfEntry") -> None:
        self.N += other.N
        self.LS = self.LS + other.LS
        self.SS += other.SS
        if other.rows is not None:
            self.rows = (self.rows or []) + other.rows

    def radius_with_point(self, x) -> float:
        # sum of squared deviations updated incrementally; exact for repeated points
        c = self.centroid
        ssd = max(self.SS - (self.LS @ self.LS) / self.N, 0.0)
        dx = x - c
        ssd += self.N / (self.N + 1) * float(dx @ dx)
        return float(np.sqrt(ssd / (self.N + 1)))

    def accepts(self, x, threshold: float) -> bool:
        """Radius test with a rounding allowance, so repeats of a point merge at threshold 0."""
        r = self.radius_with_point(x)
        slack = 1e-12 * (self.SS / self.N + float(x @ x))
        return r * r <= threshold * threshold + slack


class _Node:
    __slots__ = ("entries", "leaf")

    def __init__(self, leaf):
        self.entries = []
        self.leaf = leaf


def _closest(entries, x):
    C = np.array([e.centroid for e in entries])
    d2 = ((C - x) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def _split(node, branching_factor):
    """Split an overfull node around its two farthest entries."""
    C = np.array([e.centroid for e in node.entries])
    d2 = ((C[:, None, :] - C[None, :, :]) ** 2).sum(axis=2)
    a, b = np.unravel_index(int(np.argmax(d2)), d2.shape)
    if a == b:  # all centroids coincide: seed the halves with the first and last entries
        a, b = 0, len(node.entries) - 1
    left, right = _Node(node.leaf), _Node(node.leaf)
    for idx, e in enumerate(node.entries):
        if idx == a:
            left.entries.append(e)
        elif idx == b:
            right.entries.append(e)
        elif d2[idx, a] <= d2[idx, b]:
            left.entries.append(e)
        else:
            right.entries.append(e)
    return left, right


def _summary(node):
    total = None
    for e in node.entries:
        part = CfEntry(e.N, e.LS, e.SS)
        total = part if total is None else total.merge(part)
    total.child = node
    return total


class CfTree:
    """Height-balanced CF-tree built by single-pass insertion."""

    def __init__(self, threshold: float, branching_factor: int):
        self.threshold = threshold
        self.branching_factor = branching_factor
        self.root = _Node(leaf=True)

    def insert(self, x, row=None) -> None:
        split = self._insert(self.root, np.asarray(x, dtype=float), row)
        if split is not None:
            root = _Node(leaf=False)
            root.entries = [_summary(split[0]), _summary(split[1])]
            self.root = root

    def _insert(self, node, x, row):
        if node.leaf:
            if node.entries:
                i = _closest(node.entries, x)
                e = node.entries[i]
                if e.accepts(x, self.threshold):
                    e.absorb(CfEntry.from_point(x, row))
                    return None
            node.entries.append(CfEntry.from_point(x, row))
        else:
            i = _closest(node.entries, x)
            e = node.entries[i]
            split = self._insert(e.child, x, row)
            if split is None:
                e.absorb(CfEntry.from_point(x))
                return None
            node.entries[i : i + 1] = [_summary(split[0]), _summary(split[1])]
        if len(node.entries) > self.branching_factor:
            return _split(node, self.branching_factor)
        return None

    def leaf_entries(self) -> list:
        out = []

        def walk(node):
            if node.leaf:
                out.extend(node.entries)
            else:
                for e in node.entries:
                    walk(e.child)

        walk(self.root)
        return out


def birch_fit(d, threshold: float = 0.5, branching_factor: int = 50, k: int = 3) -> ClusteringResult:
    """BIRCH: CF-tree summarization followed by weighted ward on leaf centroids."""
    X = as_matrix(d)
    n = X.shape[0]
    _check_k(k, n)
    if threshold < 0:
        raise ConfigError(f"threshold must be >= 0, got {threshold}")
    if branching_factor < 2:
        raise ConfigError(f"branching_factor must be >= 2, got {branching_factor}")
    tree = CfTree(threshold, branching_factor)
    for i, x in enumerate(X):
        tree.insert(x, i)
    leaves = tree.leaf_entries()
    if k > len(leaves):
        raise ConfigError(
            f"k = {k} exceeds the {len(leaves)} leaf entries of the CF-tree; lower the threshold"
        )
    C = np.array([e.centroid for e in leaves])
    weights = np.array([e.N for e in leaves], dtype=float)
    entry_labels = _agglomerate(C, k, "ward", weights)
    labels = np.empty(n, dtype=int)
    for e, lab in zip(leaves, entry_labels):
        labels[e.rows] = lab
    canon = canonical_labels(labels)
    return ClusteringResult(
        canon,
        k,
        "birch",
        {"k": int(k), "threshold": float(threshold), "branching_factor": int(branching_factor)},
        np.array([X[canon == c].mean(axis=0) for c in range(k)]),
        None,
        {"n_leaf_entries": len(leaves)},
    )


ALGORITHMS = ("kmeans", "ward", "single", "birch")


def fit(d, algorithm: str, k: int, seed: int = 0, **params) -> ClusteringResult:
    """Dispatch by algorithm name (kmeans | ward | single | birch)."""
    if algorithm == "kmeans":
        return kmeans_fit(d, k, seed=seed, **params)
    if algorithm in ("ward", "single"):
        return agglomerative_fit(d, k, linkage=algorithm)
    if algorithm == "birch":
        return birch_fit(d, k=k, **params)
    raise ConfigError(f"unknown clustering algorithm {algorithm!r}; choose from {ALGORITHMS}")
