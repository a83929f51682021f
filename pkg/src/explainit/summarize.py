"""Cluster-level aggregation of instance explanations, plus composition and
per-cluster feature distribution tables."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .cluster import ClusteringResult
from .dataset import Dataset
from .errors import DataError
from .explain import Discretizer, Explanation, LimeParams, explain_instance, format_number


@dataclass(frozen=True)
class ExplanationSet:
    explanations: tuple
    assignments: np.ndarray
    feature_names: tuple

    def __post_init__(self):
        for e in self.explanations:
            if e.target_class != int(self.assignments[e.instance]):
                raise DataError(
                    f"explanation of row {e.instance} targets cluster {e.target_class}, "
                    f"but the row is assigned to {int(self.assignments[e.instance])}"
                )

    def by_cluster(self) -> dict:
        groups = defaultdict(list)
        for e in self.explanations:
            groups[e.target_class].append(e)
        return dict(sorted(groups.items()))


def explain_cluster_members(d: Dataset, model, disc: Discretizer, clustering: ClusteringResult,
                            params: LimeParams = LimeParams(), sample_size: Optional[int] = None,
                            seed: int = 0) -> ExplanationSet:
    """Explain every row (or ``sample_size`` seeded rows per cluster) toward its own cluster."""
    if d.n != clustering.n:
        raise DataError(f"dataset has {d.n} rows but clustering has {clustering.n}")
    if sample_size is None:
        rows = np.arange(d.n)
    else:
        rng = np.random.default_rng(seed)
        picked = []
        for c in range(clustering.k):
            members = clustering.members(c)
            take = min(sample_size, len(members))
            picked.extend(rng.choice(members, size=take, replace=False).tolist())
        rows = np.sort(np.array(picked, dtype=int))
    exps = tuple(
        explain_instance(d, model, disc, int(r), int(clustering.assignments[r]), params) for r in rows
    )
    return ExplanationSet(exps, clustering.assignments, tuple(d.columns))


@dataclass(frozen=True)
class ClusterExplanationSummary:
    cluster: int
    ranking: tuple  # (feature_index, feature_name, popularity), most popular first
    member_count: int

    def popularity_of(self, feature: str) -> float:
        for _, name, p in self.ranking:
            if name == feature:
                return p
        return 0.0

    def rank_of(self, feature: str) -> Optional[int]:
        for r, (_, name, _) in enumerate(self.ranking, start=1):
            if name == feature:
                return r
        return None

    def to_dict(self) -> dict:
        return {
            "cluster": self.cluster,
            "member_count": self.member_count,
            "ranking": [{"rank": r, "feature": n, "feature_index": j, "popularity": p}
                        for r, (j, n, p) in enumerate(self.ranking, start=1)],
        }

    def to_markdown(self, top_n: int = 30) -> str:
        lines = [f"Cluster C{self.cluster} ({self.member_count} explained members)", "",
                 "| Rank | Feature Name | Popularity |", "|---:|---|---:|"]
        for r, (_, name, p) in enumerate(self.ranking[:top_n], start=1):
            lines.append(f"| {r} | {name} | {p:.3f} |")
        return "\n".join(lines) + "\n"


def feature_popularity(es: ExplanationSet, cluster: int, weighted: bool = False) -> ClusterExplanationSummary:
    """Rank features by how many member explanations list them.

    Popularity is the fraction of the cluster's explanations whose top-K
    contains the feature; with ``weighted`` it is the mean |importance|
    instead. Features never listed are left out of the ranking. Ties go to
    the lower feature index.
    """
    groups = es.by_cluster()
    if cluster not in groups:
        raise DataError(f"no explanations for cluster {cluster}")
    members = groups[cluster]
    score = defaultdict(float)
    for e in members:
        for entry in e.entries:
            score[entry.feature_index] += abs(entry.importance) if weighted else 1.0
    ranking = sorted(((j, es.feature_names[j], s / len(members)) for j, s in score.items()),
                     key=lambda t: (-t[2], t[0]))
    return ClusterExplanationSummary(int(cluster), tuple(ranking), len(members))


@dataclass(frozen=True)
class IntersectionRow:
    feature: str
    rank_in_a: int
    rank_in_b: int


def popularity_intersection(a: ClusterExplanationSummary, b: ClusterExplanationSummary,
                            top_n: int = 30) -> list:
    """Features in both top-``top_n`` rankings with their 1-based ranks, ordered by rank in ``a``."""
    rank_b = {name: r for r, (_, name, _) in enumerate(b.ranking[:top_n], start=1)}
    return [IntersectionRow(name, r, rank_b[name])
            for r, (_, name, _) in enumerate(a.ranking[:top_n], start=1) if name in rank_b]


def intersection_markdown(rows, a: int, b: int) -> str:
    lines = [f"| Ranking in C{a} | Feature Name | Ranking in C{b} |", "|:---:|:---:|:---:|"]
    lines += [f"| {r.rank_in_a} | {r.feature} | {r.rank_in_b} |" for r in rows]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CompositionTable:
    classes: tuple
    counts: np.ndarray  # clusters x classes

    @property
    def fractions(self) -> np.ndarray:
        return self.counts / self.counts.sum(axis=1, keepdims=True)

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "clusters": [
                {"cluster": c, "size": int(row.sum()),
                 "counts": dict(zip(self.classes, map(int, row))),
                 "fractions": dict(zip(self.classes, map(float, frac)))}
                for c, (row, frac) in enumerate(zip(self.counts, self.fractions))
            ],
        }

    def to_markdown(self) -> str:
        lines = ["| cluster | " + " | ".join(self.classes) + " | size |",
                 "|---|" + "---:|" * (len(self.classes) + 1)]
        for c, (row, frac) in enumerate(zip(self.counts, self.fractions)):
            cells = [f"{int(n)} ({f:.1%})" for n, f in zip(row, frac)]
            lines.append(f"| C{c} | " + " | ".join(cells) + f" | {int(row.sum())} |")
        return "\n".join(lines) + "\n"


def _class_order(labels):
    names = [q for q in ("LD", "SD", "HD") if q in labels]
    if len(names) == len(set(labels)):
        return tuple(names)
    return tuple(sorted(set(labels)))


def cluster_composition(clustering: ClusteringResult, ground_truth) -> CompositionTable:
    """Histogram of true classes inside each cluster."""
    if ground_truth is None:
        raise DataError("cluster composition needs ground-truth labels")
    gt = [str(g) for g in ground_truth]
    if len(gt) != clustering.n:
        raise DataError(f"{len(gt)} ground-truth labels for {clustering.n} rows")
    classes = _class_order(gt)
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((clustering.k, len(classes)), dtype=np.int64)
    for a, g in zip(clustering.assignments, gt):
        counts[a, index[g]] += 1
    return CompositionTable(classes, counts)


@dataclass(frozen=True)
class DistributionTable:
    feature: str
    quantiles: tuple
    values: np.ndarray  # clusters x quantiles
    sizes: tuple

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "quantiles": list(self.quantiles),
            "clusters": [{"cluster": c, "size": s, "values": list(map(float, v))}
                         for c, (s, v) in enumerate(zip(self.sizes, self.values))],
        }

    def to_markdown(self) -> str:
        head = " | ".join(f"q{q:g}" for q in self.quantiles)
        lines = [f"Distribution of {self.feature} per cluster", "",
                 f"| cluster | size | {head} |", "|---|---:|" + "---:|" * len(self.quantiles)]
        for c, (s, v) in enumerate(zip(self.sizes, self.values)):
            lines.append(f"| C{c} | {s} | " + " | ".join(format_number(x) for x in v) + " |")
        return "\n".join(lines) + "\n"


def feature_distribution_report(d: Dataset, clustering: ClusteringResult, feature: str,
                                quantiles=(0.05, 0.25, 0.5, 0.75, 0.95)) -> DistributionTable:
    """Per-cluster empirical quantiles (linear interpolation) of one feature."""
    j = d.column_index(feature)
    if d.n != clustering.n:
        raise DataError(f"dataset has {d.n} rows but clustering has {clustering.n}")
    qs = tuple(float(q) for q in quantiles)
    if any(not 0 <= q <= 1 for q in qs):
        raise DataError("quantiles must lie in [0, 1]")
    col = d.values[:, j]
    vals, sizes = [], []
    for c in range(clustering.k):
        v = col[clustering.assignments == c]
        vals.append(np.quantile(v, qs))
        sizes.append(int(v.size))
    return DistributionTable(feature, qs, np.array(vals), tuple(sizes))
