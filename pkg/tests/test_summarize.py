import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from explainit.cluster import ClusteringResult, agglomerative_fit
from explainit.dataset import Dataset
from explainit.errors import DataError
from explainit.explain import Explanation, ExplanationEntry, LimeParams, fit_discretizer
from explainit.model import multiclass_train
from explainit.summarize import (ExplanationSet, cluster_composition, explain_cluster_members,
                                 feature_distribution_report, feature_popularity, intersection_markdown,
                                 popularity_intersection)
from explainit.synth import BlobSpec, gen_blobs
from explainit.validity import adjusted_rand, contingency_table

NAMES = tuple(f"f{j}" for j in range(12))


def expl(row, cluster, feats):
    entries = tuple(ExplanationEntry(NAMES[j], j, f"{NAMES[j]} > 0", 1.0 / (i + 1)) for i, j in enumerate(feats))
    return Explanation(row, cluster, 0.9, entries)


def exp_set(specs, assignments):
    return ExplanationSet(tuple(expl(r, c, f) for r, c, f in specs), np.asarray(assignments), NAMES)


@pytest.fixture(scope="module")
def six_rows():
    X = np.array([[0, 0], [0.2, 0.1], [0.1, 0.3], [5, 5], [5.2, 5.1], [5.1, 4.8]])
    d = Dataset(["a", "b"], X, ["LD", "LD", "LD", "HD", "HD", "HD"])
    clustering = ClusteringResult(np.array([0, 0, 0, 1, 1, 1]), 2, "manual")
    model = multiclass_train(d, clustering.assignments)
    return d, clustering, model, fit_discretizer(d)


class TestExplainMembers:
    def test_full_mode(self, six_rows):
        d, clustering, model, disc = six_rows
        es = explain_cluster_members(d, model, disc, clustering, LimeParams(K=2))
        assert len(es.explanations) == 6
        groups = es.by_cluster()
        assert sorted(groups) == [0, 1] and [len(v) for v in groups.values()] == [3, 3]
        for e in es.explanations:
            assert e.target_class == clustering.assignments[e.instance]

    def test_sample_mode_deterministic(self, six_rows):
        d, clustering, model, disc = six_rows
        a = explain_cluster_members(d, model, disc, clustering, LimeParams(K=2), sample_size=2, seed=5)
        b = explain_cluster_members(d, model, disc, clustering, LimeParams(K=2), sample_size=2, seed=5)
        assert [e.instance for e in a.explanations] == [e.instance for e in b.explanations]
        assert len(a.explanations) == 4

    def test_shape_mismatch(self, six_rows):
        d, _, model, disc = six_rows
        with pytest.raises(DataError):
            explain_cluster_members(d, model, disc, ClusteringResult(np.array([0, 1]), 2, "x"))

    def test_wrong_target_rejected(self):
        with pytest.raises(DataError):
            exp_set([(0, 1, [0])], [0, 1])


class TestPopularity:
    def test_fraction(self):
        specs = [(r, 0, [0, 1] if r < 5 else [1, 2]) for r in range(10)]
        s = feature_popularity(exp_set(specs, [0] * 10), 0)
        assert s.popularity_of("f0") == 0.5 and s.popularity_of("f1") == 1.0
        assert s.member_count == 10 and s.rank_of("f1") == 1

    def test_identical_members(self):
        specs = [(r, 0, [3, 1, 4]) for r in range(4)]
        s = feature_popularity(exp_set(specs, [0] * 4), 0)
        assert [n for _, n, _ in s.ranking] == ["f1", "f3", "f4"]
        assert all(p == 1.0 for _, _, p in s.ranking)
        assert s.popularity_of("f0") == 0.0

    def test_unknown_cluster(self):
        with pytest.raises(DataError):
            feature_popularity(exp_set([(0, 0, [1])], [0, 1]), 1)

    def test_weighted(self):
        s = feature_popularity(exp_set([(0, 0, [2, 5]), (1, 0, [5])], [0, 0]), 0, weighted=True)
        assert s.popularity_of("f5") == pytest.approx((0.5 + 1.0) / 2)

    @given(st.lists(st.lists(st.integers(0, 11), min_size=1, max_size=5, unique=True), min_size=1, max_size=12),
           st.randoms())
    def test_order_invariant_and_sorted(self, feats, rnd):
        specs = [(r, 0, f) for r, f in enumerate(feats)]
        s = feature_popularity(exp_set(specs, [0] * len(feats)), 0)
        rnd.shuffle(specs)
        t = feature_popularity(exp_set(specs, [0] * len(feats)), 0)
        assert s.ranking == t.ranking
        keys = [(-p, j) for j, _, p in s.ranking]
        assert keys == sorted(keys)
        assert all(0 < p <= 1 for _, _, p in s.ranking)


class TestIntersection:
    def test_disjoint(self):
        a = feature_popularity(exp_set([(0, 0, [0, 1])], [0, 1]), 0)
        b = feature_popularity(exp_set([(1, 1, [2, 3])], [0, 1]), 1)
        assert popularity_intersection(a, b) == []

    def test_self(self):
        specs = [(r, 0, list(range(r % 12, r % 12 + 1))) for r in range(12)]
        s = feature_popularity(exp_set(specs, [0] * 12), 0)
        rows = popularity_intersection(s, s, top_n=5)
        assert len(rows) == min(5, len(s.ranking))
        assert all(r.rank_in_a == r.rank_in_b for r in rows)

    def test_ranks_and_markdown(self):
        es = exp_set([(0, 0, [4, 0, 1]), (1, 0, [4, 0]), (2, 1, [1, 7, 4]), (3, 1, [7, 1])], [0, 0, 1, 1])
        a, b = feature_popularity(es, 0), feature_popularity(es, 1)
        rows = popularity_intersection(a, b)
        # C0 ranks f0, f4 (both 1.0, index tie-break) then f1; C1 ranks f1, f7, f4
        assert [(r.feature, r.rank_in_a, r.rank_in_b) for r in rows] == [("f4", 2, 3), ("f1", 3, 1)]
        md = intersection_markdown(rows, 0, 1)
        assert md.splitlines()[0] == "| Ranking in C0 | Feature Name | Ranking in C1 |"
        assert len(md.splitlines()) == 2 + len(rows)


class TestComposition:
    def test_pure(self, six_rows):
        d, clustering, *_ = six_rows
        t = cluster_composition(clustering, d.ground_truth)
        assert t.classes == ("LD", "HD")
        assert all(np.count_nonzero(row) == 1 for row in t.counts)
        np.testing.assert_allclose(t.fractions.sum(axis=1), 1.0)
        assert t.counts.sum() == 6

    def test_missing_ground_truth(self):
        with pytest.raises(DataError):
            cluster_composition(ClusteringResult(np.array([0, 1]), 2, "x"), None)

    def test_blobs_diagonal(self):
        d, y = gen_blobs(BlobSpec(n_per_cluster=30, k=3, informative=3, noise=1, separation=20.0, seed=3))
        clustering = agglomerative_fit(d, 3)
        assert adjusted_rand(contingency_table(y, clustering.assignments)) == 1.0
        t = cluster_composition(clustering, d.ground_truth)
        assert sorted(np.count_nonzero(t.counts, axis=1).tolist()) == [1, 1, 1]
        assert "| C0 |" in t.to_markdown()

    @given(st.lists(st.sampled_from(["LD", "SD", "HD"]), min_size=3, max_size=40), st.integers(0, 100))
    def test_fractions_sum_to_one(self, gt, seed):
        rng = np.random.default_rng(seed)
        a = np.concatenate([[0, 1], rng.integers(0, 2, len(gt) - 2)])
        t = cluster_composition(ClusteringResult(a, 2, "x"), gt)
        np.testing.assert_allclose(t.fractions.sum(axis=1), 1.0, atol=1e-12)
        assert t.counts.sum() == len(gt)


class TestDistribution:
    def test_medians(self):
        d = Dataset(["adt"], np.array([[0.0], [0.0], [10.0], [10.0]]))
        t = feature_distribution_report(d, ClusteringResult(np.array([0, 0, 1, 1]), 2, "x"), "adt", [0.5])
        np.testing.assert_array_equal(t.values[:, 0], [0, 10])

    def test_singleton(self):
        d = Dataset(["adt"], np.array([[3.0], [1.0], [2.0]]))
        t = feature_distribution_report(d, ClusteringResult(np.array([0, 1, 1]), 2, "x"), "adt", [0.5])
        assert t.values[0, 0] == 3.0

    def test_unknown_feature(self, six_rows):
        d, clustering, *_ = six_rows
        with pytest.raises(DataError):
            feature_distribution_report(d, clustering, "nope")

    def test_ordered_means(self):
        rng = np.random.default_rng(0)
        X = np.concatenate([rng.normal(mu, 1, 50) for mu in (2.0, 8.0, 5.0)])[:, None]
        labels = np.repeat([0, 1, 2], 50)
        t = feature_distribution_report(Dataset(["adt"], X), ClusteringResult(labels, 3, "x"), "adt")
        med = t.values[:, t.quantiles.index(0.5)]
        assert med[0] < med[2] < med[1]
        assert "q0.5" in t.to_markdown()
