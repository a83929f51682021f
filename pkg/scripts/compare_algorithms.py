"""Score the four clustering algorithms on synthetic blobs, one table row each.

    python3 scripts/compare_algorithms.py --noise 45 --standardize
"""

import argparse
import time

from explainit.cluster import fit
from explainit.dataset import pairwise_distances, standardize
from explainit.synth import BlobSpec, gen_blobs
from explainit.validity import contingency_table, external_metrics, render_markdown, silhouette_score

LABELS = {"kmeans": "KMeans", "ward": "Agglomerative_Ward", "single": "Agglomerative_Single", "birch": "Birch"}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n-per-cluster", type=int, default=200)
    p.add_argument("--informative", type=int, default=5)
    p.add_argument("--noise", type=int, default=5)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--standardize", action="store_true")
    args = p.parse_args()

    spec = BlobSpec(args.n_per_cluster, args.k, args.informative, args.noise, args.separation, seed=args.seed)
    d, y = gen_blobs(spec)
    space = standardize(d)[0] if args.standardize else d
    dm = pairwise_distances(space)
    rows = {}
    for algo in ("kmeans", "birch", "ward", "single"):
        t = time.perf_counter()
        r = fit(space, algo, args.k, seed=args.seed)
        elapsed = time.perf_counter() - t
        rep = external_metrics(contingency_table(y, r.assignments)).with_silhouette(silhouette_score(dm, r.assignments))
        rows[LABELS[algo]] = rep.to_dict()
        print(f"{LABELS[algo]:>22}: {elapsed:.2f} s")
    print()
    print(render_markdown(rows, f"<!-- {spec} standardize={args.standardize} -->"))


if __name__ == "__main__":
    main()
