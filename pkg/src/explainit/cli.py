"""Command-line entry point and the fused cluster -> surrogate -> explain pipeline.

Exit statuses: 0 success, 2 configuration error, 3 data error,
4 numerical failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import itertools
import json
import os
import platform
import shutil
import sys
import tempfile
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .cluster import ClusteringResult, fit as fit_clustering
from .dataset import Dataset, load_csv, pairwise_distances, standardize, write_csv
from .errors import ConfigError, DataError, ExplainItError, NumericalError
from .explain import (Explanation, LimeParams, explain_instance, explanations_from_dict, explanations_to_dict,
                      fit_discretizer)
from .model import MulticlassSvm, SvmParams, crossval_report, multiclass_train
from .summarize import (ExplanationSet, cluster_composition, explain_cluster_members, feature_distribution_report,
                        feature_popularity, intersection_markdown, popularity_intersection)
from .synth import BlobSpec, gen_blobs
from .validity import ValidityReport, contingency_table, external_metrics, render_markdown, silhouette_score

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3, 4


# ------------------------------------------------------------------ config


@dataclass
class ClusteringConfig:
    algorithm: str = "ward"
    k: int = 3
    max_iter: int = 300
    tol: float = 1e-4
    threshold: float = 0.5
    branching_factor: int = 50

    def fit_params(self) -> dict:
        if self.algorithm == "kmeans":
            return {"max_iter": self.max_iter, "tol": self.tol}
        if self.algorithm == "birch":
            return {"threshold": self.threshold, "branching_factor": self.branching_factor}
        return {}


@dataclass
class SvmConfig:
    kernel: str = "rbf"
    gamma: Optional[float] = None
    C: float = 1.0
    tol: float = 1e-3
    max_passes: int = 10


@dataclass
class LimeConfig:
    n_samples: int = 100
    K: int = 10
    kernel_width: Optional[float] = None
    ridge_alpha: float = 1.0


@dataclass
class ExplainScope:
    scope: str = "all"  # "all" | "sample"
    sample_size: int = 50


@dataclass
class ReportConfig:
    top_n: int = 30
    cv_folds: int = 10
    distribution_feature: Optional[str] = None
    quantiles: list = field(default_factory=lambda: [0.05, 0.25, 0.5, 0.75, 0.95])


@dataclass
class PipelineConfig:
    input: Optional[str] = None
    label_column: Optional[str] = None
    standardize: bool = True
    seed: int = 0
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    lime: LimeConfig = field(default_factory=LimeConfig)
    explain: ExplainScope = field(default_factory=ExplainScope)
    report: ReportConfig = field(default_factory=ReportConfig)

    def validate(self) -> "PipelineConfig":
        if self.clustering.algorithm not in ("kmeans", "ward", "single", "birch"):
            raise ConfigError(f"unknown clustering algorithm {self.clustering.algorithm!r}")
        if self.clustering.k < 2:
            raise ConfigError(f"the surrogate stage needs k >= 2, got {self.clustering.k}")
        if self.explain.scope not in ("all", "sample"):
            raise ConfigError(f"explain.scope must be 'all' or 'sample', got {self.explain.scope!r}")
        if self.report.cv_folds < 2:
            raise ConfigError("report.cv_folds must be >= 2")
        if self.lime.n_samples < 2 or self.lime.K < 1:
            raise ConfigError("lime.n_samples must be >= 2 and lime.K >= 1")
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def svm_params(self) -> SvmParams:
        s = self.svm
        return SvmParams(s.kernel, s.gamma, s.C, s.tol, s.max_passes, self.seed, self.standardize)

    def lime_params(self) -> LimeParams:
        l = self.lime
        return LimeParams(l.n_samples, l.K, l.kernel_width, l.ridge_alpha, self.seed)

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_SECTIONS = {
    "clustering": ClusteringConfig,
    "svm": SvmConfig,
    "lime": LimeConfig,
    "explain": ExplainScope,
    "report": ReportConfig,
}


def _build(cls, obj, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(obj) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    return obj


def config_from_dict(obj) -> PipelineConfig:
    obj = dict(_build(PipelineConfig, obj or {}, "config"))
    for key, cls in _SECTIONS.items():
        if key in obj:
            obj[key] = cls(**_build(cls, obj[key], key))
    try:
        return PipelineConfig(**obj).validate()
    except TypeError as e:
        raise ConfigError(str(e)) from None


def load_config(path) -> PipelineConfig:
    if not os.path.isfile(path):
        raise ConfigError(f"no such config file: {path}")
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        if path.endswith((".yaml", ".yml")):
            import yaml

            obj = yaml.safe_load(text)
        else:
            obj = json.loads(text)
    except Exception as e:  # malformed file of either flavor
        raise ConfigError(f"{path}: cannot parse config: {e}") from None
    cfg = config_from_dict(obj)
    if cfg.input is not None and not os.path.isabs(cfg.input):
        base = os.path.dirname(os.path.abspath(path))
        candidate = os.path.join(base, cfg.input)
        if os.path.exists(candidate) and not os.path.exists(cfg.input):
            cfg.input = candidate
    return cfg


# ------------------------------------------------------------------ stages


class StageError(Exception):
    def __init__(self, stage, exc):
        self.stage = stage
        self.exc = exc
        super().__init__(f"[stage:{stage}] {type(exc).__name__}: {exc}")

    @property
    def exit_code(self) -> int:
        if isinstance(self.exc, ConfigError):
            return EXIT_CONFIG
        if isinstance(self.exc, DataError):
            return EXIT_DATA
        if isinstance(self.exc, (NumericalError, np.linalg.LinAlgError, FloatingPointError)):
            return EXIT_NUMERICAL
        return EXIT_FAILURE


class _stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, typ, exc, tb):
        if exc is not None and not isinstance(exc, StageError) and isinstance(exc, Exception):
            raise StageError(self.name, exc) from exc
        return False


def stage_load(cfg: PipelineConfig) -> Dataset:
    with _stage("ingest"):
        if cfg.input is None:
            raise ConfigError("no input file configured")
        return load_csv(cfg.input, cfg.label_column)


def clustering_space(cfg: PipelineConfig, d: Dataset) -> Dataset:
    return standardize(d)[0] if cfg.standardize else d


def stage_cluster(cfg: PipelineConfig, d: Dataset) -> ClusteringResult:
    with _stage("cluster"):
        c = cfg.clustering
        space = clustering_space(cfg, d)
        r = fit_clustering(space, c.algorithm, c.k, seed=cfg.seed, **c.fit_params())
        params = {**r.params, "algorithm": c.algorithm, "standardize": cfg.standardize}
        return dataclasses.replace(r, params=params)


def stage_validate(cfg: PipelineConfig, d: Dataset, clustering: ClusteringResult) -> ValidityReport:
    with _stage("validate"):
        if clustering.n != d.n:
            raise DataError(f"clustering has {clustering.n} rows, dataset {d.n}")
        report = ValidityReport()
        if d.ground_truth is not None:
            report = external_metrics(contingency_table(list(d.ground_truth), clustering.assignments))
        space = standardize(d)[0] if clustering.params.get("standardize", cfg.standardize) else d
        if clustering.k >= 2 and d.n >= 3:
            report = report.with_silhouette(silhouette_score(pairwise_distances(space), clustering.assignments))
        return report


def stage_model(cfg: PipelineConfig, d: Dataset, clustering: ClusteringResult, cv: bool = True):
    with _stage("model"):
        if clustering.n != d.n:
            raise DataError(f"clustering has {clustering.n} rows, dataset {d.n}")
        params = cfg.svm_params()
        model = multiclass_train(d, clustering.assignments, params, n_classes=clustering.k)
        report = None
        if cv:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                report = crossval_report(d, clustering.assignments, params, cfg.report.cv_folds, cfg.seed)
        return model, report


def stage_explain(cfg: PipelineConfig, d: Dataset, model, clustering: ClusteringResult) -> ExplanationSet:
    with _stage("explain"):
        disc = fit_discretizer(d)
        size = cfg.explain.sample_size if cfg.explain.scope == "sample" else None
        return explain_cluster_members(d, model, disc, clustering, cfg.lime_params(), size, cfg.seed)


def stage_aggregate(cfg: PipelineConfig, d: Dataset, es: ExplanationSet, clustering: ClusteringResult) -> dict:
    """Popularity per cluster, pairwise intersections, composition and a feature distribution."""
    with _stage("aggregate"):
        out = {"popularity": {}, "intersections": {}}
        present = sorted(es.by_cluster())
        for c in present:
            out["popularity"][c] = feature_popularity(es, c)
        for a, b in itertools.combinations(present, 2):
            rows = popularity_intersection(out["popularity"][a], out["popularity"][b], cfg.report.top_n)
            out["intersections"][(a, b)] = rows
        if d.ground_truth is not None:
            out["composition"] = cluster_composition(clustering, d.ground_truth)
        feature = cfg.report.distribution_feature or d.columns[0]
        out["distribution"] = feature_distribution_report(d, clustering, feature, cfg.report.quantiles)
        return out


# ------------------------------------------------------------------ bundle


class Bundle:
    """Writes provenance-stamped JSON and markdown artifacts into one directory."""

    def __init__(self, root, cfg: PipelineConfig):
        self.root = root
        self.cfg = cfg
        self.provenance = {"config_hash": cfg.hash(), "seed": cfg.seed}
        self.files = []

    def json(self, name, obj):
        payload = {**obj, "provenance": self.provenance} if isinstance(obj, dict) else obj
        self._write(name, json.dumps(payload, indent=2) + "\n")

    def markdown(self, name, title, body):
        stamp = f"<!-- config_hash: {self.provenance['config_hash']} seed: {self.provenance['seed']} -->"
        self._write(name, f"{stamp}\n# {title}\n\n{body}")

    def _write(self, name, text):
        with open(os.path.join(self.root, name), "w", encoding="utf-8") as fh:
            fh.write(text)
        self.files.append(name)


def _algorithm_label(clustering: ClusteringResult) -> str:
    return {"kmeans": "KMeans", "birch": "Birch", "agglomerative_ward": "Agglomerative_Ward",
            "agglomerative_single": "Agglomerative_Single"}.get(clustering.algorithm, clustering.algorithm)


def write_bundle(root, cfg: PipelineConfig, d, clustering, validity, model, cv, es, agg) -> list:
    b = Bundle(root, cfg)
    b.json("clustering.json", clustering.to_dict())
    row = {_algorithm_label(clustering): validity.to_dict()}
    b.json("validity.json", {"rows": row})
    b.markdown("validity.md", "Clustering quality", render_markdown(row))
    b.json("model.json", model.to_dict())
    b.json("cv_report.json", {"k_folds": cfg.report.cv_folds, **cv.to_dict()})
    b.markdown("cv_report.md", f"{cfg.report.cv_folds}-fold cross-validated surrogate", cv.to_markdown())
    b.json("explanations.json", explanations_to_dict(es.explanations))
    groups = es.by_cluster()
    for c, members in groups.items():
        first = members[0]
        b.markdown(f"explanation_C{c}_row{first.instance}.md",
                   f"Features for an instance assigned to C{c}", first.to_markdown())
    for c, summary in agg["popularity"].items():
        b.json(f"popularity_C{c}.json", summary.to_dict())
        b.markdown(f"popularity_C{c}.md", f"Most popular features in C{c}", summary.to_markdown(cfg.report.top_n))
    for (ca, cb), rows in agg["intersections"].items():
        b.json(f"intersection_C{ca}_C{cb}.json",
               {"clusters": [ca, cb], "top_n": cfg.report.top_n, "rows": [dataclasses.asdict(r) for r in rows]})
        b.markdown(f"intersection_C{ca}_C{cb}.md", f"Common most popular features in C{ca} and C{cb}",
                   intersection_markdown(rows, ca, cb))
    if "composition" in agg:
        b.json("composition.json", agg["composition"].to_dict())
        b.markdown("composition.md", "Distribution of real labels per cluster", agg["composition"].to_markdown())
    dist = agg["distribution"]
    b.json("distribution.json", dist.to_dict())
    b.markdown("distribution.md", f"{dist.feature} per cluster", dist.to_markdown())
    manifest = {
        "schema": "explainit.manifest",
        "schema_version": 1,
        "config": cfg.to_dict(),
        "config_hash": b.provenance["config_hash"],
        "seeds": {"global": cfg.seed, "clustering": cfg.seed, "svm": cfg.seed, "cv": cfg.seed, "lime": cfg.seed},
        "versions": {"explainit": __version__, "python": platform.python_version(), "numpy": np.__version__},
        "n_rows": d.n,
        "n_features": d.m,
        "files": sorted(b.files) + ["manifest.json"],
    }
    b.json("manifest.json", manifest)
    return sorted(b.files)


@dataclass
class PipelineResult:
    status: int
    out: Optional[str]
    message: str = ""
    files: list = field(default_factory=list)


def run_pipeline(cfg: PipelineConfig, out: str) -> PipelineResult:
    """Run every stage and write the report bundle to ``out``.

    Output is staged in a sibling temporary directory and moved into place
    only on success, so a failed run leaves nothing behind.
    """
    try:
        cfg.validate()
    except ConfigError as e:
        return PipelineResult(EXIT_CONFIG, None, f"[stage:config] {e}")
    out = os.path.abspath(out)
    if os.path.isdir(out) and os.listdir(out) and not os.path.exists(os.path.join(out, "manifest.json")):
        return PipelineResult(EXIT_CONFIG, None, f"[stage:config] {out} exists and is not a report bundle")
    parent = os.path.dirname(out)
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".explainit-", dir=parent)
    try:
        d = stage_load(cfg)
        clustering = stage_cluster(cfg, d)
        validity = stage_validate(cfg, d, clustering)
        model, cv = stage_model(cfg, d, clustering)
        es = stage_explain(cfg, d, model, clustering)
        agg = stage_aggregate(cfg, d, es, clustering)
        with _stage("report"):
            files = write_bundle(tmp, cfg, d, clustering, validity, model, cv, es, agg)
    except StageError as e:
        shutil.rmtree(tmp, ignore_errors=True)
        return PipelineResult(e.exit_code, None, str(e))
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if os.path.exists(out):
        shutil.rmtree(out)
    os.replace(tmp, out)
    return PipelineResult(EXIT_OK, out, f"wrote {len(files) + 1} files to {out}", files)


# --------------------------------------------------------------------- CLI


def _write_json(path, obj):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _read_json(path):
    if not os.path.isfile(path):
        raise DataError(f"no such file: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: invalid JSON: {e}") from None


def _stamp(obj, cfg):
    return {**obj, "provenance": {"config_hash": cfg.hash(), "seed": cfg.seed}}


def _resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "input", None) is not None:
        cfg.input = args.input
    if getattr(args, "label_column", None) is not None:
        cfg.label_column = args.label_column
    if getattr(args, "no_standardize", False):
        cfg.standardize = False
    c = cfg.clustering
    for name in ("algorithm", "k", "threshold", "branching_factor", "max_iter", "tol"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(c, name, v)
    for name, attr in (("svm_C", "C"), ("svm_gamma", "gamma"), ("svm_kernel", "kernel")):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg.svm, attr, v)
    for name, attr in (("n_samples", "n_samples"), ("top_k", "K"), ("kernel_width", "kernel_width")):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg.lime, attr, v)
    if getattr(args, "folds", None) is not None:
        cfg.report.cv_folds = args.folds
    if getattr(args, "top_n", None) is not None:
        cfg.report.top_n = args.top_n
    return cfg.validate()


def cmd_run(args) -> int:
    cfg = _resolve_config(args)
    out = args.out or "explainit-report"
    res = run_pipeline(cfg, out)
    print(res.message, file=sys.stderr if res.status else sys.stdout)
    return res.status


def cmd_synth(args) -> int:
    spec = BlobSpec.from_json(args.spec) if args.spec else BlobSpec()
    overrides = {k: getattr(args, k) for k in ("n_per_cluster", "k", "informative", "noise", "separation", "seed")
                 if getattr(args, k) is not None}
    spec = dataclasses.replace(spec, **overrides)
    d, _ = gen_blobs(spec)
    out = args.out or "synth.csv"
    write_csv(d, out, args.label_column)
    print(f"wrote {d.n} x {d.m} table to {out} (label column {args.label_column!r})")
    return EXIT_OK


def cmd_cluster(args) -> int:
    cfg = _resolve_config(args)
    d = stage_load(cfg)
    r = stage_cluster(cfg, d)
    _write_json(args.out or "clustering.json", _stamp(r.to_dict(), cfg))
    print(f"{r.algorithm}: k={r.k}, sizes={np.bincount(r.assignments).tolist()}")
    return EXIT_OK


def _load_clustering(path) -> ClusteringResult:
    with _stage("load"):
        return ClusteringResult.from_dict(_read_json(path))


def cmd_validate(args) -> int:
    cfg = _resolve_config(args)
    d = stage_load(cfg)
    clustering = _load_clustering(args.clustering)
    report = stage_validate(cfg, d, clustering)
    row = {_algorithm_label(clustering): report.to_dict()}
    _write_json(args.out or "validity.json", _stamp({"rows": row}, cfg))
    print(render_markdown(row), end="")
    return EXIT_OK


def cmd_model(args) -> int:
    cfg = _resolve_config(args)
    d = stage_load(cfg)
    clustering = _load_clustering(args.clustering)
    model, cv = stage_model(cfg, d, clustering, cv=args.cv_report is not None)
    _write_json(args.out or "model.json", _stamp(model.to_dict(), cfg))
    if cv is not None:
        _write_json(args.cv_report, _stamp({"k_folds": cfg.report.cv_folds, **cv.to_dict()}, cfg))
        print(cv.to_markdown(), end="")
    return EXIT_OK


def cmd_explain(args) -> int:
    cfg = _resolve_config(args)
    d = stage_load(cfg)
    with _stage("load"):
        model = MulticlassSvm.from_dict(_read_json(args.model))
    clustering = _load_clustering(args.clustering) if args.clustering else None
    if args.row is not None:
        with _stage("explain"):
            target = None if clustering is None else int(clustering.assignments[args.row])
            exp = explain_instance(d, model, fit_discretizer(d), args.row, target, cfg.lime_params())
        _write_json(args.out or "explanations.json", _stamp(explanations_to_dict([exp]), cfg))
        print(exp.to_markdown(), end="")
        return EXIT_OK
    if clustering is None:
        raise StageError("explain", ConfigError("explaining all rows needs --clustering"))
    es = stage_explain(cfg, d, model, clustering)
    _write_json(args.out or "explanations.json", _stamp(explanations_to_dict(es.explanations), cfg))
    print(f"explained {len(es.explanations)} rows")
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _resolve_config(args)
    d = stage_load(cfg)
    clustering = _load_clustering(args.clustering)
    with _stage("load"):
        exps = explanations_from_dict(_read_json(args.explanations))
        es = ExplanationSet(tuple(exps), clustering.assignments, tuple(d.columns))
    agg = stage_aggregate(cfg, d, es, clustering)
    out = args.out or "report"
    os.makedirs(out, exist_ok=True)
    b = Bundle(out, cfg)
    for c, summary in agg["popularity"].items():
        b.json(f"popularity_C{c}.json", summary.to_dict())
        b.markdown(f"popularity_C{c}.md", f"Most popular features in C{c}", summary.to_markdown(cfg.report.top_n))
    for (ca, cb), rows in agg["intersections"].items():
        b.json(f"intersection_C{ca}_C{cb}.json",
               {"clusters": [ca, cb], "top_n": cfg.report.top_n, "rows": [dataclasses.asdict(r) for r in rows]})
        b.markdown(f"intersection_C{ca}_C{cb}.md", f"Common most popular features in C{ca} and C{cb}",
                   intersection_markdown(rows, ca, cb))
    if "composition" in agg:
        b.json("composition.json", agg["composition"].to_dict())
        b.markdown("composition.md", "Distribution of real labels per cluster", agg["composition"].to_markdown())
    dist = agg["distribution"]
    b.json("distribution.json", dist.to_dict())
    b.markdown("distribution.md", f"{dist.feature} per cluster", dist.to_markdown())
    print(f"wrote {len(b.files)} files to {out}")
    return EXIT_OK


def _add_common(p, data=True):
    p.add_argument("--config", help="pipeline config (JSON or YAML)")
    p.add_argument("--seed", type=int, help="global seed (overrides config)")
    p.add_argument("--out", help="output path")
    if data:
        p.add_argument("--input", help="feature table CSV")
        p.add_argument("--label-column", help="ground-truth column in the CSV")
        p.add_argument("--no-standardize", action="store_true", help="skip z-scoring")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="explainit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"explainit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the full pipeline and write a report bundle")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("synth", help="write a synthetic blob table as CSV")
    p.add_argument("--spec", help="JSON file with BlobSpec fields")
    p.add_argument("--out", help="CSV path")
    p.add_argument("--label-column", default="label")
    for name, typ in (("n_per_cluster", int), ("k", int), ("informative", int), ("noise", int),
                      ("separation", float), ("seed", int)):
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("cluster", help="cluster a feature table")
    _add_common(p)
    p.add_argument("--algorithm", choices=["kmeans", "ward", "single", "birch"])
    p.add_argument("--k", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--branching-factor", dest="branching_factor", type=int)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--tol", type=float)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("validate", help="score a clustering")
    _add_common(p)
    p.add_argument("--clustering", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("model", help="train the SVM surrogate on a clustering")
    _add_common(p)
    p.add_argument("--clustering", required=True)
    p.add_argument("--cv-report", help="also write a cross-validation report here")
    p.add_argument("--folds", type=int)
    p.add_argument("--C", dest="svm_C", type=float)
    p.add_argument("--gamma", dest="svm_gamma", type=float)
    p.add_argument("--kernel", dest="svm_kernel", choices=["rbf", "linear"])
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("explain", help="explain cluster assignments")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--clustering")
    p.add_argument("--row", type=int, help="explain a single row")
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--top-k", dest="top_k", type=int)
    p.add_argument("--kernel-width", dest="kernel_width", type=float)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("report", help="aggregate explanations into cluster-level tables")
    _add_common(p)
    p.add_argument("--clustering", required=True)
    p.add_argument("--explanations", required=True)
    p.add_argument("--top-n", dest="top_n", type=int)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as e:
        print(str(e), file=sys.stderr)
        return e.exit_code
    except ConfigError as e:
        print(f"[stage:config] {e}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as e:
        print(f"[stage:data] {e}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as e:
        print(f"[stage:numerical] {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
