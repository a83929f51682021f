"""Synthetic feature tables with known structure."""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass

import numpy as np

from .dataset import Dataset, QualityClass
from .errors import ConfigError

_DIRECTION = ("downlink", "uplink")
_QUANTITY = ("bytes", "packets", "throughput", "packet_length")
_STAT = ("p25", "p50", "p90", "p97", "p99", "mean", "max", "h")
_SLOT = ("1s", "5s", "10s")


def feature_names(m: int) -> list:
    """Deterministic traffic-style feature names, e.g. ``dist_slotted_uplink_bytes_p97_1s``."""
    names = []
    for slot, stat, direction, qty in itertools.product(_SLOT, _STAT, _DIRECTION, _QUANTITY):
        names.append(f"dist_slotted_{direction}_{qty}_{stat}_{slot}")
        if len(names) == m:
            return names
    # past the combinatorial pool, number the rest
    names += [f"feature_{i}" for i in range(len(names), m)]
    return names


@dataclass(frozen=True)
class BlobSpec:
    """Gaussian blobs on ``informative`` dims, pure N(0, sigma) noise on ``noise`` dims.

    Cluster centers are pairwise ``separation * sigma`` apart: a scaled
    simplex when ``k <= informative``, otherwise evenly spaced along the
    first informative axis.
    """

    n_per_cluster: int = 200
    k: int = 3
    informative: int = 5
    noise: int = 5
    separation: float = 10.0
    sigma: float = 1.0
    seed: int = 0

    @property
    def m(self) -> int:
        return self.informative + self.noise

    @classmethod
    def from_json(cls, path) -> "BlobSpec":
        with open(path, encoding="utf-8") as fh:
            return cls(**json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)


def blob_centers(spec: BlobSpec) -> np.ndarray:
    centers = np.zeros((spec.k, spec.m))
    step = spec.separation * spec.sigma
    if spec.k <= spec.informative:
        for c in range(spec.k):
            centers[c, c] = step / np.sqrt(2)
    else:
        centers[:, 0] = step * np.arange(spec.k)
    return centers


def gen_blobs(spec: BlobSpec):
    """Return (Dataset, true labels); rows are grouped by cluster."""
    if spec.m <= 0:
        raise ConfigError("blob spec needs at least one feature")
    if spec.k < 1 or spec.n_per_cluster < 1:
        raise ConfigError("blob spec needs k >= 1 and n_per_cluster >= 1")
    if spec.informative < 1 or not spec.separation > 0:
        raise ConfigError("blob spec needs an informative dim and positive separation")
    rng = np.random.default_rng(spec.seed)
    labels = np.repeat(np.arange(spec.k), spec.n_per_cluster)
    X = rng.normal(0.0, spec.sigma, size=(len(labels), spec.m)) + blob_centers(spec)[labels]
    names = [QualityClass(c).name for c in labels] if spec.k <= 3 else [f"class_{c}" for c in labels]
    return Dataset(feature_names(spec.m), X, names), labels


class LinearProbabilityModel:
    """Two-class model with P(class 1 | x) = logistic(coefs . x + intercept).

    Exposes the same ``predict_proba`` interface as the SVM surrogate.
    """

    def __init__(self, coefs, intercept: float = 0.0):
        coefs = np.asarray(coefs, dtype=float)
        if coefs.ndim != 1 or not np.any(coefs != 0):
            raise ConfigError("need at least one nonzero coefficient")
        self.coefs = coefs
        self.intercept = float(intercept)
        self.classes = (0, 1)

    @property
    def n_classes(self) -> int:
        return 2

    def predict_proba(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        z = X @ self.coefs + self.intercept
        p1 = np.exp(-np.logaddexp(0.0, -z))
        return np.column_stack([1 - p1, p1])

    def predict(self, X) -> np.ndarray:
        return self.predict_proba(X).argmax(axis=1)


def gen_linear_prob_model(coefs, intercept: float = 0.0) -> LinearProbabilityModel:
    return LinearProbabilityModel(coefs, intercept)
