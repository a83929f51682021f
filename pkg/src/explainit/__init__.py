"""Explain unsupervised clusterings of tabular features with a kernel-SVM
surrogate and local linear (LIME-style) explanations."""

__version__ = "0.1.0"

from .cluster import ClusteringResult, agglomerative_fit, birch_fit, kmeans_fit
from .dataset import Dataset, load_csv, standardize
from .errors import ConfigError, DataError, ExplainItError, NumericalError, SchemaError
from .explain import Explanation, LimeParams, explain_instance, fit_discretizer
from .model import MulticlassSvm, SvmParams, multiclass_train, predict_proba
from .validity import ValidityReport, external_metrics, silhouette_score

__all__ = [
    "ClusteringResult", "ConfigError", "DataError", "Dataset", "ExplainItError", "Explanation",
    "LimeParams", "MulticlassSvm", "NumericalError", "SchemaError", "SvmParams", "ValidityReport",
    "agglomerative_fit", "birch_fit", "explain_instance", "external_metrics", "fit_discretizer",
    "kmeans_fit", "load_csv", "multiclass_train", "predict_proba", "silhouette_score", "standardize",
]
