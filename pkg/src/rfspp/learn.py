"""Maximum-likelihood fitting of iid-cluster models.

The joint likelihood of N independent patterns factorizes into a term that
depends only on the cardinalities and a term that depends only on the
pooled features, so the two parameter groups are estimated separately:
the cardinality law from ``|X^(1)|, ..., |X^(N)|`` and the feature density
from the disjoint union of all features.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .core import Dataset, UnitContext
from .errors import EmptyDataError, OutOfSupportError
from .models import (
    CategoricalCardinality,
    GaussianDensity,
    IidClusterModel,
    PoissonCardinality,
    rfs_log_density,
)

DEFAULT_RELATIVE_RIDGE = 1e-9


@dataclass(frozen=True)
class FitConfig:
    """Options for :func:`fit_iid_cluster`.

    ``covariance_ridge=None`` means ``1e-9 * mean(diag(scatter))``; pass 0.0
    for the unregularized MLE.  ``categorical_max=0`` sizes the categorical
    support from the largest observed cardinality.
    """

    cardinality_family: Literal["poisson", "categorical"] = "poisson"
    categorical_max: int = 0
    smoothing: Literal["none", "add_one"] = "none"
    covariance_ridge: float | None = None
    unit: UnitContext = UnitContext()

    def __post_init__(self):
        if self.cardinality_family not in ("poisson", "categorical"):
            raise ValueError(f"unknown cardinality family {self.cardinality_family!r}")
        if self.smoothing not in ("none", "add_one"):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")
        if self.categorical_max < 0:
            raise ValueError("categorical_max must be >= 0")
        if self.covariance_ridge is not None and not self.covariance_ridge >= 0:
            raise ValueError("covariance_ridge must be >= 0")


@dataclass(frozen=True)
class FitReport:
    n_patterns: int
    n_features: int
    ridge: float
    log_likelihood: float
    cardinality_family: str
    smoothing: str

    def to_dict(self) -> dict:
        return {
            "n_patterns": self.n_patterns,
            "n_features": self.n_features,
            "ridge": self.ridge,
            "log_likelihood": self.log_likelihood,
            "cardinality_family": self.cardinality_family,
            "smoothing": self.smoothing,
        }


def _require_nonempty(dataset: Dataset) -> None:
    if len(dataset) == 0:
        raise EmptyDataError("dataset has no patterns")


def fit_poisson_cardinality(dataset: Dataset) -> PoissonCardinality:
    _require_nonempty(dataset)
    cards = dataset.cardinalities
    # integer sum, so the result is independent of dataset order
    rate = int(cards.sum()) / cards.size
    if rate == 0:
        raise EmptyDataError("every pattern is empty; Poisson rate would be 0")
    return PoissonCardinality(rate)


def fit_categorical_cardinality(
    dataset: Dataset, cfg: FitConfig | None = None
) -> CategoricalCardinality:
    cfg = cfg or FitConfig(cardinality_family="categorical")
    _require_nonempty(dataset)
    cards = dataset.cardinalities
    observed_max = int(cards.max())
    if cfg.categorical_max:
        if observed_max > cfg.categorical_max:
            raise OutOfSupportError(
                f"observed cardinality {observed_max} exceeds categorical_max "
                f"{cfg.categorical_max}"
            )
        K = cfg.categorical_max
    else:
        K = observed_max
    counts = np.bincount(cards, minlength=K + 1).astype(float)
    n = cards.size
    if cfg.smoothing == "add_one":
        probs = (counts + 1.0) / (n + K + 1)
    else:
        probs = counts / n
    # renormalize away rounding so the 1e-12 sum invariant always holds
    probs = probs / math.fsum(probs)
    return CategoricalCardinality(probs)


def _pooled_moments(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = features.mean(axis=0)
    centered = features - mean
    scatter = centered.T @ centered / features.shape[0]
    return mean, 0.5 * (scatter + scatter.T)


def resolve_ridge(scatter: np.ndarray, cfg: FitConfig) -> float:
    if cfg.covariance_ridge is not None:
        return float(cfg.covariance_ridge)
    return DEFAULT_RELATIVE_RIDGE * float(np.mean(np.diag(scatter)))


def fit_gaussian_features(dataset: Dataset, cfg: FitConfig | None = None) -> GaussianDensity:
    """Gaussian MLE over the pooled features of all patterns.

    Mean and covariance are normalized by the total feature count M, not by
    the number of patterns.  A ridge ``eps * I`` is added to the covariance.
    """
    cfg = cfg or FitConfig()
    features = dataset.pooled_features()
    if features.shape[0] < 2:
        raise EmptyDataError(
            f"need at least 2 pooled features to fit a Gaussian, got {features.shape[0]}"
        )
    mean, scatter = _pooled_moments(features)
    ridge = resolve_ridge(scatter, cfg)
    return GaussianDensity(mean, scatter + ridge * np.eye(dataset.dim))


def fit_cardinality(dataset: Dataset, cfg: FitConfig):
    if cfg.cardinality_family == "poisson":
        return fit_poisson_cardinality(dataset)
    return fit_categorical_cardinality(dataset, cfg)


def fit_iid_cluster(dataset: Dataset, cfg: FitConfig | None = None) -> IidClusterModel:
    cfg = cfg or FitConfig()
    return IidClusterModel(
        fit_cardinality(dataset, cfg), fit_gaussian_features(dataset, cfg), cfg.unit
    )


def total_log_likelihood(model: IidClusterModel, dataset: Dataset) -> float:
    return math.fsum(rfs_log_density(model, p) for p in dataset.patterns)


def fit_with_report(
    dataset: Dataset, cfg: FitConfig | None = None
) -> tuple[IidClusterModel, FitReport]:
    cfg = cfg or FitConfig()
    model = fit_iid_cluster(dataset, cfg)
    _, scatter = _pooled_moments(dataset.pooled_features())
    report = FitReport(
        n_patterns=len(dataset),
        n_features=int(dataset.cardinalities.sum()),
        ridge=resolve_ridge(scatter, cfg),
        log_likelihood=total_log_likelihood(model, dataset),
        cardinality_family=cfg.cardinality_family,
        smoothing=cfg.smoothing,
    )
    return model, report
