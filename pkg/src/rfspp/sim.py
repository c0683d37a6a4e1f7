"""Seeded samplers and the two simulated benchmark scenarios.

Randomness comes from NumPy's PCG64 generator.  Each independent stream
(one per split and class/anomaly type) is seeded by
``SeedSequence(seed, spawn_key=(split, trial, group))``, so the training
split never depends on the trial index and test splits for different
trials are independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp
from scipy.stats import poisson

from .core import Dataset, PointPattern, UnitContext
from .errors import NumericalError
from .models import (
    GaussianDensity,
    IidClusterModel,
    PoissonCardinality,
)

RNG_ALGORITHM = "numpy.random.PCG64 seeded by SeedSequence(seed, spawn_key=(split, trial, group))"
GENERATOR_VERSION = "1"

_TRAIN, _TEST = 0, 1

# (mean cardinality, feature mean, feature covariance) per cluster
CLASSIFICATION3_CLUSTERS = (
    (6.0, (1.0, 2.0), ((20.0, 0.0), (0.0, 40.0))),
    (15.0, (2.0, 3.0), ((60.0, 0.0), (0.0, 20.0))),
    (30.0, (2.0, 2.0), ((30.0, 0.0), (0.0, 30.0))),
)

NOVELTY1_PARAMS = {
    "rate": 48.0,
    "normal_range": (40, 60),
    "mean": (0.0, 0.0),
    "cov": ((0.06, 0.01), (0.01, 0.04)),
    "feature_anomaly_mean": (1.0, 1.0),
    "low_range": (0, 10),
    "high_range": (80, 120),
}

# labels used in the novelty test split
NORMAL, LOW_CARDINALITY, HIGH_CARDINALITY, FEATURE_ANOMALY = 1, 2, 3, 4
NOVELTY_GROUPS = {
    NORMAL: "normal",
    LOW_CARDINALITY: "low_cardinality",
    HIGH_CARDINALITY: "high_cardinality",
    FEATURE_ANOMALY: "feature",
}

_DEFAULT_COUNTS = {
    "classification3": {"train": 300, "test": 500},
    "novelty1": {"train": 500, "test": 200, "anomaly": 100},
}


@dataclass(frozen=True)
class ScenarioSpec:
    """A named scenario with its seed and sizes.

    For ``classification3`` the counts are per cluster.  For ``novelty1``
    ``train``/``test`` count normal patterns and ``anomaly`` counts each
    anomaly type.  ``trial`` selects an independent test split.
    """

    name: str
    seed: int
    trial: int = 0
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in _DEFAULT_COUNTS:
            raise ValueError(f"unknown scenario {self.name!r}; choose from {sorted(_DEFAULT_COUNTS)}")
        merged = dict(_DEFAULT_COUNTS[self.name])
        unknown = set(self.counts) - set(merged)
        if unknown:
            raise ValueError(f"unknown count keys {sorted(unknown)}")
        merged.update(self.counts)
        if any(int(v) < 0 for v in merged.values()):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", {k: int(v) for k, v in merged.items()})
        if self.seed < 0 or self.trial < 0:
            raise ValueError("seed and trial must be non-negative")

    def with_trial(self, trial: int) -> "ScenarioSpec":
        return replace(self, trial=trial)

    def metadata(self) -> dict:
        return {
            "scenario": self.name,
            "seed": self.seed,
            "trial": self.trial,
            "counts": dict(self.counts),
            "rng": RNG_ALGORITHM,
            "generator_version": GENERATOR_VERSION,
        }


def stream(seed: int, split: int, trial: int, group: int) -> np.random.Generator:
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(split, trial, group)))
    )


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def sample_features(model: IidClusterModel, m: int, rng: np.random.Generator) -> PointPattern:
    """``m`` i.i.d. features from the model's feature density."""
    return PointPattern(model.feature.sample(rng, m), dim=model.dim)


def sample_pattern(model: IidClusterModel, rng: np.random.Generator) -> PointPattern:
    m = model.cardinality.sample(rng)
    return sample_features(model, m, rng)


def truncated_poisson_mass(rate: float, lo: int, hi: int) -> float:
    ks = np.arange(lo, hi + 1)
    return float(np.exp(logsumexp(poisson.logpmf(ks, rate))))


def sample_truncated_cardinality(
    base: PoissonCardinality, lo: int, hi: int, rng: np.random.Generator
) -> int:
    """Draw from Poisson(rate) conditioned on ``lo <= m <= hi`` by rejection."""
    if lo > hi or lo < 0:
        raise ValueError(f"invalid interval [{lo}, {hi}]")
    mass = truncated_poisson_mass(base.rate, lo, hi)
    if mass < 1e-12:
        raise NumericalError(
            f"Poisson({base.rate}) mass on [{lo}, {hi}] is {mass:.3g}; rejection would not terminate"
        )
    while True:
        m = int(rng.poisson(base.rate))
        if lo <= m <= hi:
            return m


def _uniform_cardinality(lo: int, hi: int, rng: np.random.Generator) -> int:
    return int(rng.integers(lo, hi + 1))


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def classification3_models() -> list[IidClusterModel]:
    return [
        IidClusterModel(PoissonCardinality(lam), GaussianDensity(mu, cov), UnitContext())
        for lam, mu, cov in CLASSIFICATION3_CLUSTERS
    ]


def _labeled_split(spec, split, per_class, models, prefix) -> Dataset:
    patterns, labels, ids = [], [], []
    for k, model in enumerate(models):
        rng = stream(spec.seed, split, spec.trial if split == _TEST else 0, k)
        for i in range(per_class):
            patterns.append(sample_pattern(model, rng))
            labels.append(k + 1)
            ids.append(f"{prefix}-c{k + 1}-{i}")
    ds = Dataset.from_patterns(patterns, labels, len(models), dim=models[0].dim, ids=ids)
    return Dataset(ds.items, ds.dim, ds.class_count, spec.metadata() | {"split": prefix})


def generate_classification3(spec: ScenarioSpec) -> tuple[Dataset, Dataset]:
    """Three Poisson-cardinality Gaussian clusters; returns ``(train, test)``."""
    if spec.name != "classification3":
        raise ValueError(f"spec is for scenario {spec.name!r}")
    models = classification3_models()
    train = _labeled_split(spec, _TRAIN, spec.counts["train"], models, "train")
    test = _labeled_split(spec, _TEST, spec.counts["test"], models, "test")
    return train, test


def novelty1_normal_model() -> IidClusterModel:
    p = NOVELTY1_PARAMS
    return IidClusterModel(PoissonCardinality(p["rate"]), GaussianDensity(p["mean"], p["cov"]))


def _novelty_group(kind: int, n: int, rng: np.random.Generator, prefix: str):
    p = NOVELTY1_PARAMS
    normal = GaussianDensity(p["mean"], p["cov"])
    shifted = GaussianDensity(p["feature_anomaly_mean"], p["cov"])
    out = []
    base = PoissonCardinality(p["rate"])
    for i in range(n):
        # Poisson(48) has almost no mass on the anomaly ranges, so those are
        # drawn uniformly; normal-range draws use rejection.
        if kind == LOW_CARDINALITY:
            m = _uniform_cardinality(*p["low_range"], rng)
        elif kind == HIGH_CARDINALITY:
            m = _uniform_cardinality(*p["high_range"], rng)
        else:
            m = sample_truncated_cardinality(base, *p["normal_range"], rng)
        feature = shifted if kind == FEATURE_ANOMALY else normal
        out.append((PointPattern(feature.sample(rng, m), dim=2), kind, f"{prefix}-{NOVELTY_GROUPS[kind]}-{i}"))
    return out


def generate_novelty1(spec: ScenarioSpec) -> tuple[Dataset, Dataset]:
    """Normal-only training split and a mixed test split.

    Test labels: 1 normal, 2 low-cardinality, 3 high-cardinality and
    4 feature anomaly.
    """
    if spec.name != "novelty1":
        raise ValueError(f"spec is for scenario {spec.name!r}")
    c = spec.counts
    train_rows = _novelty_group(NORMAL, c["train"], stream(spec.seed, _TRAIN, 0, 0), "train")
    test_rows = []
    for kind in (NORMAL, LOW_CARDINALITY, HIGH_CARDINALITY, FEATURE_ANOMALY):
        n = c["test"] if kind == NORMAL else c["anomaly"]
        test_rows += _novelty_group(kind, n, stream(spec.seed, _TEST, spec.trial, kind), "test")

    def build(rows, split):
        pats, labels, ids = zip(*rows) if rows else ((), (), ())
        ds = Dataset.from_patterns(list(pats), list(labels), 4, dim=2, ids=list(ids))
        return Dataset(ds.items, 2, 4, spec.metadata() | {"split": split})

    return build(train_rows, "train"), build(test_rows, "test")


def generate(spec: ScenarioSpec) -> tuple[Dataset, Dataset]:
    if spec.name == "classification3":
        return generate_classification3(spec)
    return generate_novelty1(spec)


__all__ = [
    "ScenarioSpec",
    "generate",
    "generate_classification3",
    "generate_novelty1",
    "sample_features",
    "sample_pattern",
    "sample_truncated_cardinality",
    "stream",
]
