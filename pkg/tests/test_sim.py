import math

import numpy as np
import pytest
from scipy import stats

from rfspp.core import dumps_jsonl
from rfspp.errors import NumericalError
from rfspp.models import CategoricalCardinality, GaussianDensity, IidClusterModel, PoissonCardinality
from rfspp.sim import (
    FEATURE_ANOMALY,
    HIGH_CARDINALITY,
    LOW_CARDINALITY,
    NORMAL,
    ScenarioSpec,
    generate_classification3,
    generate_novelty1,
    sample_pattern,
    sample_truncated_cardinality,
)


@pytest.fixture(scope="module")
def c3():
    return generate_classification3(ScenarioSpec("classification3", seed=7))


@pytest.fixture(scope="module")
def n1():
    return generate_novelty1(ScenarioSpec("novelty1", seed=7))


def test_degenerate_cardinality_gives_empty(rng):
    model = IidClusterModel(CategoricalCardinality([1.0]), GaussianDensity([0.0], [[1.0]]))
    assert all(len(sample_pattern(model, rng)) == 0 for _ in range(50))


def test_sample_pattern_moments(rng):
    model = IidClusterModel(PoissonCardinality(6.0), GaussianDensity([1.0, -2.0], [[2.0, 0.3], [0.3, 1.0]]))
    pats = [sample_pattern(model, rng) for _ in range(10_000)]
    cards = np.array([len(p) for p in pats])
    assert abs(cards.mean() - 6) <= 4 * math.sqrt(6 / 1e4)
    pooled = np.concatenate([p.points for p in pats])
    se = np.sqrt(np.array([2.0, 1.0]) / len(pooled))
    assert np.all(np.abs(pooled.mean(axis=0) - [1.0, -2.0]) <= 4 * se)


def test_truncated_cardinality_bounds(rng):
    base = PoissonCardinality(48.0)
    draws = [sample_truncated_cardinality(base, 40, 60, rng) for _ in range(2000)]
    assert min(draws) >= 40 and max(draws) <= 60
    assert all(sample_truncated_cardinality(base, 48, 48, rng) == 48 for _ in range(20))


def test_truncated_cardinality_chi_square(rng):
    base = PoissonCardinality(48.0)
    n = 100_000
    draws = np.array([sample_truncated_cardinality(base, 40, 60, rng) for _ in range(n)])
    ks = np.arange(40, 61)
    pmf = stats.poisson.pmf(ks, 48.0)
    expected = n * pmf / pmf.sum()
    observed = np.bincount(draws - 40, minlength=21)
    _, pval = stats.chisquare(observed, expected)
    assert pval > 0.001


def test_truncated_cardinality_rejects_negligible_mass(rng):
    with pytest.raises(NumericalError):
        sample_truncated_cardinality(PoissonCardinality(48.0), 200, 210, rng)
    with pytest.raises(ValueError):
        sample_truncated_cardinality(PoissonCardinality(48.0), 10, 5, rng)


def test_classification3_counts_and_labels(c3):
    train, test = c3
    assert len(train) == 900 and len(test) == 1500
    assert train.class_count == 3 and train.dim == 2
    assert np.bincount(train.labels).tolist() == [0, 300, 300, 300]
    assert np.bincount(test.labels).tolist() == [0, 500, 500, 500]


def test_classification3_cardinality_clt(c3):
    train, _ = c3
    for k, lam in zip((1, 2, 3), (6, 15, 30)):
        mean = train.with_label(k).cardinalities.mean()
        assert abs(mean - lam) <= 4 * math.sqrt(lam / 300)


def test_classification3_feature_clt(c3):
    train, _ = c3
    for k, mu, var in ((1, [1, 2], [20, 40]), (2, [2, 3], [60, 20]), (3, [2, 2], [30, 30])):
        x = train.with_label(k).pooled_features()
        assert np.all(np.abs(x.mean(axis=0) - mu) <= 4 * np.sqrt(np.array(var) / len(x)))


def test_generators_are_deterministic():
    for name in ("classification3", "novelty1"):
        spec = ScenarioSpec(name, seed=99)
        gen = generate_classification3 if name == "classification3" else generate_novelty1
        a, b = gen(spec), gen(spec)
        assert dumps_jsonl(a[0]) == dumps_jsonl(b[0])
        assert dumps_jsonl(a[1]) == dumps_jsonl(b[1])


def test_trials_share_training_but_not_test():
    spec = ScenarioSpec("classification3", seed=5, counts={"train": 10, "test": 10})
    tr0, te0 = generate_classification3(spec)
    tr1, te1 = generate_classification3(spec.with_trial(1))
    assert dumps_jsonl(tr0) == dumps_jsonl(tr1)
    assert dumps_jsonl(te0) != dumps_jsonl(te1)


def test_novelty1_counts(n1):
    train, test = n1
    assert len(train) == 500 and set(train.labels) == {NORMAL}
    assert len(test) == 500
    assert np.bincount(test.labels).tolist() == [0, 200, 100, 100, 100]


def test_novelty1_cardinality_ranges(n1):
    train, test = n1
    assert train.cardinalities.min() >= 40 and train.cardinalities.max() <= 60
    assert test.with_label(LOW_CARDINALITY).cardinalities.max() <= 10
    assert test.with_label(HIGH_CARDINALITY).cardinalities.min() >= 80
    feat = test.with_label(FEATURE_ANOMALY).cardinalities
    assert feat.min() >= 40 and feat.max() <= 60


def test_novelty1_feature_anomaly_mean(n1):
    _, test = n1
    x = test.with_label(FEATURE_ANOMALY).pooled_features()
    se = np.sqrt(np.array([0.06, 0.04]) / len(x))
    assert np.all(np.abs(x.mean(axis=0) - [1.0, 1.0]) <= 4 * se)


def test_normal_features_moments(n1):
    train, _ = n1
    x = train.pooled_features()
    se = np.sqrt(np.array([0.06, 0.04]) / len(x))
    assert np.all(np.abs(x.mean(axis=0)) <= 4 * se)


def test_scenario_spec_validation():
    with pytest.raises(ValueError):
        ScenarioSpec("texture", seed=1)
    with pytest.raises(ValueError):
        ScenarioSpec("novelty1", seed=1, counts={"bogus": 3})
    spec = ScenarioSpec("novelty1", seed=1, counts={"anomaly": 7})
    assert spec.counts == {"train": 500, "test": 200, "anomaly": 7}
    assert "PCG64" in spec.metadata()["rng"]
