"""Bayes classification of point patterns and quantile-threshold novelty detection."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Literal, Sequence

import numpy as np

from .core import PointPattern
from .errors import DataValidationError, DimensionMismatchError, EmptyDataError
from .models import (
    FeatureDensity,
    IidClusterModel,
    model_from_dict,
    nb_log_likelihood,
    ranking_log_score,
    rfs_log_density,
)

ScorerName = Literal["nb", "rfs", "ranking"]

SCORERS: dict[str, Callable[[IidClusterModel, PointPattern], float]] = {
    "nb": lambda model, p: nb_log_likelihood(model.feature, p),
    "rfs": rfs_log_density,
    "ranking": ranking_log_score,
}


def get_scorer(name: str) -> Callable[[IidClusterModel, PointPattern], float]:
    try:
        return SCORERS[name]
    except KeyError:
        raise ValueError(f"unknown scorer {name!r}; choose from {sorted(SCORERS)}") from None


# ---------------------------------------------------------------------------
# Classification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    label: int
    log_posteriors: tuple[float, ...]  # unnormalized: log p(y) + log p(X | y)
    all_impossible: bool = False  # every class scored -inf; label is the tie-break


class BagClassifier:
    """Maximum a-posteriori classifier over C per-class pattern models.

    ``class_models`` are :class:`IidClusterModel` instances (scored with the
    RFS density, or with the naive-Bayes likelihood of their feature density
    when ``scorer="nb"``) or bare :class:`FeatureDensity` objects, which are
    always scored naive-Bayes style.  Labels are ``1..C``.
    """

    def __init__(
        self,
        class_models: Sequence[IidClusterModel | FeatureDensity],
        priors: Sequence[float] | None = None,
        scorer: ScorerName = "rfs",
    ):
        models = list(class_models)
        if len(models) < 2:
            raise ValueError("need at least two classes")
        dims = {m.dim for m in models}
        if len(dims) != 1:
            raise DimensionMismatchError(f"class models disagree on dimension: {sorted(dims)}")
        if priors is None:
            priors = np.full(len(models), 1.0 / len(models))
        priors = np.asarray(priors, dtype=float)
        if priors.shape != (len(models),):
            raise ValueError("one prior per class required")
        if np.any(priors < 0) or abs(math.fsum(priors) - 1.0) > 1e-12:
            raise ValueError("priors must be non-negative and sum to 1")
        get_scorer(scorer)
        if scorer != "nb" and any(isinstance(m, FeatureDensity) for m in models):
            raise ValueError(f"scorer {scorer!r} needs IidClusterModel class models")
        self.class_models = tuple(models)
        self.priors = priors
        self.scorer = scorer
        self.dim = dims.pop()
        with np.errstate(divide="ignore"):
            self._log_priors = np.log(priors)

    @property
    def n_classes(self) -> int:
        return len(self.class_models)

    def class_log_likelihood(self, k: int, p: PointPattern) -> float:
        model = self.class_models[k]
        if isinstance(model, FeatureDensity):
            return nb_log_likelihood(model, p)
        return SCORERS[self.scorer](model, p)

    def classify(self, p: PointPattern) -> Classification:
        if p.dim != self.dim:
            raise DimensionMismatchError(f"pattern dim {p.dim} != classifier dim {self.dim}")
        post = np.array(
            [self._log_priors[k] + self.class_log_likelihood(k, p) for k in range(self.n_classes)]
        )
        # np.argmax returns the first maximum, i.e. the smallest class index
        best = int(np.argmax(post))
        return Classification(best + 1, tuple(float(v) for v in post), bool(np.all(post == -np.inf)))

    def predict(self, patterns) -> np.ndarray:
        return np.array([self.classify(p).label for p in patterns], dtype=int)


def classify(c: BagClassifier, p: PointPattern) -> Classification:
    return c.classify(p)


# ---------------------------------------------------------------------------
# Novelty detection
# ---------------------------------------------------------------------------


def fit_threshold(scores, q: int = 2, Q: int = 10) -> float:
    """Nearest-rank q-th Q-quantile: the ``ceil(q n / Q)``-th smallest score."""
    if not (isinstance(q, (int, np.integer)) and isinstance(Q, (int, np.integer))):
        raise TypeError("q and Q must be integers")
    if not 1 <= q < Q:
        raise ValueError(f"need 1 <= q < Q, got q={q}, Q={Q}")
    s = np.sort(np.asarray(list(scores), dtype=float))
    n = s.size
    if n == 0:
        raise EmptyDataError("no scores to threshold")
    rank = -(-q * n // Q)
    return float(s[rank - 1])


@dataclass(frozen=True)
class Verdict:
    score: float
    anomaly: bool
    out_of_support: bool = False  # score is -inf because the cardinality has no mass

    @property
    def label(self) -> str:
        return "anomaly" if self.anomaly else "normal"


@dataclass(frozen=True)
class NoveltyDetector:
    """A fitted scorer plus a log-domain threshold.

    Patterns scoring strictly below ``threshold`` are anomalies.
    """

    model: IidClusterModel
    scorer: ScorerName
    threshold: float
    q: int = 2
    Q: int = 10

    def __post_init__(self):
        get_scorer(self.scorer)
        if math.isnan(self.threshold) or self.threshold == math.inf:
            raise ValueError("threshold must be finite or -inf")

    @classmethod
    def fit(
        cls,
        model: IidClusterModel,
        scorer: ScorerName,
        training,
        q: int = 2,
        Q: int = 10,
    ) -> "NoveltyDetector":
        scores = [SCORERS[scorer](model, p) for p in training]
        return cls(model, scorer, fit_threshold(scores, q, Q), q, Q)

    def score(self, p: PointPattern) -> float:
        return SCORERS[self.scorer](self.model, p)

    def detect(self, p: PointPattern) -> Verdict:
        s = self.score(p)
        oos = self.scorer != "nb" and not self.model.cardinality.in_support(len(p))
        return Verdict(s, s < self.threshold, oos)

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "scorer": self.scorer,
            "threshold": _encode_score(self.threshold),
            "threshold_spec": {"q": self.q, "Q": self.Q},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoveltyDetector":
        try:
            spec = d["threshold_spec"]
            return cls(
                model_from_dict(d["model"]),
                d["scorer"],
                _decode_score(d["threshold"]),
                int(spec["q"]),
                int(spec["Q"]),
            )
        except KeyError as exc:
            raise DataValidationError(f"detector is missing field {exc}") from None


def detect(d: NoveltyDetector, p: PointPattern) -> Verdict:
    return d.detect(p)


def _encode_score(x: float) -> float | None:
    # -inf is the only non-finite score; JSON has no literal for it
    return None if x == -math.inf else float(x)


def _decode_score(x) -> float:
    return -math.inf if x is None else float(x)


def verdict_record(pattern_id: str, v: Verdict) -> dict:
    return {"id": pattern_id, "score": _encode_score(v.score), "verdict": v.label}
