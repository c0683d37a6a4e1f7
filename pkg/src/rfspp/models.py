"""Feature densities, cardinality distributions and point-pattern likelihoods.

Everything is evaluated in the log domain.  Sums over the points of a
pattern use :func:`math.fsum`, which is correctly rounded and therefore
exactly invariant to the order in which points are stored.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.linalg import solve_triangular

from .core import PointPattern, UnitContext
from .errors import (
    CovarianceError,
    DataValidationError,
    DimensionMismatchError,
    SingularCovarianceError,
)

_LOG_2PI = math.log(2.0 * math.pi)
_LOG_4PI = math.log(4.0 * math.pi)
_MAX_CONDITION = 1e12


def _check_dim(density: "FeatureDensity", p: PointPattern) -> None:
    if p.dim != density.dim:
        raise DimensionMismatchError(
            f"pattern has dimension {p.dim}, density has dimension {density.dim}"
        )


def log_factorial(m: int) -> float:
    return math.lgamma(m + 1.0)


# ---------------------------------------------------------------------------
# Feature densities
# ---------------------------------------------------------------------------


class FeatureDensity(abc.ABC):
    """A probability density on R^d.

    Subclasses provide the pointwise log-density, the squared L2 norm
    ``int p(x)^2 dx`` and a sampler.  ``rescaled(s)`` returns the push-forward
    of the density under ``x -> s x``.
    """

    dim: int

    @abc.abstractmethod
    def log_pdf(self, x) -> np.ndarray:
        """Log-density at each row of ``x`` (shape ``(m, d)``)."""

    @abc.abstractmethod
    def l2_norm_sq(self) -> float: ...

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray: ...

    @abc.abstractmethod
    def rescaled(self, s: float) -> "FeatureDensity": ...

    @abc.abstractmethod
    def to_dict(self) -> dict: ...

    def log_l2_norm_sq(self) -> float:
        return math.log(self.l2_norm_sq())

    def pattern_log_pdfs(self, p: PointPattern) -> np.ndarray:
        _check_dim(self, p)
        if len(p) == 0:
            return np.empty(0)
        return self.log_pdf(p.points)


@dataclass(frozen=True, eq=False)
class GaussianDensity(FeatureDensity):
    """Multivariate normal N(mean, cov).

    The covariance must be symmetric (to 1e-12) and positive definite with
    condition number at most 1e12; otherwise construction fails.
    """

    mean: np.ndarray
    cov: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False)
    _chol_inv: np.ndarray = field(init=False, repr=False)
    _log_det: float = field(init=False, repr=False)
    _dim: int = field(init=False, repr=False)
    _chol_inv_t: np.ndarray = field(init=False, repr=False)
    _chol_t: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        d = mean.shape[0]
        if d < 1:
            raise DataValidationError("mean must have at least one component")
        if cov.ndim == 0 or cov.size == 1:
            cov = cov.reshape(1, 1)
        if cov.shape != (d, d):
            raise DimensionMismatchError(f"cov shape {cov.shape} does not match mean ({d},)")
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(cov))):
            raise DataValidationError("mean and cov must be finite")
        scale = max(np.max(np.abs(cov)), np.finfo(float).tiny)
        if np.max(np.abs(cov - cov.T)) > 1e-12 * scale:
            raise CovarianceError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        eig = np.linalg.eigvalsh(cov)
        if eig[0] < -1e-12 * scale:
            raise CovarianceError("covariance is not positive semi-definite")
        if eig[0] <= 0 or eig[-1] / eig[0] > _MAX_CONDITION:
            raise SingularCovarianceError(
                f"covariance is singular or near-singular (eigenvalues {eig[0]:.3g}..{eig[-1]:.3g})"
            )
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise SingularCovarianceError("covariance failed Cholesky factorization") from None
        mean.setflags(write=False)
        cov.setflags(write=False)
        chol.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_chol", chol)
        chol_inv = solve_triangular(chol, np.eye(d), lower=True)
        chol_inv.setflags(write=False)
        object.__setattr__(self, "_chol_inv", chol_inv)
        object.__setattr__(self, "_log_det", 2.0 * float(np.sum(np.log(np.diag(chol)))))
        object.__setattr__(self, "_dim", d)
        object.__setattr__(self, "_chol_inv_t", self._chol_inv.T.copy())
        object.__setattr__(self, "_chol_t", chol.T.copy())

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def log_det(self) -> float:
        return self._log_det

    def log_pdf(self, x) -> np.ndarray:
        if not (isinstance(x, np.ndarray) and x.ndim == 2):
            x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self._dim:
            raise DimensionMismatchError(f"x has dimension {x.shape[1]}, expected {self._dim}")
        z = (x - self.mean) @ self._chol_inv_t
        maha = (z * z).sum(axis=1)
        return -0.5 * (self._dim * _LOG_2PI + self._log_det + maha)

    def l2_norm_sq(self) -> float:
        return math.exp(self.log_l2_norm_sq())

    def log_l2_norm_sq(self) -> float:
        # int N(x; mu, S)^2 dx = N(0; 0, 2S) = (4 pi)^(-d/2) det(S)^(-1/2)
        return -0.5 * self._dim * _LOG_4PI - 0.5 * self._log_det

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        z = rng.standard_normal((n, self._dim))
        return self.mean + z @ self._chol_t

    def rescaled(self, s: float) -> "GaussianDensity":
        return GaussianDensity(self.mean * s, self.cov * (s * s))

    def to_dict(self) -> dict:
        return {"type": "gaussian", "mean": self.mean.tolist(), "cov": self.cov.tolist()}

    def __eq__(self, other):
        if not isinstance(other, GaussianDensity):
            return NotImplemented
        return np.array_equal(self.mean, other.mean) and np.array_equal(self.cov, other.cov)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PiecewiseConstantDensity(FeatureDensity):
    """A 1-D density that is constant on each cell ``[edges[i], edges[i+1])``.

    Zero outside ``[edges[0], edges[-1])``.  Values must integrate to one.
    """

    edges: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        edges = np.array(self.edges, dtype=float).reshape(-1)
        values = np.array(self.values, dtype=float).reshape(-1)
        if edges.size != values.size + 1 or values.size == 0:
            raise DataValidationError("need len(edges) == len(values) + 1 >= 2")
        if np.any(np.diff(edges) <= 0):
            raise DataValidationError("edges must be strictly increasing")
        if np.any(values < 0):
            raise DataValidationError("density values must be non-negative")
        total = float(np.sum(values * np.diff(edges)))
        if abs(total - 1.0) > 1e-9:
            raise DataValidationError(f"density integrates to {total}, not 1")
        edges.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)

    dim = 1

    def log_pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.values.size)
        out = np.full(x.shape, -np.inf)
        with np.errstate(divide="ignore"):
            out[inside] = np.log(self.values[idx[inside]])
        return out

    def l2_norm_sq(self) -> float:
        return float(np.sum(self.values**2 * np.diff(self.edges)))

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        widths = np.diff(self.edges)
        mass = self.values * widths
        cells = rng.choice(self.values.size, size=n, p=mass / mass.sum())
        u = rng.random(n)
        return (self.edges[cells] + u * widths[cells]).reshape(-1, 1)

    def rescaled(self, s: float) -> "PiecewiseConstantDensity":
        if not s > 0:
            raise ValueError("scale must be positive")
        return PiecewiseConstantDensity(self.edges * s, self.values / s)

    def to_dict(self) -> dict:
        return {
            "type": "piecewise_constant",
            "edges": self.edges.tolist(),
            "values": self.values.tolist(),
        }


# ---------------------------------------------------------------------------
# Cardinality distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PoissonCardinality:
    rate: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ValueError(f"Poisson rate must be positive and finite, got {self.rate}")
        object.__setattr__(self, "rate", float(self.rate))

    def log_pmf(self, m: int) -> float:
        if m < 0:
            raise ValueError("cardinality must be non-negative")
        return m * math.log(self.rate) - self.rate - log_factorial(m)

    def in_support(self, m: int) -> bool:
        return m >= 0

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.poisson(self.rate))

    def to_dict(self) -> dict:
        return {"type": "poisson", "rate": self.rate}


@dataclass(frozen=True, eq=False)
class CategoricalCardinality:
    """Probabilities ``(p_0, ..., p_K)`` over cardinalities ``0..K``."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float).reshape(-1)
        if probs.size == 0:
            raise DataValidationError("categorical cardinality needs at least p_0")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise DataValidationError("probabilities must be finite and non-negative")
        if abs(math.fsum(probs) - 1.0) > 1e-12:
            raise DataValidationError(f"probabilities sum to {math.fsum(probs)!r}, not 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def max_card(self) -> int:
        return self.probs.size - 1

    def log_pmf(self, m: int) -> float:
        if m < 0:
            raise ValueError("cardinality must be non-negative")
        if m > self.max_card or self.probs[m] == 0.0:
            return -math.inf
        return math.log(self.probs[m])

    def in_support(self, m: int) -> bool:
        return 0 <= m <= self.max_card and self.probs[m] > 0

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.choice(self.probs.size, p=self.probs))

    def to_dict(self) -> dict:
        return {"type": "categorical", "probs": self.probs.tolist()}

    def __eq__(self, other):
        if not isinstance(other, CategoricalCardinality):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    __hash__ = None


CardinalityDistribution = Union[PoissonCardinality, CategoricalCardinality]


# ---------------------------------------------------------------------------
# iid-cluster model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IidClusterModel:
    """Cardinality law + feature density + hyper-volume unit.

    The density of a pattern X (relative to the unitless reference measure)
    is ``p_c(|X|) |X|! prod_x U p_f(x)``.
    """

    cardinality: CardinalityDistribution
    feature: FeatureDensity
    unit: UnitContext = UnitContext()

    @property
    def dim(self) -> int:
        return self.feature.dim

    def log_density(self, p: PointPattern) -> float:
        return rfs_log_density(self, p)

    def ranking_score(self, p: PointPattern) -> float:
        return ranking_log_score(self, p)

    def rescaled(self, s: float) -> "IidClusterModel":
        """Same model expressed in units where every coordinate is ``s`` times larger."""
        return IidClusterModel(
            self.cardinality,
            self.feature.rescaled(s),
            UnitContext(self.unit.hyper_volume_unit * s**self.dim),
        )

    def to_dict(self) -> dict:
        return {
            "type": "iid_cluster",
            "unit": self.unit.hyper_volume_unit,
            "cardinality": self.cardinality.to_dict(),
            "feature": self.feature.to_dict(),
        }


def gaussian_log_pdf(g: GaussianDensity, x) -> float:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != g.dim:
        raise DimensionMismatchError(f"x has dimension {x.shape[0]}, expected {g.dim}")
    return float(g.log_pdf(x.reshape(1, -1))[0])


def gaussian_l2_norm_sq(g: GaussianDensity) -> float:
    return g.l2_norm_sq()


def cardinality_log_pmf(c: CardinalityDistribution, m: int) -> float:
    return c.log_pmf(m)


def nb_log_likelihood(f: FeatureDensity, p: PointPattern) -> float:
    """Sum of per-feature log-densities.

    This is the naive-Bayes bag likelihood.  It carries units of
    ``length^(-d|X|)`` and therefore depends on the measurement unit.
    """
    return math.fsum(f.pattern_log_pdfs(p).tolist())


def rfs_log_density(model: IidClusterModel, p: PointPattern) -> float:
    """Log-density of an iid-cluster random finite set at ``p``. -inf on zero cardinality mass."""
    logs = model.feature.pattern_log_pdfs(p)
    m = len(p)
    log_pc = model.cardinality.log_pmf(m)
    if log_pc == -math.inf:
        return -math.inf
    return math.fsum([log_pc, log_factorial(m), m * model.unit.log_unit, *logs.tolist()])


def poisson_rfs_log_density(model: IidClusterModel, p: PointPattern) -> float:
    """Closed form for Poisson cardinality: ``lambda^|X| e^-lambda prod U p_f``."""
    if not isinstance(model.cardinality, PoissonCardinality):
        raise TypeError("model cardinality is not Poisson")
    logs = model.feature.pattern_log_pdfs(p)
    lam = model.cardinality.rate
    m = len(p)
    return math.fsum([m * math.log(lam), -lam, m * model.unit.log_unit, *logs.tolist()])


def ranking_log_score(model: IidClusterModel, p: PointPattern) -> float:
    """Unit-free novelty ranking ``p_c(|X|) prod_x p_f(x) / ||p_f||^2`` in log form.

    The proportionality constant is fixed at one, so that for patterns of
    cardinality m with i.i.d. features the expected score is exactly
    ``p_c(m)``.
    """
    logs = model.feature.pattern_log_pdfs(p)
    m = len(p)
    log_pc = model.cardinality.log_pmf(m)
    if log_pc == -math.inf:
        return -math.inf
    return math.fsum([log_pc, -m * model.feature.log_l2_norm_sq(), *logs.tolist()])


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def feature_from_dict(d: dict) -> FeatureDensity:
    kind = d.get("type")
    if kind == "gaussian":
        return GaussianDensity(d["mean"], d["cov"])
    if kind == "piecewise_constant":
        return PiecewiseConstantDensity(d["edges"], d["values"])
    raise DataValidationError(f"unknown feature density type {kind!r}")


def cardinality_from_dict(d: dict) -> CardinalityDistribution:
    kind = d.get("type")
    if kind == "poisson":
        return PoissonCardinality(d["rate"])
    if kind == "categorical":
        return CategoricalCardinality(d["probs"])
    raise DataValidationError(f"unknown cardinality type {kind!r}")


def model_from_dict(d: dict) -> IidClusterModel:
    if d.get("type") != "iid_cluster":
        raise DataValidationError(f"unknown model type {d.get('type')!r}")
    try:
        return IidClusterModel(
            cardinality_from_dict(d["cardinality"]),
            feature_from_dict(d["feature"]),
            UnitContext(float(d.get("unit", 1.0))),
        )
    except KeyError as exc:
        raise DataValidationError(f"model is missing field {exc}") from None
