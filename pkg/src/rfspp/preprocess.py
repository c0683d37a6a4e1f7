"""PCA projection of pooled point-pattern features."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, LabeledPattern, PointPattern
from .errors import DataValidationError, EmptyDataError, NumericalError


@dataclass(frozen=True)
class Projection:
    mean: np.ndarray  # (d,)
    components: np.ndarray  # (d, k), columns are unit eigenvectors
    eigenvalues: np.ndarray  # all d eigenvalues, descending

    @property
    def target_dim(self) -> int:
        return self.components.shape[1]

    @property
    def retained_variance(self) -> float:
        total = float(np.sum(self.eigenvalues))
        return float(np.sum(self.eigenvalues[: self.target_dim])) / total if total > 0 else 1.0

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) @ self.components

    def apply(self, dataset: Dataset) -> Dataset:
        if dataset.dim != self.mean.shape[0]:
            raise DataValidationError(
                f"dataset dim {dataset.dim} does not match projection input dim {self.mean.shape[0]}"
            )
        k = self.target_dim
        items = tuple(
            LabeledPattern(PointPattern(self.transform(it.pattern.points), dim=k), it.label, it.id)
            for it in dataset.items
        )
        return Dataset(items, k, dataset.class_count, dict(dataset.metadata))

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Projection":
        try:
            comps = np.array(d["components"], dtype=float)
            return cls(np.array(d["mean"], dtype=float), comps.reshape(len(d["mean"]), -1),
                       np.array(d["eigenvalues"], dtype=float))
        except (KeyError, ValueError) as exc:
            raise DataValidationError(f"bad projection file: {exc}") from None


def fit_pca(dataset: Dataset, target_dim: int, rank_tol: float = 1e-10) -> Projection:
    """Top-``target_dim`` principal axes of the pooled (1/M-normalized) feature covariance.

    Each eigenvector's sign is fixed so that its largest-magnitude
    component is positive.
    """
    d = dataset.dim
    if not 1 <= target_dim <= d:
        raise DataValidationError(f"target dim must be in 1..{d}, got {target_dim}")
    x = dataset.pooled_features()
    if x.shape[0] < 2:
        raise EmptyDataError("need at least 2 pooled features for PCA")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / x.shape[0]
    evals, evecs = np.linalg.eigh(0.5 * (cov + cov.T))
    order = np.argsort(evals)[::-1]
    evals, evecs = evals[order], evecs[:, order]
    evals = np.clip(evals, 0.0, None)
    rank = int(np.sum(evals > rank_tol * max(evals[0], np.finfo(float).tiny)))
    if rank < target_dim:
        raise NumericalError(f"pooled covariance has rank {rank} < target dim {target_dim}")
    pivots = np.argmax(np.abs(evecs), axis=0)
    signs = np.sign(evecs[pivots, np.arange(d)])
    evecs = evecs * np.where(signs == 0, 1.0, signs)
    return Projection(mean, evecs[:, :target_dim], evals)
