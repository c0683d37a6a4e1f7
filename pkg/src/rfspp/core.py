"""Point patterns, datasets and the JSON Lines interchange format.

A point pattern is a finite multi-set of d-dimensional feature vectors.  It
is stored as an ``(m, d)`` array whose row order carries no meaning; every
likelihood in this package is invariant to row permutations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataValidationError, DimensionMismatchError


class PointPattern:
    """An unordered finite collection of feature vectors.

    Duplicate points are allowed and the empty pattern is a valid value.
    Instances are immutable: the backing array is copied and flagged
    read-only.
    """

    __slots__ = ("_points",)

    def __init__(self, points, dim: int | None = None):
        arr = np.array(points, dtype=float)
        if arr.ndim == 2 and arr.shape[0] > 0 and arr.shape[1] > 0 and dim in (None, arr.shape[1]):
            if not np.isfinite(arr).all():
                raise DataValidationError("points must be finite")
            arr.setflags(write=False)
            self._points = arr
            return
        if arr.size == 0:
            if dim is None:
                if arr.ndim == 2 and arr.shape[1] > 0:
                    dim = arr.shape[1]
                else:
                    raise DataValidationError("empty pattern needs an explicit dim")
            arr = np.empty((0, dim), dtype=float)
        else:
            if arr.ndim == 1:
                # a flat list of scalars is a 1-D pattern
                arr = arr.reshape(-1, 1) if dim in (None, 1) else arr.reshape(1, -1)
            if arr.ndim != 2:
                raise DataValidationError(f"points must be 2-D, got shape {arr.shape}")
            if dim is not None and arr.shape[1] != dim:
                raise DimensionMismatchError(
                    f"points have dimension {arr.shape[1]}, expected {dim}"
                )
            if not np.all(np.isfinite(arr)):
                raise DataValidationError("points must be finite")
        if arr.shape[1] < 1:
            raise DataValidationError("feature dimension must be >= 1")
        arr.setflags(write=False)
        self._points = arr

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    @property
    def cardinality(self) -> int:
        return self._points.shape[0]

    def __len__(self) -> int:
        return self._points.shape[0]

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._points)

    def __eq__(self, other) -> bool:
        # storage order is compared too; use same_set() for multi-set equality
        if not isinstance(other, PointPattern):
            return NotImplemented
        return self.dim == other.dim and np.array_equal(self._points, other._points)

    def __hash__(self):
        return hash((self.dim, self._points.tobytes()))

    def same_set(self, other: "PointPattern") -> bool:
        """Multi-set equality, ignoring storage order."""
        if self.dim != other.dim or len(self) != len(other):
            return False
        a = self._points[np.lexsort(self._points.T[::-1])]
        b = other._points[np.lexsort(other._points.T[::-1])]
        return np.array_equal(a, b)

    def __repr__(self) -> str:
        return f"PointPattern(cardinality={len(self)}, dim={self.dim})"


def rescale_pattern(p: PointPattern, s: float) -> PointPattern:
    """Multiply every coordinate by ``s`` (a change of measurement unit)."""
    if not s > 0:
        raise ValueError(f"scale must be positive, got {s}")
    return PointPattern(p.points * s, dim=p.dim)


@dataclass(frozen=True)
class UnitContext:
    """Hyper-volume ``U`` of one unit cell of the feature space."""

    hyper_volume_unit: float = 1.0

    def __post_init__(self):
        if not (self.hyper_volume_unit > 0 and math.isfinite(self.hyper_volume_unit)):
            raise ValueError("hyper_volume_unit must be positive and finite")

    @property
    def log_unit(self) -> float:
        return math.log(self.hyper_volume_unit)


@dataclass(frozen=True)
class LabeledPattern:
    pattern: PointPattern
    label: int | None = None
    id: str | None = None


@dataclass(frozen=True)
class Dataset:
    """A list of (optionally labeled) point patterns sharing one dimension.

    ``class_count`` is 0 for unlabeled data; otherwise labels lie in
    ``1..class_count``.
    """

    items: tuple[LabeledPattern, ...]
    dim: int
    class_count: int = 0
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if self.dim < 1:
            raise DataValidationError("dim must be >= 1")
        for it in self.items:
            if it.pattern.dim != self.dim:
                raise DimensionMismatchError(
                    f"pattern {it.id!r} has dim {it.pattern.dim}, dataset dim {self.dim}"
                )
            if it.label is not None:
                if self.class_count == 0 or not 1 <= it.label <= self.class_count:
                    raise DataValidationError(
                        f"label {it.label} outside 1..{self.class_count}"
                    )

    @classmethod
    def from_patterns(
        cls,
        patterns: Iterable[PointPattern],
        labels: Sequence[int | None] | None = None,
        class_count: int | None = None,
        dim: int | None = None,
        ids: Sequence[str] | None = None,
    ) -> "Dataset":
        patterns = list(patterns)
        if labels is None:
            labels = [None] * len(patterns)
        if len(labels) != len(patterns):
            raise DataValidationError("labels and patterns differ in length")
        if ids is None:
            ids = [str(i) for i in range(len(patterns))]
        if dim is None:
            if not patterns:
                raise DataValidationError("cannot infer dim of an empty dataset")
            dim = patterns[0].dim
        if class_count is None:
            known = [l for l in labels if l is not None]
            class_count = max(known) if known else 0
        items = [LabeledPattern(p, l, i) for p, l, i in zip(patterns, labels, ids)]
        return cls(tuple(items), dim, class_count)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[LabeledPattern]:
        return iter(self.items)

    @property
    def patterns(self) -> list[PointPattern]:
        return [it.pattern for it in self.items]

    @property
    def labels(self) -> list[int | None]:
        return [it.label for it in self.items]

    @property
    def cardinalities(self) -> np.ndarray:
        return np.array([len(it.pattern) for it in self.items], dtype=int)

    def pooled_features(self) -> np.ndarray:
        """All features of all patterns stacked into one ``(M, d)`` array."""
        if not self.items:
            return np.empty((0, self.dim))
        return np.concatenate([it.pattern.points for it in self.items], axis=0)

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(
            tuple(self.items[i] for i in indices), self.dim, self.class_count,
            dict(self.metadata),
        )

    def with_label(self, label: int) -> "Dataset":
        """Patterns carrying ``label`` only."""
        return self.subset(i for i, it in enumerate(self.items) if it.label == label)


# ---------------------------------------------------------------------------
# JSON Lines interchange
# ---------------------------------------------------------------------------


def _pattern_record(item: LabeledPattern, index: int) -> dict:
    return {
        "id": item.id if item.id is not None else str(index),
        "label": item.label,
        "points": item.pattern.points.tolist(),
    }


def dumps_jsonl(dataset: Dataset) -> str:
    lines = [json.dumps(_pattern_record(it, i)) for i, it in enumerate(dataset.items)]
    return "".join(line + "\n" for line in lines)


def loads_jsonl(
    text: str, dim: int | None = None, class_count: int | None = None
) -> Dataset:
    """Parse the JSON Lines dataset format.

    The dimension is taken from the first point in the file (or ``dim``)
    and validated against every other point.  Empty patterns are allowed
    but a file made only of empty patterns needs ``dim``.
    """
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataValidationError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(rec, dict) or "points" not in rec:
            raise DataValidationError(f"line {lineno}: expected an object with 'points'")
        label = rec.get("label")
        if label is not None and (isinstance(label, bool) or not isinstance(label, int)):
            raise DataValidationError(f"line {lineno}: label must be an integer or null")
        pts = rec["points"]
        if not isinstance(pts, list):
            raise DataValidationError(f"line {lineno}: 'points' must be a list")
        if dim is None and pts:
            first = pts[0]
            if not isinstance(first, list) or not first:
                raise DataValidationError(f"line {lineno}: points must be lists of numbers")
            dim = len(first)
        records.append((lineno, rec.get("id", str(len(records))), label, pts))
    if not records:
        raise DataValidationError("dataset is empty")
    if dim is None:
        raise DataValidationError("cannot infer dimension: every pattern is empty")

    patterns, labels, ids = [], [], []
    for lineno, rid, label, pts in records:
        try:
            if pts and any(not isinstance(x, list) for x in pts):
                raise DataValidationError("points must be lists of numbers")
            patterns.append(PointPattern(np.array(pts, dtype=float).reshape(len(pts), -1)
                                         if pts else [], dim=dim))
        except (DataValidationError, ValueError) as exc:
            raise DataValidationError(f"line {lineno}: {exc}") from None
        labels.append(label)
        ids.append(str(rid))
    if class_count is None:
        known = [l for l in labels if l is not None]
        class_count = max(known) if known else 0
    if any(l is not None and l < 1 for l in labels):
        raise DataValidationError("labels must be >= 1")
    return Dataset.from_patterns(patterns, labels, class_count, dim, ids)


def write_jsonl(dataset: Dataset, path: str | Path) -> None:
    Path(path).write_text(dumps_jsonl(dataset))


def read_jsonl(
    path: str | Path, dim: int | None = None, class_count: int | None = None
) -> Dataset:
    return loads_jsonl(Path(path).read_text(), dim=dim, class_count=class_count)
