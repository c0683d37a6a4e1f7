"""Metrics, cross-validation and the repeated-trial experiment protocols."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import Dataset
from .errors import DataValidationError, EmptyDataError
from .infer import BagClassifier, NoveltyDetector
from .learn import FitConfig, fit_iid_cluster
from .sim import NOVELTY_GROUPS, NORMAL, ScenarioSpec, generate_classification3, generate_novelty1


def accuracy(preds, truth) -> float:
    preds, truth = np.asarray(preds), np.asarray(truth)
    if preds.shape != truth.shape:
        raise DataValidationError("predictions and truth differ in length")
    if preds.size == 0:
        raise EmptyDataError("no predictions")
    return float(np.mean(preds == truth))


@dataclass(frozen=True)
class DetectionScores:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int


def f1(preds, truth) -> DetectionScores:
    """Precision, recall and F1 with *anomaly* (``True``) as the positive class.

    Undefined ratios (no predicted or no actual positives) are reported as 0.
    """
    preds = np.asarray(preds, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if preds.shape != truth.shape:
        raise DataValidationError("predictions and truth differ in length")
    tp = int(np.sum(preds & truth))
    fp = int(np.sum(preds & ~truth))
    fn = int(np.sum(~preds & truth))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    score = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return DetectionScores(precision, recall, score, tp, fp, fn)


def kfold(dataset: Dataset, k: int, seed: int) -> list[tuple[Dataset, Dataset]]:
    """Seeded k-fold partition, stratified by label when labels are present.

    Within each stratum the indices are shuffled and dealt round-robin,
    continuing from where the previous stratum stopped, so stratum sizes
    per fold differ by at most one and overall fold sizes stay balanced.
    """
    n = len(dataset)
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds dataset size {n}")
    rng = np.random.default_rng(seed)
    labels = dataset.labels
    strata: dict = {}
    for i, lab in enumerate(labels):
        strata.setdefault(lab if lab is not None else 0, []).append(i)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for key in sorted(strata):
        idx = np.array(strata[key])
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[(offset + j) % k].append(int(i))
        offset = (offset + idx.size) % k
    splits = []
    for f in range(k):
        test = sorted(folds[f])
        held = set(test)
        train = [i for i in range(n) if i not in held]
        splits.append((dataset.subset(train), dataset.subset(test)))
    return splits


# ---------------------------------------------------------------------------
# Score summaries (boxplot data)
# ---------------------------------------------------------------------------


def nearest_rank(sorted_values: np.ndarray, num: int, den: int) -> float:
    """Value at 1-indexed rank ``ceil(num * n / den)`` (the minimum for num=0)."""
    n = sorted_values.size
    rank = max(1, -(-num * n // den))
    return float(sorted_values[rank - 1])


@dataclass(frozen=True)
class BoxSummary:
    n: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    whisker_low: float
    whisker_high: float
    n_outliers: int
    threshold: float | None = None

    @property
    def five_numbers(self) -> tuple[float, float, float, float, float]:
        return (self.minimum, self.q1, self.median, self.q3, self.maximum)


def summarize(values, threshold: float | None = None) -> BoxSummary:
    s = np.sort(np.asarray(list(values), dtype=float))
    if s.size == 0:
        raise EmptyDataError("cannot summarize an empty group")
    q1, med, q3 = (nearest_rank(s, j, 4) for j in (1, 2, 3))
    iqr = q3 - q1
    if math.isfinite(iqr):
        lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
        inside = s[(s >= lo_fence) & (s <= hi_fence)]
    else:
        inside = s
    return BoxSummary(
        n=int(s.size),
        minimum=float(s[0]),
        q1=q1,
        median=med,
        q3=q3,
        maximum=float(s[-1]),
        whisker_low=float(inside[0]),
        whisker_high=float(inside[-1]),
        n_outliers=int(s.size - inside.size),
        threshold=threshold,
    )


def score_summary(
    groups: Mapping[str, Sequence[float]], threshold: float | None = None
) -> dict[str, BoxSummary]:
    return {name: summarize(vals, threshold) for name, vals in groups.items()}


# ---------------------------------------------------------------------------
# Report writers
# ---------------------------------------------------------------------------


def rows_to_csv(rows: Sequence[Mapping]) -> str:
    buf = io.StringIO()
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def boxplot_rows(summaries: Mapping[str, BoxSummary], **extra) -> list[dict]:
    return [dict(extra, group=name, **asdict(b)) for name, b in summaries.items()]


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def mean_std(values) -> dict:
    v = np.asarray(values, dtype=float)
    return {"mean": float(v.mean()), "std": float(v.std(ddof=1)) if v.size > 1 else 0.0}


# ---------------------------------------------------------------------------
# Experiment protocols
# ---------------------------------------------------------------------------


def fit_class_models(train: Dataset, cfg: FitConfig | None = None):
    return [fit_iid_cluster(train.with_label(k), cfg) for k in range(1, train.class_count + 1)]


def run_classification3(
    seed: int, trials: int = 10, counts: dict | None = None, cfg: FitConfig | None = None
) -> dict:
    """Train once on the simulated three-cluster data, test on ``trials`` fresh test sets.

    Reports per-trial accuracy of the Poisson-RFS classifier and of naive
    Bayes with the same fitted Gaussians.
    """
    spec = ScenarioSpec("classification3", seed, 0, counts or {})
    train, _ = generate_classification3(spec)
    models = fit_class_models(train, cfg)
    rfs = BagClassifier(models, scorer="rfs")
    nb = BagClassifier(models, scorer="nb")
    rows = []
    for t in range(trials):
        _, test = generate_classification3(spec.with_trial(t))
        truth = test.labels
        rows.append({
            "trial": t,
            "rfs_accuracy": accuracy(rfs.predict(test.patterns), truth),
            "nb_accuracy": accuracy(nb.predict(test.patterns), truth),
        })
    return {
        "scenario": "classification3",
        "seed": seed,
        "trials": rows,
        "aggregate": {
            "rfs_accuracy": mean_std([r["rfs_accuracy"] for r in rows]),
            "nb_accuracy": mean_std([r["nb_accuracy"] for r in rows]),
        },
        "models": [m.to_dict() for m in models],
    }


SCORER_NAMES = ("nb", "rfs", "ranking")


def run_novelty1(
    seed: int,
    trials: int = 10,
    q: int = 2,
    Q: int = 10,
    counts: dict | None = None,
    cfg: FitConfig | None = None,
) -> dict:
    """Novelty detection on simulated data with three scorers.

    One Poisson-RFS model is fitted on normal training data.  For each scorer
    the threshold is the nearest-rank ``q``-th ``Q``-quantile of training
    scores.  Each trial draws a fresh test set and records F1, per-group
    detection rates and per-group score summaries.
    """
    spec = ScenarioSpec("novelty1", seed, 0, counts or {})
    train, _ = generate_novelty1(spec)
    model = fit_iid_cluster(train, cfg)
    detectors = {s: NoveltyDetector.fit(model, s, train.patterns, q, Q) for s in SCORER_NAMES}
    rows, boxes = [], []
    for t in range(trials):
        _, test = generate_novelty1(spec.with_trial(t))
        labels = np.array(test.labels)
        truth = labels != NORMAL
        row: dict = {"trial": t}
        for name, det in detectors.items():
            verdicts = [det.detect(p) for p in test.patterns]
            flagged = np.array([v.anomaly for v in verdicts])
            scores = np.array([v.score for v in verdicts])
            res = f1(flagged, truth)
            row[f"{name}_precision"] = res.precision
            row[f"{name}_recall"] = res.recall
            row[f"{name}_f1"] = res.f1
            groups = {}
            for lab, group in NOVELTY_GROUPS.items():
                mask = labels == lab
                if mask.any():
                    row[f"{name}_flagged_{group}"] = float(flagged[mask].mean())
                    groups[group] = scores[mask]
            for group, b in score_summary(groups, det.threshold).items():
                row[f"{name}_median_{group}"] = b.median
            boxes += boxplot_rows(score_summary(groups, det.threshold), trial=t, scorer=name)
        rows.append(row)
    agg_keys = [k for k in rows[0] if k != "trial" and "_median_" not in k] if rows else []
    return {
        "scenario": "novelty1",
        "seed": seed,
        "q": q,
        "Q": Q,
        "thresholds": {s: d.threshold for s, d in detectors.items()},
        "trials": rows,
        "aggregate": {k: mean_std([r[k] for r in rows]) for k in agg_keys},
        "boxplot": boxes,
        "model": model.to_dict(),
    }


def cross_validate_classification(
    dataset: Dataset, k: int = 4, seed: int = 0, cfg: FitConfig | None = None
) -> dict:
    """k-fold accuracy of the RFS and naive-Bayes classifiers on a labeled dataset."""
    if dataset.class_count < 2:
        raise DataValidationError("cross-validated classification needs >= 2 classes")
    rows = []
    for fold, (train, test) in enumerate(kfold(dataset, k, seed)):
        models = fit_class_models(train, cfg)
        truth = test.labels
        rows.append({
            "fold": fold,
            "rfs_accuracy": accuracy(BagClassifier(models, scorer="rfs").predict(test.patterns), truth),
            "nb_accuracy": accuracy(BagClassifier(models, scorer="nb").predict(test.patterns), truth),
        })
    return {
        "protocol": f"{k}-fold",
        "seed": seed,
        "folds": rows,
        "aggregate": {
            "rfs_accuracy": mean_std([r["rfs_accuracy"] for r in rows]),
            "nb_accuracy": mean_std([r["nb_accuracy"] for r in rows]),
        },
    }
