"""Late fusion of stream posteriors, prediction and evaluation metrics.

Functions accept either :class:`ClassPosterior` objects or plain arrays
whose last axis indexes classes; arrays in, arrays out.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidInputError
from .posterior import ClassPosterior


def _probs(p) -> np.ndarray:
    return p.probs if isinstance(p, ClassPosterior) else np.asarray(p, dtype=np.float64)


@dataclass(frozen=True)
class FusionConfig:
    lam: float = 0.9     # weight of the temporal stream
    tau: int | None = None  # spatial window; None means T // 4

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise InvalidInputError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.tau is not None and self.tau < 1:
            raise InvalidInputError(f"tau must be >= 1, got {self.tau}")

    def window(self, T: int) -> int:
        tau = max(1, T // 4) if self.tau is None else self.tau
        if tau > T:
            raise InvalidInputError(f"tau {tau} exceeds sequence length {T}")
        return tau


def fuse(p_temporal, p_spatial, lam: float):
    """``lam * p_temporal + (1 - lam) * p_spatial``.

    The endpoints return the selected input unchanged so that single-stream
    predictions are reproduced bit for bit.
    """
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError(f"lambda must lie in [0, 1], got {lam}")
    a, b = _probs(p_temporal), _probs(p_spatial)
    if a.shape != b.shape:
        raise InvalidInputError(f"posterior shapes differ: {a.shape} vs {b.shape}")
    if lam == 1.0:
        out = a.copy()
    elif lam == 0.0:
        out = b.copy()
    else:
        out = lam * a + (1.0 - lam) * b
    if isinstance(p_temporal, ClassPosterior):
        return ClassPosterior(out)
    return out


def average_posteriors(posteriors: Sequence):
    """Elementwise mean (two persons of one sample, or spatial window centers)."""
    if len(posteriors) == 0:
        raise InvalidInputError("cannot average an empty list of posteriors")
    arrs = [_probs(p) for p in posteriors]
    if any(a.shape != arrs[0].shape for a in arrs):
        raise InvalidInputError("posteriors have different class counts")
    out = arrs[0].copy() if len(arrs) == 1 else np.mean(arrs, axis=0)
    return ClassPosterior(out) if isinstance(posteriors[0], ClassPosterior) else out


def group_average(probs: np.ndarray, groups: np.ndarray, n_groups: int) -> np.ndarray:
    """Mean posterior of each group; ``groups[k]`` is the group of row ``k``."""
    probs = np.asarray(probs, dtype=np.float64)
    groups = np.asarray(groups, dtype=np.int64)
    sums = np.zeros((n_groups, probs.shape[-1]))
    np.add.at(sums, groups, probs)
    counts = np.bincount(groups, minlength=n_groups)
    if np.any(counts == 0):
        raise InvalidInputError("every group needs at least one posterior")
    return sums / counts[:, None]


def predict(post) -> np.ndarray | int:
    """Argmax class; ties go to the lowest index."""
    p = _probs(post)
    idx = np.argmax(p, axis=-1)
    return int(idx) if p.ndim == 1 else idx


@dataclass
class EvalReport:
    accuracy: float
    per_class_accuracy: np.ndarray
    confusion: np.ndarray  # rows: true class, columns: predicted class
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray

    @property
    def macro_precision(self) -> float:
        return float(self.precision.mean())

    @property
    def macro_recall(self) -> float:
        return float(self.recall.mean())

    @property
    def macro_f1(self) -> float:
        return float(self.f1.mean())

    def write_csv(self, out_dir: str | Path, class_names: Sequence[str] | None = None) -> None:
        """Write ``confusion.csv`` and ``metrics.csv`` (per-class rows plus a macro row)."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        C = len(self.confusion)
        names = list(class_names) if class_names is not None else [str(c) for c in range(C)]
        with open(out_dir / "confusion.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["true\\pred"] + names)
            for name, row in zip(names, self.confusion):
                w.writerow([name] + [int(v) for v in row])
        with open(out_dir / "metrics.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["class", "support", "accuracy", "precision", "recall", "f1"])
            support = self.confusion.sum(axis=1)
            for c in range(C):
                w.writerow([names[c], int(support[c]), repr(float(self.per_class_accuracy[c])),
                            repr(float(self.precision[c])), repr(float(self.recall[c])),
                            repr(float(self.f1[c]))])
            w.writerow(["macro", int(support.sum()), repr(self.accuracy),
                        repr(self.macro_precision), repr(self.macro_recall),
                        repr(self.macro_f1)])


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den != 0)
    return out


def evaluate(predictions, labels, class_count: int) -> EvalReport:
    """Confusion matrix and per-class / macro metrics; 0/0 is taken as 0."""
    pred = np.asarray(predictions, dtype=np.int64)
    true = np.asarray(labels, dtype=np.int64)
    if pred.shape != true.shape:
        raise InvalidInputError(f"{pred.size} predictions for {true.size} labels")
    conf = np.zeros((class_count, class_count), dtype=np.int64)
    np.add.at(conf, (true, pred), 1)
    tp = np.diag(conf).astype(np.float64)
    support = conf.sum(axis=1).astype(np.float64)
    predicted = conf.sum(axis=0).astype(np.float64)
    precision = _safe_div(tp, predicted)
    recall = _safe_div(tp, support)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    accuracy = float(tp.sum() / true.size) if true.size else 0.0
    return EvalReport(accuracy, recall.copy(), conf, precision, recall, f1)


def sweep_lambda(p_temporal, p_spatial, labels, lambdas: Sequence[float],
                 class_count: int | None = None) -> list[tuple[float, float]]:
    """Fused accuracy for each ``lambda``; returns ``[(lambda, accuracy), ...]``."""
    a, b = _probs(p_temporal), _probs(p_spatial)
    C = a.shape[-1] if class_count is None else class_count
    return [(float(lam), evaluate(predict(fuse(a, b, lam)), labels, C).accuracy)
            for lam in lambdas]


def write_sweep_csv(rows: Sequence[tuple[float, float]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "accuracy"])
        for lam, acc in rows:
            w.writerow([repr(lam), repr(acc)])
