from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


@dataclass(frozen=True, eq=False)
class ClassPosterior:
    """Class probability vector, optionally with the logits it came from."""

    probs: np.ndarray
    logits: np.ndarray | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise InvalidInputError("posterior must be a non-empty vector")
        if np.any(p < 0) or np.any(p > 1) or abs(p.sum() - 1.0) > 1e-9:
            raise InvalidInputError(f"not a probability vector: {p}")
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_logits(cls, logits) -> "ClassPosterior":
        logits = np.asarray(logits, dtype=np.float64)
        return cls(softmax(logits), logits)

    @property
    def class_count(self) -> int:
        return self.probs.size


def cross_entropy(post: ClassPosterior, label: int) -> float:
    """Negative log-probability of ``label``; uses the logits when present."""
    if not 0 <= label < post.class_count:
        raise InvalidInputError(f"label {label} outside [0, {post.class_count})")
    if post.logits is not None:
        return float(-log_softmax(post.logits)[label])
    p = post.probs[label]
    return float("inf") if p == 0 else float(-np.log(p))
