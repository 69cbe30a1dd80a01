"""SGD with step-decayed learning rate and optional global-norm clipping."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from decimal import Decimal

import numpy as np

from ..errors import ConfigError, TrainingError


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 0.02
    decay_factor: float = 0.7
    decay_every: int = 60
    epochs: int = 180
    batch_size: int = 32
    grad_clip: float | None = 5.0
    seed: int = 0

    def __post_init__(self):
        if not self.lr0 > 0:
            raise ConfigError("lr0 must be positive")
        if not 0 < self.decay_factor <= 1:
            raise ConfigError("decay_factor must lie in (0, 1]")
        if self.decay_every < 1 or self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("decay_every and batch_size must be >= 1, epochs >= 0")
        if self.grad_clip is not None and not self.grad_clip > 0:
            raise ConfigError("grad_clip must be positive or null")

    def to_dict(self) -> dict:
        return asdict(self)


def learning_rate(epoch: int, cfg: TrainConfig) -> float:
    """``lr0 * decay_factor ** (epoch // decay_every)``.

    The product is formed in decimal from the configured values and rounded
    once, so 0.02 decayed by 0.7 gives exactly 0.014 rather than
    0.013999999999999999.
    """
    k = epoch // cfg.decay_every
    return float(Decimal(repr(cfg.lr0)) * Decimal(repr(cfg.decay_factor)) ** k)


def global_norm(grads: dict[str, np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_by_global_norm(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads
    scale = max_norm / norm
    return {k: g * scale for k, g in grads.items()}


def sgd_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], epoch: int,
             cfg: TrainConfig) -> dict[str, np.ndarray]:
    """Return ``params - lr(epoch) * grads`` (after clipping, if configured)."""
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise TrainingError(f"gradient {name} has shape {g.shape}, param {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in {name} at epoch {epoch}")
    if cfg.grad_clip is not None:
        grads = clip_by_global_norm(grads, cfg.grad_clip)
    lr = learning_rate(epoch, cfg)
    return {name: p - lr * grads[name] if name in grads else p for name, p in params.items()}
