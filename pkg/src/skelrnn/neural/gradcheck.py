"""Central finite-difference verification of the analytic gradients."""
from __future__ import annotations

from typing import Callable

import numpy as np

from ..graphs import limb_graph
from ..serialize import build_spatial_batch, traversal_order
from ..skeleton import SkeletonGraph, SkeletonSequence
from .network import NetworkSpec, build_spec, init_params, loss_and_grads

TOLERANCE = 1e-4


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return np.abs(analytic - numeric) / denom


def numerical_gradients(loss_fn: Callable[[dict], float], params: dict[str, np.ndarray],
                        eps: float = 1e-5) -> dict[str, np.ndarray]:
    """Perturb every entry of every parameter by +-eps and difference the loss."""
    out = {}
    for name, arr in params.items():
        g = np.zeros_like(arr)
        flat, gflat = arr.reshape(-1), g.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + eps
            lp = loss_fn(params)
            flat[k] = orig - eps
            lm = loss_fn(params)
            flat[k] = orig
            gflat[k] = (lp - lm) / (2 * eps)
        out[name] = g
    return out


def gradient_check(spec: NetworkSpec, params: dict, X: np.ndarray, lengths: np.ndarray,
                   labels: np.ndarray, eps: float = 1e-5,
                   corrupt: str | None = None) -> dict[str, float]:
    """Max relative error per parameter tensor.

    ``corrupt`` names a tensor whose analytic gradient is deliberately
    perturbed; it exists so callers can confirm a broken gradient is caught.
    """
    params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}
    _, analytic, _ = loss_and_grads(spec, params, X, lengths, labels)
    if corrupt is not None:
        analytic[corrupt] = analytic[corrupt] + 1e-2
    numeric = numerical_gradients(
        lambda p: loss_and_grads(spec, p, X, lengths, labels)[0], params, eps)
    return {k: float(relative_error(analytic[k], numeric[k]).max()) for k in params}


def _path3() -> SkeletonGraph:
    return SkeletonGraph(("a", "root", "b"), ((0, 1), (1, 2)),
                         {"trunk": (0, 1, 2)}, root_joint=1, center_joints=(1,))


def gradcheck_problem(variant: str, structure: str, *, T: int = 5, class_count: int = 3,
                      batch: int = 3, seed: int = 0):
    """Small random problem ``(spec, params, X, lengths, labels)`` for a variant.

    Temporal variants see a 6-joint stick figure over ``T`` frames, with one
    sequence shortened so padding and readout-at-length are exercised. The
    spatial variant walks the Euler tour of a 3-joint path (``T = 5`` steps)
    with a two-frame window.
    """
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, class_count, size=batch)
    if variant == "spatial":
        graph = _path3()
        order = traversal_order(graph)
        seqs = [SkeletonSequence(rng.normal(size=(4, 3, 3)), 4) for _ in range(batch)]
        X = build_spatial_batch(seqs, order, 2, rng.integers(0, 4, size=batch))
        spec = build_spec(structure, X.shape[2], class_count, spatial=True)
        lengths = np.full(batch, X.shape[1])
    else:
        graph = limb_graph(6)
        X = rng.normal(size=(batch, T, graph.joint_count * 3))
        lengths = np.full(batch, T)
        lengths[-1] = max(1, T - 2)
        X[-1, lengths[-1]:] = 0.0
        spec = build_spec(structure, X.shape[2], class_count, graph=graph)
        if spec.variant != variant:
            raise ValueError(f"structure {structure!r} does not describe a {variant} network")
    params = init_params(spec, rng)
    # nonzero biases and peepholes so every term of the gate equations is live
    for k in params:
        if k.endswith((".b", ".peep")):
            params[k] = params[k] + rng.uniform(-0.5, 0.5, size=params[k].shape)
    return spec, params, X, lengths, labels
