"""Stacked, hierarchical and spatial LSTM classifiers with a softmax head.

Parameters live in a flat ``dict[str, np.ndarray]`` keyed by dotted names
(``lstm0.Wx``, ``part.left-arm.lstm0.peep``, ``body.lstm0.b``, ``head.W``).
Everything that touches parameters generically (SGD, checkpoints, gradient
checks) works on that dict.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ConfigError, InvalidInputError
from ..posterior import ClassPosterior, log_softmax, softmax
from ..skeleton import PART_NAMES, SkeletonGraph
from .lstm import (LstmCache, LstmLayerParams, PARAM_NAMES, lstm_backward_batch,
                   lstm_forward_batch)

VARIANTS = ("stacked", "hierarchical", "spatial")


@dataclass(frozen=True)
class NetworkSpec:
    """Declarative description of one stream.

    ``layer_widths`` drives the stacked and spatial variants. The
    hierarchical variant uses ``part_widths`` (one LSTM stack per body part)
    followed by ``body_widths``; ``part_joints`` lists the joints of each of
    the five parts in canonical order and ``coord_dim`` the coordinates per
    joint, which together fix how input columns are routed to parts.
    """

    variant: str
    input_dim: int
    class_count: int
    layer_widths: tuple[int, ...] = ()
    part_widths: tuple[int, ...] = ()
    body_widths: tuple[int, ...] = ()
    part_joints: tuple[tuple[int, ...], ...] = ()
    coord_dim: int = 3

    def __post_init__(self):
        object.__setattr__(self, "layer_widths", tuple(int(w) for w in self.layer_widths))
        object.__setattr__(self, "part_widths", tuple(int(w) for w in self.part_widths))
        object.__setattr__(self, "body_widths", tuple(int(w) for w in self.body_widths))
        object.__setattr__(self, "part_joints",
                           tuple(tuple(int(j) for j in p) for p in self.part_joints))
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.input_dim < 1 or self.class_count < 1:
            raise ConfigError("input_dim and class_count must be positive")
        if self.variant == "hierarchical":
            if not self.part_widths or not self.body_widths:
                raise ConfigError("hierarchical spec needs part and body widths")
            if len(self.part_joints) != len(PART_NAMES):
                raise ConfigError("hierarchical spec needs joints for all five parts")
            joints = sorted(j for p in self.part_joints for j in p)
            if joints != list(range(len(joints))) or len(joints) * self.coord_dim != self.input_dim:
                raise ConfigError(
                    f"part partition ({len(joints)} joints x {self.coord_dim}) is inconsistent "
                    f"with input_dim {self.input_dim}"
                )
            widths = self.part_widths + self.body_widths
        else:
            if not self.layer_widths:
                raise ConfigError(f"{self.variant} spec needs layer widths")
            widths = self.layer_widths
        if any(w < 1 for w in widths):
            raise ConfigError("layer widths must be positive")

    @property
    def part_input_dims(self) -> tuple[int, ...]:
        return tuple(len(p) * self.coord_dim for p in self.part_joints)

    @property
    def structure(self) -> str:
        """Compact name, e.g. ``R512-512`` or ``P128,B512``."""
        join = lambda ws: "-".join(str(w) for w in ws)  # noqa: E731
        if self.variant == "hierarchical":
            return f"P{join(self.part_widths)},B{join(self.body_widths)}"
        return f"R{join(self.layer_widths)}"

    def to_dict(self) -> dict:
        return {
            "variant": self.variant, "input_dim": self.input_dim,
            "class_count": self.class_count, "layer_widths": list(self.layer_widths),
            "part_widths": list(self.part_widths), "body_widths": list(self.body_widths),
            "part_joints": [list(p) for p in self.part_joints], "coord_dim": self.coord_dim,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(**d)


_STRUCT_RE = re.compile(r"^\s*R(\d+(?:-\d+)*)\s*$|^\s*P(\d+(?:-\d+)*)\s*,\s*B(\d+(?:-\d+)*)\s*$")


def parse_structure(text: str) -> tuple[str, tuple[int, ...], tuple[int, ...]]:
    """Parse ``R512-512`` or ``P128-128, B512``.

    Returns ``("stacked", widths, ())`` or ``("hierarchical", part, body)``.
    """
    m = _STRUCT_RE.match(text)
    if not m:
        raise ConfigError(f"cannot parse network structure {text!r}")
    ints = lambda s: tuple(int(w) for w in s.split("-"))  # noqa: E731
    if m.group(1):
        return "stacked", ints(m.group(1)), ()
    return "hierarchical", ints(m.group(2)), ints(m.group(3))


def build_spec(structure: str, input_dim: int, class_count: int, *,
               graph: SkeletonGraph | None = None, coord_dim: int = 3,
               spatial: bool = False) -> NetworkSpec:
    variant, a, b = parse_structure(structure)
    if variant == "stacked":
        return NetworkSpec("spatial" if spatial else "stacked", input_dim, class_count,
                           layer_widths=a)
    if spatial:
        raise ConfigError("the spatial stream takes a stacked structure (R...)")
    if graph is None:
        raise ConfigError("hierarchical structure needs a skeleton graph")
    return NetworkSpec("hierarchical", input_dim, class_count, part_widths=a, body_widths=b,
                       part_joints=tuple(graph.parts[n] for n in PART_NAMES),
                       coord_dim=coord_dim)


# ---------------------------------------------------------------- parameters

def _stacks(spec: NetworkSpec) -> list[tuple[str, int, tuple[int, ...]]]:
    """(prefix, input_dim, widths) of every LSTM stack, in execution order."""
    if spec.variant != "hierarchical":
        return [("", spec.input_dim, spec.layer_widths)]
    stacks = [(f"part.{name}.", dim, spec.part_widths)
              for name, dim in zip(PART_NAMES, spec.part_input_dims) if dim > 0]
    body_in = spec.part_widths[-1] * len(stacks)
    return stacks + [("body.", body_in, spec.body_widths)]


def _readout_width(spec: NetworkSpec) -> int:
    return spec.body_widths[-1] if spec.variant == "hierarchical" else spec.layer_widths[-1]


def param_shapes(spec: NetworkSpec) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    for prefix, d_in, widths in _stacks(spec):
        for layer, H in enumerate(widths):
            name = f"{prefix}lstm{layer}"
            shapes.update({f"{name}.Wx": (4 * H, d_in), f"{name}.Wh": (4 * H, H),
                           f"{name}.peep": (3, H), f"{name}.b": (4 * H,)})
            d_in = H
    shapes["head.W"] = (spec.class_count, _readout_width(spec))
    shapes["head.b"] = (spec.class_count,)
    return shapes


def count_params(spec: NetworkSpec) -> int:
    return int(sum(np.prod(s) for s in param_shapes(spec).values()))


def init_params(spec: NetworkSpec, seed: int | np.random.Generator = 0) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases with forget-gate bias 1.

    A weight block mapping ``fan_in`` to ``fan_out`` units is drawn from
    ``U(-a, a)`` with ``a = sqrt(6 / (fan_in + fan_out))``; each gate block
    counts separately and peepholes are treated as ``H x H`` diagonals.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}
    for name, shape in param_shapes(spec).items():
        kind = name.rsplit(".", 1)[1]
        if kind == "b":
            arr = np.zeros(shape)
            if not name.startswith("head."):
                H = shape[0] // 4
                arr[H:2 * H] = 1.0
        elif kind == "peep":
            H = shape[1]
            a = np.sqrt(6.0 / (2 * H))
            arr = rng.uniform(-a, a, size=shape)
        else:
            fan_out = shape[0] // 4 if name.endswith((".Wx", ".Wh")) else shape[0]
            a = np.sqrt(6.0 / (shape[1] + fan_out))
            arr = rng.uniform(-a, a, size=shape)
        params[name] = arr
    return params


# ---------------------------------------------------------------- forward / backward

@dataclass
class ForwardCache:
    lengths: np.ndarray
    readout: np.ndarray
    stacks: list[list[tuple[LstmLayerParams, LstmCache]]] = field(default_factory=list)


def _layers(params: dict, prefix: str, widths: Sequence[int]) -> list[LstmLayerParams]:
    return [LstmLayerParams.from_params(params, f"{prefix}lstm{k}") for k in range(len(widths))]


def _run_stack(layers: list[LstmLayerParams], X: np.ndarray):
    caches = []
    for p in layers:
        X, cache = lstm_forward_batch(p, X)
        caches.append((p, cache))
    return X, caches


def _back_stack(caches, dH: np.ndarray, grads: dict, prefix: str) -> np.ndarray:
    for k in range(len(caches) - 1, -1, -1):
        p, cache = caches[k]
        dH, g = lstm_backward_batch(p, cache, dH)
        for n in PARAM_NAMES:
            grads[f"{prefix}lstm{k}.{n}"] = g[n]
    return dH


def _check_batch(spec: NetworkSpec, X: np.ndarray, lengths: np.ndarray):
    if X.ndim != 3 or X.shape[2] != spec.input_dim:
        raise InvalidInputError(f"batch shape {X.shape} does not match input_dim {spec.input_dim}")
    if lengths.shape != (X.shape[0],) or np.any(lengths < 1) or np.any(lengths > X.shape[1]):
        raise InvalidInputError("every valid length must lie in [1, T]")


def forward(spec: NetworkSpec, params: dict, X: np.ndarray,
            lengths: np.ndarray | None = None) -> tuple[np.ndarray, ForwardCache]:
    """Logits ``(N, C)`` for a batch ``X`` of shape ``(N, T, input_dim)``.

    Each sequence is read out at its last valid step. Steps past the longest
    valid length in the batch are dropped before the recurrence, so padding
    never influences the result.
    """
    X = np.asarray(X, dtype=np.float64)
    N, T = X.shape[:2]
    lengths = np.full(N, T) if lengths is None else np.asarray(lengths, dtype=np.int64)
    _check_batch(spec, X, lengths)
    X = X[:, :int(lengths.max())]
    cache = ForwardCache(lengths, np.empty(0))

    if spec.variant == "hierarchical":
        D = spec.coord_dim
        outs = []
        for (prefix, _, widths), joints in zip(
                _stacks(spec)[:-1], [p for p in spec.part_joints if p]):
            cols = np.concatenate([np.arange(j * D, (j + 1) * D) for j in joints])
            out, caches = _run_stack(_layers(params, prefix, widths), X[:, :, cols])
            outs.append(out)
            cache.stacks.append(caches)
        top, caches = _run_stack(_layers(params, "body.", spec.body_widths),
                                 np.concatenate(outs, axis=2))
    else:
        top, caches = _run_stack(_layers(params, "", spec.layer_widths), X)
    cache.stacks.append(caches)

    cache.readout = top[np.arange(N), lengths - 1]
    logits = cache.readout @ params["head.W"].T + params["head.b"]
    return logits, cache


def backward(spec: NetworkSpec, params: dict, cache: ForwardCache,
             dlogits: np.ndarray) -> dict[str, np.ndarray]:
    """Parameter gradients given the loss gradient w.r.t. the logits."""
    grads: dict[str, np.ndarray] = {
        "head.W": dlogits.T @ cache.readout,
        "head.b": dlogits.sum(axis=0),
    }
    N = dlogits.shape[0]
    top_caches = cache.stacks[-1]
    T = top_caches[0][1].X.shape[1]
    dTop = np.zeros((N, T, _readout_width(spec)))
    dTop[np.arange(N), cache.lengths - 1] = dlogits @ params["head.W"]

    if spec.variant == "hierarchical":
        dBody = _back_stack(top_caches, dTop, grads, "body.")
        offset = 0
        for (prefix, _, widths), caches in zip(_stacks(spec)[:-1], cache.stacks[:-1]):
            H = widths[-1]
            _back_stack(caches, dBody[:, :, offset:offset + H], grads, prefix)
            offset += H
    else:
        _back_stack(top_caches, dTop, grads, "")
    return {name: grads[name] for name in params}


def loss_and_grads(spec: NetworkSpec, params: dict, X: np.ndarray, lengths: np.ndarray,
                   labels: np.ndarray, weights: np.ndarray | None = None):
    """Mean cross-entropy over the batch, its gradients and the posteriors.

    ``weights`` (default all ones) multiplies each example's loss before
    averaging by their sum.
    """
    labels = np.asarray(labels, dtype=np.int64)
    logits, cache = forward(spec, params, X, lengths)
    N = logits.shape[0]
    if np.any(labels < 0) or np.any(labels >= spec.class_count):
        raise InvalidInputError("label out of range")
    w = np.ones(N) if weights is None else np.asarray(weights, dtype=np.float64)
    logp = log_softmax(logits)
    loss = float(-(w * logp[np.arange(N), labels]).sum() / w.sum())
    probs = np.exp(logp)
    dlogits = probs.copy()
    dlogits[np.arange(N), labels] -= 1.0
    dlogits *= (w / w.sum())[:, None]
    return loss, backward(spec, params, cache, dlogits), probs


def predict_proba(spec: NetworkSpec, params: dict, X: np.ndarray,
                  lengths: np.ndarray | None = None, batch_size: int = 256) -> np.ndarray:
    """Posterior matrix ``(N, C)``, evaluated in fixed-size chunks."""
    out = []
    for s in range(0, len(X), batch_size):
        sl = slice(s, s + batch_size)
        logits, _ = forward(spec, params, X[sl], None if lengths is None else lengths[sl])
        out.append(softmax(logits))
    return np.concatenate(out) if out else np.zeros((0, spec.class_count))


def forward_stacked(spec: NetworkSpec, params: dict, x: np.ndarray,
                    valid_length: int | None = None) -> ClassPosterior:
    """Posterior of one ``(T, input_dim)`` sequence through a stacked or spatial stream."""
    if spec.variant not in ("stacked", "spatial"):
        raise ConfigError(f"forward_stacked got a {spec.variant} spec")
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0] if valid_length is None else valid_length
    logits, _ = forward(spec, params, x[None], np.array([n]))
    return ClassPosterior.from_logits(logits[0])


def forward_hierarchical(spec: NetworkSpec, params: dict, x: np.ndarray,
                         valid_length: int | None = None,
                         graph: SkeletonGraph | None = None) -> ClassPosterior:
    """Posterior of one sequence through the part-then-body hierarchy."""
    if spec.variant != "hierarchical":
        raise ConfigError(f"forward_hierarchical got a {spec.variant} spec")
    if graph is not None and tuple(graph.parts[n] for n in PART_NAMES) != spec.part_joints:
        raise ConfigError("graph partition differs from the one this network was built for")
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0] if valid_length is None else valid_length
    logits, _ = forward(spec, params, x[None], np.array([n]))
    return ClassPosterior.from_logits(logits[0])
