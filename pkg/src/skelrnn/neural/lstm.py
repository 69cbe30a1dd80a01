"""Peephole LSTM layer: forward pass and backpropagation through time.

Gate pre-activations are stored stacked in the order input, forget, cell,
output (``i, f, g, o``). Peephole weights are diagonal, one vector per
gate that reads the cell state (``i, f, o``)::

    i_t = sigmoid(Wx_i x_t + Wh_i h_{t-1} + p_i * c_{t-1} + b_i)
    f_t = sigmoid(Wx_f x_t + Wh_f h_{t-1} + p_f * c_{t-1} + b_f)
    c_t = f_t * c_{t-1} + i_t * tanh(Wx_g x_t + Wh_g h_{t-1} + b_g)
    o_t = sigmoid(Wx_o x_t + Wh_o h_{t-1} + p_o * c_t + b_o)
    h_t = o_t * tanh(c_t)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError

GATES = ("i", "f", "g", "o")
PEEPHOLES = ("i", "f", "o")
PARAM_NAMES = ("Wx", "Wh", "peep", "b")


def sigmoid(x: np.ndarray) -> np.ndarray:
    # 0.5 * (1 + tanh(x/2)) never overflows
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class LstmLayerParams:
    """Weights of one layer.

    Attributes:
        Wx: ``(4H, input_dim)`` input weights, rows grouped by gate i, f, g, o.
        Wh: ``(4H, H)`` recurrent weights.
        peep: ``(3, H)`` diagonal peephole weights for gates i, f, o.
        b: ``(4H,)`` biases.
    """

    Wx: np.ndarray
    Wh: np.ndarray
    peep: np.ndarray
    b: np.ndarray

    @property
    def hidden(self) -> int:
        return self.Wh.shape[1]

    @property
    def input_dim(self) -> int:
        return self.Wx.shape[1]

    def gate(self, name: str, which: str = "Wx") -> np.ndarray:
        """View of one gate's block, e.g. ``gate("f", "b")`` is the forget bias."""
        H = self.hidden
        if which == "peep":
            k = PEEPHOLES.index(name)
            return self.peep[k]
        k = GATES.index(name)
        return getattr(self, which)[k * H:(k + 1) * H]

    def check(self) -> None:
        H, D = self.hidden, self.input_dim
        shapes = {"Wx": (4 * H, D), "Wh": (4 * H, H), "peep": (3, H), "b": (4 * H,)}
        for name, shape in shapes.items():
            arr = getattr(self, name)
            if arr.shape != shape:
                raise InvalidInputError(f"{name} has shape {arr.shape}, expected {shape}")
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"{name} has non-finite entries")

    @classmethod
    def from_params(cls, params: dict[str, np.ndarray], prefix: str) -> "LstmLayerParams":
        return cls(*(params[f"{prefix}.{n}"] for n in PARAM_NAMES))


def _cell(a: np.ndarray, c_prev: np.ndarray, peep: np.ndarray):
    H = c_prev.shape[-1]
    i = sigmoid(a[..., :H] + peep[0] * c_prev)
    f = sigmoid(a[..., H:2 * H] + peep[1] * c_prev)
    g = np.tanh(a[..., 2 * H:3 * H])
    c = f * c_prev + i * g
    o = sigmoid(a[..., 3 * H:] + peep[2] * c)
    tc = np.tanh(c)
    return i, f, g, o, c, tc, o * tc


def lstm_step(p: LstmLayerParams, x_t: np.ndarray, h_prev: np.ndarray,
              c_prev: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One time step; accepts single vectors or a leading batch axis."""
    x_t, h_prev, c_prev = (np.asarray(v, dtype=np.float64) for v in (x_t, h_prev, c_prev))
    if x_t.shape[-1] != p.input_dim or h_prev.shape[-1] != p.hidden or c_prev.shape != h_prev.shape:
        raise InvalidInputError(
            f"step shapes x={x_t.shape} h={h_prev.shape} c={c_prev.shape} do not match "
            f"layer ({p.input_dim} -> {p.hidden})"
        )
    a = x_t @ p.Wx.T + h_prev @ p.Wh.T + p.b
    *_, c, _, h = _cell(a, c_prev, p.peep)
    return h, c


@dataclass
class LstmCache:
    X: np.ndarray       # (N, T, In)
    gates: np.ndarray   # (T, 4, N, H): i, f, g, o activations
    C: np.ndarray       # (T+1, N, H); C[0] is the zero initial state
    TC: np.ndarray      # (T, N, H) tanh(c_t)
    H: np.ndarray       # (T+1, N, H); H[0] is the zero initial state


def lstm_forward_batch(p: LstmLayerParams, X: np.ndarray) -> tuple[np.ndarray, LstmCache]:
    """Run the layer over ``X`` of shape ``(N, T, In)`` from zero state.

    Returns hidden states ``(N, T, H)`` and the cache for the backward pass.
    """
    N, T, D = X.shape
    if D != p.input_dim:
        raise InvalidInputError(f"input has {D} features, layer expects {p.input_dim}")
    Hd = p.hidden
    AX = X @ p.Wx.T + p.b                     # (N, T, 4H)
    gates = np.empty((T, 4, N, Hd))
    C = np.zeros((T + 1, N, Hd))
    TC = np.empty((T, N, Hd))
    Hs = np.zeros((T + 1, N, Hd))
    for t in range(T):
        a = AX[:, t] + Hs[t] @ p.Wh.T
        i, f, g, o, C[t + 1], TC[t], Hs[t + 1] = _cell(a, C[t], p.peep)
        gates[t, 0], gates[t, 1], gates[t, 2], gates[t, 3] = i, f, g, o
    return Hs[1:].transpose(1, 0, 2), LstmCache(X, gates, C, TC, Hs)


def lstm_backward_batch(p: LstmLayerParams, cache: LstmCache,
                        dH: np.ndarray) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """Backpropagate ``dH`` (gradient w.r.t. every output state, ``(N, T, H)``).

    Returns the input gradient ``(N, T, In)`` and parameter gradients keyed
    by ``Wx``, ``Wh``, ``peep`` and ``b``.
    """
    T = cache.gates.shape[0]
    N, Hd = dH.shape[0], p.hidden
    pi, pf, po = p.peep
    dA = np.empty((T, N, 4 * Hd))
    dpeep = np.zeros((3, Hd))
    dh_next = np.zeros((N, Hd))
    dc_next = np.zeros((N, Hd))
    for t in range(T - 1, -1, -1):
        i, f, g, o = cache.gates[t]
        c, c_prev, tc = cache.C[t + 1], cache.C[t], cache.TC[t]
        dh = dH[:, t] + dh_next
        dao = dh * tc * o * (1.0 - o)
        dc = dc_next + dh * o * (1.0 - tc * tc) + dao * po
        dai = dc * g * i * (1.0 - i)
        daf = dc * c_prev * f * (1.0 - f)
        dag = dc * i * (1.0 - g * g)
        dpeep[0] += np.sum(dai * c_prev, axis=0)
        dpeep[1] += np.sum(daf * c_prev, axis=0)
        dpeep[2] += np.sum(dao * c, axis=0)
        dA[t, :, :Hd], dA[t, :, Hd:2 * Hd] = dai, daf
        dA[t, :, 2 * Hd:3 * Hd], dA[t, :, 3 * Hd:] = dag, dao
        dh_next = dA[t] @ p.Wh
        dc_next = dc * f + dai * pi + daf * pf

    dA_flat = dA.transpose(1, 0, 2).reshape(N * T, 4 * Hd)
    grads = {
        "Wx": dA_flat.T @ cache.X.reshape(N * T, -1),
        "Wh": dA_flat.T @ cache.H[:-1].transpose(1, 0, 2).reshape(N * T, Hd),
        "peep": dpeep,
        "b": dA_flat.sum(axis=0),
    }
    dX = (dA_flat @ p.Wx).reshape(N, T, -1)
    return dX, grads


def lstm_forward(p: LstmLayerParams, inputs: np.ndarray, valid_length: int) -> np.ndarray:
    """Hidden states ``(T, H)`` for one sequence of shape ``(T, input_dim)``.

    Classifiers read the state at row ``valid_length - 1``; rows after it
    depend on padding only.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    if not 1 <= valid_length <= inputs.shape[0]:
        raise InvalidInputError(f"valid_length {valid_length} outside [1, {inputs.shape[0]}]")
    H, _ = lstm_forward_batch(p, inputs[None])
    return H[0]
