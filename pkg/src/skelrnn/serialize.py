"""Turn a skeleton tree into joint sequences for the spatial stream."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, SerializationError
from .skeleton import PART_NAMES, SkeletonGraph, SkeletonSequence


@dataclass(frozen=True)
class JointOrder:
    order: tuple[int, ...]
    kind: str  # "chain" or "traversal"

    def __len__(self) -> int:
        return len(self.order)


@dataclass(frozen=True)
class SpatialInput:
    steps: np.ndarray  # (len(order), window * D)
    center_frame: int
    window: int


def _part_path(graph: SkeletonGraph, name: str) -> list[int]:
    joints = graph.parts[name]
    members = set(joints)
    inner = {j: [v for v in graph.neighbors(j) if v in members] for j in joints}
    n_edges = sum(len(v) for v in inner.values()) // 2
    ends = sorted(j for j, nb in inner.items() if len(nb) <= 1)
    if (n_edges != len(joints) - 1 or any(len(nb) > 2 for nb in inner.values())
            or (len(joints) > 1 and len(ends) != 2)):
        raise SerializationError(f"part {name!r} is not a path: joints {sorted(joints)}")

    dist = graph.distances_from(graph.root_joint)
    if graph.root_joint in members:
        # trunk runs top-down so it hands over to the legs
        start = min(ends, key=lambda j: (-dist[j], j))
    else:
        start = min(ends, key=lambda j: (dist[j], j))
    path, prev = [start], None
    while len(path) < len(joints):
        nxt = next(v for v in inner[path[-1]] if v != prev)
        prev = path[-1]
        path.append(nxt)
    return path


def chain_order(graph: SkeletonGraph) -> JointOrder:
    """Concatenate per-part paths: left arm, right arm, trunk, left leg, right leg.

    Each part must induce a simple path in the graph; it is walked from the
    end nearest the root (the trunk from its far end toward the root side).
    """
    order: list[int] = []
    for name in PART_NAMES:
        if graph.parts[name]:
            order += _part_path(graph, name)
    return JointOrder(tuple(order), "chain")


def _child_order(graph: SkeletonGraph) -> dict[int, list[int]]:
    rank = {j: PART_NAMES.index(graph.part_of(j)) for j in range(graph.joint_count)}
    parent = {graph.root_joint: -1}
    bfs = [graph.root_joint]
    for u in bfs:
        for v in graph.neighbors(u):
            if v not in parent:
                parent[v] = u
                bfs.append(v)
    if len(bfs) != graph.joint_count:
        raise SerializationError("graph is disconnected")

    # key of a subtree: best part rank it contains, then smallest joint index
    key = {j: (rank[j], j) for j in bfs}
    for u in reversed(bfs):
        p = parent[u]
        if p >= 0:
            key[p] = min(key[p], key[u])
    children: dict[int, list[int]] = {j: [] for j in bfs}
    for u in bfs[1:]:
        children[parent[u]].append(u)
    for u in children:
        children[u].sort(key=lambda c: (key[c], c))
    return children


def traversal_order(graph: SkeletonGraph) -> JointOrder:
    """Euler tour of the tree from the root joint.

    Children are visited in body-part order (left arm, right arm, trunk,
    left leg, right leg, by the best-ranked part inside each subtree). A
    joint is emitted on every arrival, including returns while
    backtracking, which gives ``2 * joint_count - 1`` entries.
    """
    children = _child_order(graph)
    root = graph.root_joint
    order = [root]
    stack = [(root, iter(children[root]))]
    while stack:
        u, it = stack[-1]
        child = next(it, None)
        if child is None:
            stack.pop()
            if stack:
                order.append(stack[-1][0])
        else:
            order.append(child)
            stack.append((child, iter(children[child])))
    return JointOrder(tuple(order), "traversal")


def joint_order(graph: SkeletonGraph, kind: str) -> JointOrder:
    if kind == "chain":
        return chain_order(graph)
    if kind == "traversal":
        return traversal_order(graph)
    raise InvalidInputError(f"unknown joint order {kind!r}")


def _window_bounds(center_frame: int, window: int) -> int:
    return center_frame - window // 2


def build_spatial_input(seq: SkeletonSequence, order: JointOrder, window: int,
                        center_frame: int) -> SpatialInput:
    """Represent each joint of ``order`` by its coordinates over a time window.

    The window covers frames ``[c - window//2, c - window//2 + window)``;
    frames outside ``[0, valid_length)`` contribute zeros. Coordinates are
    concatenated frame-major: x0 y0 z0 x1 y1 z1 ...
    """
    if window < 1:
        raise InvalidInputError(f"window must be >= 1, got {window}")
    if not 0 <= center_frame < seq.T:
        raise InvalidInputError(f"center_frame {center_frame} outside [0, {seq.T})")
    steps = build_spatial_batch([seq], order, window, [center_frame])[0]
    return SpatialInput(steps, center_frame, window)


def build_spatial_batch(seqs: Sequence[SkeletonSequence], order: JointOrder, window: int,
                        centers: Sequence[int]) -> np.ndarray:
    """Vectorised :func:`build_spatial_input` for a batch, shape ``(N, L, window*D)``."""
    idx = np.asarray(order.order)
    out = []
    for seq, c in zip(seqs, centers):
        start = _window_bounds(int(c), window)
        frames = np.zeros((window,) + seq.frames.shape[1:])
        lo, hi = max(start, 0), min(start + window, seq.valid_length)
        if hi > lo:
            frames[lo - start:hi - start] = seq.frames[lo:hi]
        # (window, J, D) -> (L, window, D) -> (L, window*D)
        out.append(frames[:, idx, :].transpose(1, 0, 2).reshape(len(idx), -1))
    return np.stack(out)


def spatial_centers(T: int, window: int, mode: str,
                    rng: int | np.random.Generator = 0) -> list[int]:
    """Window centers for one sequence of effective length ``T``.

    ``train-random`` draws one uniform center in ``[0, T)``; ``eval-grid``
    tiles ``[0, T)`` with non-overlapping windows starting at ``window//2``.
    """
    if not 1 <= window <= T:
        raise InvalidInputError(f"window {window} must lie in [1, {T}]")
    if mode == "eval-grid":
        return list(range(window // 2, T, window))
    if mode == "train-random":
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        return [int(gen.integers(0, T))]
    raise InvalidInputError(f"unknown center mode {mode!r}")
