"""Skeleton data model, preprocessing, dataset I/O and fold splitting."""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, InvalidInputError, LoadError

PART_NAMES = ("left-arm", "right-arm", "trunk", "left-leg", "right-leg")


@dataclass(frozen=True)
class SkeletonGraph:
    """Undirected skeleton tree with a five-part body partition.

    Attributes:
        joint_names: One name per joint; its length is the joint count.
        edges: Unordered joint-index pairs, stored as ``(min, max)``.
        parts: Mapping from each name in ``PART_NAMES`` to the joint indices
            of that part. Parts may be empty (degenerate graphs) but must be
            disjoint and cover every joint.
        root_joint: Central spine joint; serialization starts here.
        center_joints: Joints whose per-frame mean is the body center.
    """

    joint_names: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]
    parts: dict[str, tuple[int, ...]]
    root_joint: int
    center_joints: tuple[int, ...]
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.joint_names)
        if n < 1:
            raise ConfigError("graph needs at least one joint")
        edges = tuple(sorted({(min(a, b), max(a, b)) for a, b in self.edges}))
        object.__setattr__(self, "joint_names", tuple(self.joint_names))
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "center_joints", tuple(int(c) for c in self.center_joints))
        parts = {name: tuple(int(j) for j in self.parts.get(name, ())) for name in PART_NAMES}
        extra = set(self.parts) - set(PART_NAMES)
        if extra:
            raise ConfigError(f"unknown part names: {sorted(extra)}")
        object.__setattr__(self, "parts", parts)

        for a, b in edges:
            if not (0 <= a < n and 0 <= b < n) or a == b:
                raise ConfigError(f"invalid edge ({a}, {b}) for {n} joints")
        if len(edges) != n - 1:
            raise ConfigError(f"a tree over {n} joints needs {n - 1} edges, got {len(edges)}")
        adj: list[list[int]] = [[] for _ in range(n)]
        for a, b in edges:
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(v)) for v in adj))
        if not 0 <= self.root_joint < n:
            raise ConfigError(f"root joint {self.root_joint} out of range")
        if len(self.distances_from(self.root_joint)) != n:
            raise ConfigError("skeleton graph is not connected")

        seen: list[int] = [j for name in PART_NAMES for j in parts[name]]
        if sorted(seen) != list(range(n)):
            raise ConfigError("parts must be disjoint and cover every joint")
        if self.root_joint not in parts["trunk"]:
            raise ConfigError("root joint must belong to the trunk part")
        for c in self.center_joints:
            if not 0 <= c < n:
                raise ConfigError(f"center joint {c} out of range")

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    def neighbors(self, j: int) -> tuple[int, ...]:
        return self._adj[j]

    def distances_from(self, source: int) -> dict[int, int]:
        """Breadth-first hop distances from ``source`` to reachable joints."""
        dist = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in self._adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    queue.append(v)
        return dist

    def part_of(self, j: int) -> str:
        for name in PART_NAMES:
            if j in self.parts[name]:
                return name
        raise KeyError(j)

    def to_dict(self) -> dict:
        return {
            "joints": list(self.joint_names),
            "edges": [list(e) for e in self.edges],
            "parts": {name: list(self.parts[name]) for name in PART_NAMES},
            "root": self.root_joint,
            "centers": list(self.center_joints),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SkeletonGraph":
        return cls(
            joint_names=tuple(d["joints"]),
            edges=tuple((int(a), int(b)) for a, b in d["edges"]),
            parts={k: tuple(v) for k, v in d["parts"].items()},
            root_joint=int(d["root"]),
            center_joints=tuple(d.get("centers", ())),
        )


@dataclass(frozen=True, eq=False)
class SkeletonSequence:
    """Per-frame joint coordinates of one recording.

    ``frames`` has shape ``(T_raw, joint_count, D)`` with ``D`` equal to 3
    for a single person or 6 for a concatenated pair. Frames at and beyond
    ``valid_length`` are zero padding.
    """

    frames: np.ndarray
    valid_length: int
    label: int = 0
    subject_id: int = 0
    view_id: int = 0

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.float64)
        if frames.ndim != 3 or frames.shape[2] not in (3, 6):
            raise InvalidInputError(f"frames must be (T, J, 3|6), got {frames.shape}")
        if not 1 <= self.valid_length <= frames.shape[0]:
            raise InvalidInputError(
                f"valid_length {self.valid_length} outside [1, {frames.shape[0]}]"
            )
        if not np.all(np.isfinite(frames)):
            raise InvalidInputError("non-finite coordinate in frames")
        if np.any(frames[self.valid_length:]):
            raise InvalidInputError("padding frames must be exactly zero")
        frames.setflags(write=False)
        object.__setattr__(self, "frames", frames)

    @property
    def T(self) -> int:
        return self.frames.shape[0]

    @property
    def joint_count(self) -> int:
        return self.frames.shape[1]

    @property
    def coord_dim(self) -> int:
        return self.frames.shape[2]

    def with_frames(self, frames: np.ndarray, valid_length: int | None = None) -> "SkeletonSequence":
        return replace(
            self,
            frames=frames,
            valid_length=self.valid_length if valid_length is None else valid_length,
        )

    def __eq__(self, other):
        if not isinstance(other, SkeletonSequence):
            return NotImplemented
        return (
            self.valid_length == other.valid_length
            and self.label == other.label
            and self.subject_id == other.subject_id
            and self.view_id == other.view_id
            and self.frames.shape == other.frames.shape
            and np.array_equal(self.frames, other.frames)
        )


@dataclass
class Dataset:
    graph: SkeletonGraph
    sequences: list[SkeletonSequence]
    class_count: int
    class_names: list[str]

    def __post_init__(self):
        if self.class_count < 1:
            raise LoadError("class_count must be positive")
        if len(self.class_names) != self.class_count:
            raise LoadError("class_names length must equal class_count")
        for k, seq in enumerate(self.sequences):
            self._check(k, seq)

    def _check(self, k: int, seq: SkeletonSequence):
        if not 0 <= seq.label < self.class_count:
            raise LoadError(f"record {k}: label {seq.label} outside [0, {self.class_count})")
        if seq.joint_count != self.graph.joint_count:
            raise LoadError(
                f"record {k}: {seq.joint_count} joints, graph has {self.graph.joint_count}"
            )

    def __len__(self) -> int:
        return len(self.sequences)

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(self.graph, [self.sequences[i] for i in indices], self.class_count,
                       list(self.class_names))


# ---------------------------------------------------------------- preprocessing

def normalize_center(seq: SkeletonSequence, graph: SkeletonGraph) -> SkeletonSequence:
    """Subtract the per-frame mean of the graph's center joints.

    Only valid frames are shifted; padding stays zero.
    """
    if seq.coord_dim != 3:
        raise InvalidInputError("normalize_center expects 3D coordinates (normalize before pairing)")
    if not graph.center_joints:
        raise ConfigError("graph has no center joints")
    n = seq.valid_length
    out = np.array(seq.frames)
    center = out[:n, list(graph.center_joints), :].mean(axis=1, keepdims=True)
    out[:n] -= center
    return seq.with_frames(out)


def normalize_persons(seq: SkeletonSequence, graph: SkeletonGraph) -> SkeletonSequence:
    """Center each 3D half of a sequence independently (works for D=3 and D=6)."""
    if seq.coord_dim == 3:
        return normalize_center(seq, graph)
    a, b = split_two_person(seq)
    return concat_two_person(normalize_center(a, graph), normalize_center(b, graph))


def resample_to_length(seq: SkeletonSequence, target_T: int) -> SkeletonSequence:
    """Subsample long sequences to ``target_T`` frames, zero-pad short ones at the end."""
    if target_T < 1:
        raise InvalidInputError(f"target_T must be >= 1, got {target_T}")
    n = seq.valid_length
    out = np.zeros((target_T,) + seq.frames.shape[1:])
    if n > target_T:
        idx = (np.arange(target_T) * n) // target_T
        out[:] = seq.frames[idx]
        length = target_T
    else:
        out[:n] = seq.frames[:n]
        length = n
    return seq.with_frames(out, length)


def concat_two_person(seq_a: SkeletonSequence, seq_b: SkeletonSequence) -> SkeletonSequence:
    """Stack two single-person sequences into one 6D sequence (a's xyz, then b's)."""
    if seq_a.coord_dim != 3 or seq_b.coord_dim != 3:
        raise InvalidInputError("both persons must have 3D coordinates")
    if seq_a.frames.shape != seq_b.frames.shape or seq_a.valid_length != seq_b.valid_length:
        raise InvalidInputError(
            f"person shapes differ: {seq_a.frames.shape}/{seq_a.valid_length} vs "
            f"{seq_b.frames.shape}/{seq_b.valid_length}"
        )
    if seq_a.label != seq_b.label:
        raise InvalidInputError(f"labels differ: {seq_a.label} vs {seq_b.label}")
    return seq_a.with_frames(np.concatenate([seq_a.frames, seq_b.frames], axis=2))


def split_two_person(seq: SkeletonSequence) -> tuple[SkeletonSequence, SkeletonSequence]:
    if seq.coord_dim != 6:
        raise InvalidInputError("expected a 6D two-person sequence")
    return seq.with_frames(seq.frames[:, :, :3]), seq.with_frames(seq.frames[:, :, 3:])


# ---------------------------------------------------------------- I/O

def _header(ds: Dataset) -> dict:
    return {"class_count": ds.class_count, "class_names": list(ds.class_names),
            "graph": ds.graph.to_dict()}


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write a dataset as JSON lines: one header record, then one record per sequence.

    Only the valid frames are written; floats use Python's shortest
    round-trip repr so a reload is bit-identical.
    """
    with open(path, "w") as fh:
        fh.write(json.dumps(_header(ds)) + "\n")
        for seq in ds.sequences:
            rec = {
                "label": int(seq.label),
                "subject": int(seq.subject_id),
                "view": int(seq.view_id),
                "frames": seq.frames[: seq.valid_length].tolist(),
            }
            fh.write(json.dumps(rec) + "\n")


def _parse_record(k: int, rec: dict, ds_header: dict, joint_count: int) -> SkeletonSequence:
    try:
        frames = np.asarray(rec["frames"], dtype=np.float64)
        label = rec["label"]
    except (KeyError, TypeError, ValueError) as exc:
        raise LoadError(f"record {k}: malformed ({exc})") from exc
    if not isinstance(label, int) or isinstance(label, bool):
        raise LoadError(f"record {k}: label must be an integer")
    if frames.ndim != 3 or frames.shape[0] < 1 or frames.shape[2] not in (3, 6):
        raise LoadError(f"record {k}: frames must be [T][joints][3 or 6], got shape {frames.shape}")
    if frames.shape[1] != joint_count:
        raise LoadError(f"record {k}: {frames.shape[1]} joints, graph has {joint_count}")
    if not np.all(np.isfinite(frames)):
        raise LoadError(f"record {k}: non-finite coordinate")
    if not 0 <= label < ds_header["class_count"]:
        raise LoadError(f"record {k}: label {label} outside [0, {ds_header['class_count']})")
    return SkeletonSequence(frames, frames.shape[0], label,
                            int(rec.get("subject", 0)), int(rec.get("view", 0)))


def load_dataset(path: str | Path, format: str = "jsonl") -> Dataset:
    """Load a dataset file.

    ``format`` is ``"jsonl"`` for the JSON-lines layout written by
    :func:`save_dataset`, or ``"synthetic-manifest"`` for a YAML/JSON
    generator spec that is expanded in memory.
    """
    path = Path(path)
    if format == "synthetic-manifest":
        from .synthetic import SyntheticSpec, generate
        import yaml

        try:
            spec = SyntheticSpec(**(yaml.safe_load(path.read_text()) or {}))
        except (OSError, TypeError, yaml.YAMLError) as exc:
            raise LoadError(f"{path}: bad synthetic manifest ({exc})") from exc
        return generate(spec)
    if format != "jsonl":
        raise LoadError(f"unknown dataset format {format!r}")

    try:
        lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    except OSError as exc:
        raise LoadError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise LoadError(f"{path}: missing header record")
    try:
        header = json.loads(lines[0])
        graph = SkeletonGraph.from_dict(header["graph"])
        class_count = int(header["class_count"])
        class_names = list(header.get("class_names") or [str(c) for c in range(class_count)])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, ConfigError) as exc:
        raise LoadError(f"{path}: bad header ({exc})") from exc

    sequences = []
    for k, line in enumerate(lines[1:]):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LoadError(f"record {k}: invalid JSON ({exc})") from exc
        sequences.append(_parse_record(k, rec, header, graph.joint_count))
    return Dataset(graph, sequences, class_count, class_names)


# ---------------------------------------------------------------- folds

def split_folds(ds: Dataset, k: int, mode: str = "by-sequence",
                seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Partition dataset indices into ``k`` (train, test) folds.

    In ``by-subject`` and ``by-view`` mode whole groups are assigned to a
    fold, so no subject (view) is on both sides of a split.
    """
    if k < 2:
        raise InvalidInputError(f"k must be >= 2, got {k}")
    n = len(ds)
    rng = np.random.default_rng(seed)
    if mode == "by-sequence":
        if n < k:
            raise InvalidInputError(f"{n} sequences cannot fill {k} folds")
        groups = np.arange(n)
    elif mode in ("by-subject", "by-view"):
        attr = "subject_id" if mode == "by-subject" else "view_id"
        groups = np.array([getattr(s, attr) for s in ds.sequences], dtype=np.int64)
    else:
        raise InvalidInputError(f"unknown split mode {mode!r}")

    uniq = np.unique(groups)
    if len(uniq) < k:
        raise InvalidInputError(f"{len(uniq)} distinct groups cannot fill {k} folds")
    chunks = np.array_split(rng.permutation(uniq), k)
    folds = []
    for chunk in chunks:
        in_test = np.isin(groups, chunk)
        folds.append((np.flatnonzero(~in_test), np.flatnonzero(in_test)))
    return folds


def stack_frames(seqs: Sequence[SkeletonSequence]) -> tuple[np.ndarray, np.ndarray]:
    """Batch equal-length sequences into ``(N, T, J*D)`` plus valid lengths."""
    X = np.stack([s.frames.reshape(s.T, -1) for s in seqs])
    lengths = np.array([s.valid_length for s in seqs], dtype=np.int64)
    return X, lengths
