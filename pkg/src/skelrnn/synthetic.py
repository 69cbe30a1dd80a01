"""Synthetic skeleton action datasets with separable classes.

Each class is a motion template: one body part swings about its
attachment joint around a fixed body axis at a class-specific frequency.
A sample is fully determined by its template, subject (body scale and
standing position), view angle, length, phase and noise draw. With
``noise = 0`` two samples that share class, subject, view and length differ
only in their sampled phase.

Coordinates follow the Kinect convention: x to the side, y up, z away
from the camera. Views rotate the whole recording about the vertical axis.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .augment import rot_x, rot_y, rot_z
from .errors import ConfigError
from .graphs import limb_graph
from .skeleton import Dataset, SkeletonGraph, SkeletonSequence

_PART_CYCLE = ("left-arm", "right-arm", "left-leg", "right-leg", "trunk")
_AXES = {"x": rot_x, "y": rot_y, "z": rot_z}
# axes that visibly move each part from the rest pose (arms lie along x, legs along y)
_SWING_AXES = {"left-arm": ("z", "y"), "right-arm": ("z", "y"),
               "left-leg": ("x", "z"), "right-leg": ("x", "z"), "trunk": ("x", "z")}


@dataclass
class SyntheticSpec:
    class_count: int = 4
    joint_count: int = 20
    length_range: tuple[int, int] = (40, 60)
    samples_per_class: int = 50
    noise: float = 0.01
    amplitude: float = 1.0          # swing amplitude in radians
    subjects: int = 5
    views: list[float] = field(default_factory=lambda: [0.0])  # degrees about the vertical axis
    templates: list[dict] | None = None
    seed: int = 0

    def __post_init__(self):
        self.length_range = tuple(int(v) for v in self.length_range)
        self.views = [float(v) for v in self.views]
        if self.class_count < 1 or self.samples_per_class < 0 or self.subjects < 1:
            raise ConfigError("class_count and subjects must be positive")
        if self.noise < 0:
            raise ConfigError("noise level must be >= 0")
        lo, hi = self.length_range
        if not 1 <= lo <= hi:
            raise ConfigError(f"bad length_range {self.length_range}")
        if not self.views:
            raise ConfigError("need at least one view")
        temps = self.resolved_templates()
        keys = {(t["part"], t["axis"], float(t["freq"])) for t in temps}
        if len(keys) != len(temps):
            raise ConfigError("class templates must be pairwise distinct")

    def resolved_templates(self) -> list[dict]:
        if self.templates is not None:
            if len(self.templates) != self.class_count:
                raise ConfigError("need one template per class")
            for t in self.templates:
                if t.get("part") not in _PART_CYCLE or t.get("axis") not in _AXES:
                    raise ConfigError(f"bad template {t}")
            return [dict(part=t["part"], axis=t["axis"], freq=float(t.get("freq", 1.0)))
                    for t in self.templates]
        # cycle parts first, then swing axis, then frequency
        out = []
        for c in range(self.class_count):
            part = _PART_CYCLE[c % 4]
            out.append(dict(part=part, axis=_SWING_AXES[part][(c // 4) % 2], freq=1.0 + c // 8))
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["length_range"] = list(self.length_range)
        return d


def rest_pose(graph: SkeletonGraph) -> np.ndarray:
    """Standing pose for a :func:`limb_graph` figure, pelvis at the origin."""
    pose = np.zeros((graph.joint_count, 3))
    trunk = graph.parts["trunk"]
    for k, j in enumerate(trunk):
        pose[j] = (0.0, 0.15 * k, 0.0)
    top, bottom = pose[trunk[-1]], pose[trunk[0]]
    for part, side in (("left-arm", -1), ("right-arm", 1)):
        for k, j in enumerate(graph.parts[part]):
            pose[j] = top + (side * (0.15 + 0.13 * k), -0.03 * k, 0.0)
    for part, side in (("left-leg", -1), ("right-leg", 1)):
        for k, j in enumerate(graph.parts[part]):
            pose[j] = bottom + (side * 0.1, -0.1 - 0.2 * k, 0.0)
    return pose


def _anchor(graph: SkeletonGraph, part: str) -> int:
    joints = graph.parts[part]
    if part == "trunk":
        return joints[0]
    first = joints[0]
    return next(v for v in graph.neighbors(first) if v not in joints)


def generate(spec: SyntheticSpec) -> Dataset:
    graph = limb_graph(spec.joint_count)
    rng = np.random.default_rng(spec.seed)
    base = rest_pose(graph)
    temps = spec.resolved_templates()
    subj_scale = rng.uniform(0.9, 1.1, size=spec.subjects)
    subj_offset = np.column_stack([rng.uniform(-0.5, 0.5, spec.subjects),
                                   np.full(spec.subjects, 0.9),
                                   rng.uniform(2.5, 3.5, spec.subjects)])

    sequences = []
    for c, tpl in enumerate(temps):
        if tpl["part"] == "trunk":
            moving = np.array(graph.parts["trunk"][1:] + graph.parts["left-arm"]
                              + graph.parts["right-arm"])
        else:
            moving = np.array(graph.parts[tpl["part"]])
        anchor = _anchor(graph, tpl["part"])
        rot = _AXES[tpl["axis"]]
        for k in range(spec.samples_per_class):
            subject = (c * spec.samples_per_class + k) % spec.subjects
            view = k % len(spec.views)
            L = int(rng.integers(spec.length_range[0], spec.length_range[1] + 1))
            phase = rng.uniform(0, 2 * math.pi)
            t = np.arange(L)
            angles = spec.amplitude * np.sin(2 * math.pi * tpl["freq"] * t / L + phase)
            frames = np.repeat(base[None] * subj_scale[subject], L, axis=0)
            pivot = frames[0, anchor]
            for f, ang in enumerate(angles):
                R = rot(float(ang)).matrix
                frames[f, moving] = (frames[f, moving] - pivot) @ R.T + pivot
            if spec.noise > 0:
                frames += rng.normal(scale=spec.noise, size=frames.shape)
            view_rot = rot_y(math.radians(spec.views[view])).matrix
            frames = frames @ view_rot.T + subj_offset[subject]
            sequences.append(SkeletonSequence(frames, L, c, subject, view))
    names = [f"{t['part']}-{t['axis']}-{t['freq']:g}" for t in temps]
    return Dataset(graph, sequences, spec.class_count, names)
