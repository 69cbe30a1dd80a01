"""Random 3D rotation, scaling and shear of skeleton coordinates.

Used on training batches only. One composite matrix is drawn per sequence
and applied to every frame of it.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InvalidInputError
from .skeleton import SkeletonSequence


@dataclass(frozen=True)
class Transform3:
    matrix: np.ndarray
    kind: str = "general"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise InvalidInputError("transform must be a finite 3x3 matrix")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __matmul__(self, other: "Transform3") -> "Transform3":
        kind = "rotation" if self.kind == other.kind == "rotation" else "general"
        return Transform3(self.matrix @ other.matrix, kind)

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrix, np.eye(3)))


def _finite(*values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise InvalidInputError(f"non-finite transform parameter {v!r}")


def rot_x(alpha: float) -> Transform3:
    _finite(alpha)
    c, s = math.cos(alpha), math.sin(alpha)
    return Transform3([[1, 0, 0], [0, c, -s], [0, s, c]], "rotation")


def rot_y(beta: float) -> Transform3:
    _finite(beta)
    c, s = math.cos(beta), math.sin(beta)
    return Transform3([[c, 0, s], [0, 1, 0], [-s, 0, c]], "rotation")


def rot_z(gamma: float) -> Transform3:
    _finite(gamma)
    c, s = math.cos(gamma), math.sin(gamma)
    return Transform3([[c, -s, 0], [s, c, 0], [0, 0, 1]], "rotation")


def compose_rotation(alpha: float, beta: float, gamma: float) -> Transform3:
    """General rotation ``Rz(gamma) @ Ry(beta) @ Rx(alpha)``."""
    return rot_z(gamma) @ rot_y(beta) @ rot_x(alpha)


def scaling(sx: float, sy: float, sz: float) -> Transform3:
    _finite(sx, sy, sz)
    if 0.0 in (sx, sy, sz):
        raise InvalidInputError("scaling factors must be nonzero")
    return Transform3(np.diag([sx, sy, sz]), "scaling")


def shear(sh_xy: float, sh_xz: float, sh_yx: float, sh_yz: float,
          sh_zx: float, sh_zy: float) -> Transform3:
    """Unit-diagonal shear; ``sh_xy`` is the row-x, column-y entry, and so on."""
    _finite(sh_xy, sh_xz, sh_yx, sh_yz, sh_zx, sh_zy)
    return Transform3([[1, sh_xy, sh_xz],
                       [sh_yx, 1, sh_yz],
                       [sh_zx, sh_zy, 1]], "shear")


def _interval(v) -> tuple[float, float]:
    lo, hi = (float(x) for x in v)
    return lo, hi


@dataclass(frozen=True)
class AugmentConfig:
    """Sampling ranges for the random transform.

    Angles are in radians. Defaults rotate about x and y by up to 30 degrees
    and leave z alone (the camera looks along z).
    """

    rot_range_x: tuple[float, float] = (-math.pi / 6, math.pi / 6)
    rot_range_y: tuple[float, float] = (-math.pi / 6, math.pi / 6)
    rot_range_z: tuple[float, float] = (0.0, 0.0)
    scale_range: tuple[float, float] = (0.9, 1.1)
    shear_range: tuple[float, float] = (-0.1, 0.1)
    rotate: bool = True
    scale: bool = True
    shear: bool = True
    seed: int = 0

    def __post_init__(self):
        for name, default in (("rot_range_x", 0.0), ("rot_range_y", 0.0), ("rot_range_z", 0.0),
                              ("scale_range", 1.0), ("shear_range", 0.0)):
            lo, hi = _interval(getattr(self, name))
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo <= default <= hi:
                raise InvalidInputError(f"{name}=({lo}, {hi}) must be finite and contain {default}")
            object.__setattr__(self, name, (lo, hi))

    @property
    def enabled(self) -> bool:
        return self.rotate or self.scale or self.shear

    @classmethod
    def disabled(cls) -> "AugmentConfig":
        return cls(rotate=False, scale=False, shear=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d


def sample_transform(cfg: AugmentConfig, rng: np.random.Generator) -> Transform3:
    """Draw one composite transform ``Shear @ Scale @ Rotation``.

    Rotation acts first, then scaling, then shear. Disabled kinds are the
    identity and consume no random numbers.
    """
    t = Transform3(np.eye(3), "rotation")
    if cfg.rotate:
        angles = [rng.uniform(*r) for r in (cfg.rot_range_x, cfg.rot_range_y, cfg.rot_range_z)]
        t = compose_rotation(*angles)
    if cfg.scale:
        t = scaling(*rng.uniform(*cfg.scale_range, size=3)) @ t
    if cfg.shear:
        t = shear(*rng.uniform(*cfg.shear_range, size=6)) @ t
    return t


def apply_transform(seq: SkeletonSequence, t: Transform3) -> SkeletonSequence:
    """Left-multiply every valid joint triple by ``t.matrix``.

    6D sequences are transformed per 3D half. Padding stays zero.
    """
    if t.is_identity:
        return seq
    n = seq.valid_length
    out = np.array(seq.frames)
    T, J, D = out.shape
    halves = out[:n].reshape(n, J, D // 3, 3)
    out[:n] = (halves @ t.matrix.T).reshape(n, J, D)
    return seq.with_frames(out)
