"""Shipped skeleton graph definitions.

Joint indices are 0-based. Arm and leg parts are simple paths hanging off
the trunk, so every shipped graph admits a chain serialization.
"""
from __future__ import annotations

from .errors import ConfigError
from .skeleton import SkeletonGraph


def _graph(names, edges, parts, root, centers) -> SkeletonGraph:
    return SkeletonGraph(tuple(names), tuple(edges), parts, root, tuple(centers))


def kinect_v1_20() -> SkeletonGraph:
    """20-joint Kinect v1 skeleton (MSR Action3D layout)."""
    names = [
        "hip_center", "spine", "shoulder_center", "head",
        "shoulder_left", "elbow_left", "wrist_left", "hand_left",
        "shoulder_right", "elbow_right", "wrist_right", "hand_right",
        "hip_left", "knee_left", "ankle_left", "foot_left",
        "hip_right", "knee_right", "ankle_right", "foot_right",
    ]
    edges = [(0, 1), (1, 2), (2, 3),
             (2, 4), (4, 5), (5, 6), (6, 7),
             (2, 8), (8, 9), (9, 10), (10, 11),
             (0, 12), (12, 13), (13, 14), (14, 15),
             (0, 16), (16, 17), (17, 18), (18, 19)]
    parts = {
        "left-arm": (4, 5, 6, 7),
        "right-arm": (8, 9, 10, 11),
        "trunk": (0, 1, 2, 3),
        "left-leg": (12, 13, 14, 15),
        "right-leg": (16, 17, 18, 19),
    }
    return _graph(names, edges, parts, root=1, centers=(0, 12, 16))


def kinect_v2_25() -> SkeletonGraph:
    """25-joint Kinect v2 skeleton (NTU RGB+D layout).

    Uses the common hand wiring ``hand - thumb - hand_tip`` so that each arm
    is a path.
    """
    names = [
        "spine_base", "spine_mid", "neck", "head",
        "shoulder_left", "elbow_left", "wrist_left", "hand_left",
        "shoulder_right", "elbow_right", "wrist_right", "hand_right",
        "hip_left", "knee_left", "ankle_left", "foot_left",
        "hip_right", "knee_right", "ankle_right", "foot_right",
        "spine_shoulder", "hand_tip_left", "thumb_left", "hand_tip_right", "thumb_right",
    ]
    one_based = [(1, 2), (2, 21), (3, 21), (4, 3), (5, 21), (6, 5), (7, 6),
                 (8, 7), (9, 21), (10, 9), (11, 10), (12, 11), (13, 1),
                 (14, 13), (15, 14), (16, 15), (17, 1), (18, 17), (19, 18),
                 (20, 19), (22, 23), (23, 8), (24, 25), (25, 12)]
    edges = [(a - 1, b - 1) for a, b in one_based]
    parts = {
        "left-arm": (4, 5, 6, 7, 22, 21),
        "right-arm": (8, 9, 10, 11, 24, 23),
        "trunk": (0, 1, 20, 2, 3),
        "left-leg": (12, 13, 14, 15),
        "right-leg": (16, 17, 18, 19),
    }
    return _graph(names, edges, parts, root=1, centers=(0, 12, 16))


def kinect_sbu_15() -> SkeletonGraph:
    """15-joint skeleton of the SBU Interaction recordings."""
    names = [
        "head", "neck", "torso",
        "shoulder_left", "elbow_left", "hand_left",
        "shoulder_right", "elbow_right", "hand_right",
        "hip_left", "knee_left", "foot_left",
        "hip_right", "knee_right", "foot_right",
    ]
    edges = [(0, 1), (1, 2),
             (1, 3), (3, 4), (4, 5),
             (1, 6), (6, 7), (7, 8),
             (2, 9), (9, 10), (10, 11),
             (2, 12), (12, 13), (13, 14)]
    parts = {
        "left-arm": (3, 4, 5),
        "right-arm": (6, 7, 8),
        "trunk": (0, 1, 2),
        "left-leg": (9, 10, 11),
        "right-leg": (12, 13, 14),
    }
    return _graph(names, edges, parts, root=2, centers=(2, 9, 12))


def limb_graph(joint_count: int) -> SkeletonGraph:
    """Auto-generated stick figure with ``joint_count`` joints.

    The trunk is a vertical path (at least two joints); arms hang off its
    top joint and legs off its bottom joint. Limb joints are distributed as
    evenly as possible, the trunk absorbs the remainder.
    """
    if joint_count < 6:
        raise ConfigError("limb_graph needs at least 6 joints")
    limb = (joint_count - 2) // 4
    trunk = joint_count - 4 * limb
    names = [f"trunk_{i}" for i in range(trunk)]  # trunk_0 is the pelvis
    edges = [(i, i + 1) for i in range(trunk - 1)]
    parts: dict[str, tuple[int, ...]] = {"trunk": tuple(range(trunk))}
    top, bottom = trunk - 1, 0
    for part, anchor in (("left-arm", top), ("right-arm", top),
                         ("left-leg", bottom), ("right-leg", bottom)):
        first = len(names)
        names += [f"{part}_{i}" for i in range(limb)]
        edges.append((anchor, first))
        edges += [(first + i, first + i + 1) for i in range(limb - 1)]
        parts[part] = tuple(range(first, first + limb))
    root = 1 if trunk > 2 else 0
    return _graph(names, edges, parts, root=root,
                  centers=(0, parts["left-leg"][0], parts["right-leg"][0]))


SHIPPED = {
    "kinect-v1-20": kinect_v1_20,
    "kinect-v2-25": kinect_v2_25,
    "sbu-15": kinect_sbu_15,
}


def get_graph(name: str) -> SkeletonGraph:
    try:
        return SHIPPED[name]()
    except KeyError:
        raise ConfigError(f"unknown graph {name!r}; available: {sorted(SHIPPED)}") from None
