import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from skelrnn.errors import ConfigError, InvalidInputError, LoadError
from skelrnn.graphs import SHIPPED, get_graph, kinect_v1_20, limb_graph
from skelrnn.skeleton import (Dataset, SkeletonGraph, SkeletonSequence, concat_two_person,
                              load_dataset, normalize_center, normalize_persons,
                              resample_to_length, save_dataset, split_folds,
                              split_two_person, stack_frames)

from conftest import path_graph, random_sequence

coords = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


# ---------------------------------------------------------------- graph

def test_graph_rejects_cycle():
    with pytest.raises(ConfigError):
        SkeletonGraph(("a", "b", "c"), ((0, 1), (1, 2), (0, 2)), {"trunk": (0, 1, 2)}, 0, (0,))


def test_graph_rejects_disconnected():
    # right edge count, but a repeated edge collapses
    with pytest.raises(ConfigError):
        SkeletonGraph(("a", "b", "c"), ((0, 1), (1, 0)), {"trunk": (0, 1, 2)}, 0, (0,))


def test_graph_parts_must_cover_joints():
    with pytest.raises(ConfigError):
        SkeletonGraph(("a", "b"), ((0, 1),), {"trunk": (0,)}, 0, (0,))


def test_graph_root_in_trunk():
    with pytest.raises(ConfigError):
        SkeletonGraph(("a", "b"), ((0, 1),), {"trunk": (0,), "left-arm": (1,)}, 1, (0,))


@pytest.mark.parametrize("name", sorted(SHIPPED))
def test_shipped_graphs_roundtrip(name):
    g = get_graph(name)
    assert SkeletonGraph.from_dict(json.loads(json.dumps(g.to_dict()))) == g


def test_shipped_sizes():
    assert get_graph("kinect-v1-20").joint_count == 20
    assert get_graph("kinect-v2-25").joint_count == 25
    assert get_graph("sbu-15").joint_count == 15


@pytest.mark.parametrize("n", [6, 7, 8, 9, 20, 25, 33])
def test_limb_graph_partition(n):
    g = limb_graph(n)
    assert g.joint_count == n
    assert sorted(j for p in g.parts.values() for j in p) == list(range(n))


# ---------------------------------------------------------------- sequence

def test_sequence_padding_must_be_zero():
    frames = np.ones((4, 2, 3))
    with pytest.raises(InvalidInputError):
        SkeletonSequence(frames, 2)


def test_sequence_rejects_nan():
    frames = np.zeros((2, 2, 3))
    frames[0, 0, 0] = np.nan
    with pytest.raises(InvalidInputError):
        SkeletonSequence(frames, 2)


def test_sequence_copies_input():
    frames = np.ones((2, 2, 3))
    seq = SkeletonSequence(frames, 2)
    frames[0, 0, 0] = 5.0
    assert seq.frames[0, 0, 0] == 1.0
    assert not seq.frames.flags.writeable


# ---------------------------------------------------------------- normalization

def test_constant_sequence_centers_to_zero():
    g = path_graph(4)
    seq = SkeletonSequence(np.tile([1.0, 2.0, 3.0], (5, 4, 1)), 5)
    assert np.array_equal(normalize_center(seq, g).frames, np.zeros((5, 4, 3)))


def test_center_hand_example():
    g = SkeletonGraph(("a", "b", "c"), ((0, 1), (1, 2)), {"trunk": (0, 1, 2)}, 1, (0, 1, 2))
    seq = SkeletonSequence(np.array([[[0, 0, 0], [3, 0, 0], [0, 3, 0]]], dtype=float), 1)
    out = normalize_center(seq, g).frames[0]
    assert np.allclose(out, [[-1, -1, 0], [2, -1, 0], [-1, 2, 0]], atol=1e-15)


def test_center_leaves_padding(rng):
    g = path_graph(4)
    seq = random_sequence(rng, T=8, valid=5)
    out = normalize_center(seq, g)
    assert np.array_equal(out.frames[5:], np.zeros((3, 4, 3)))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (5, 4, 3), elements=coords), arrays(np.float64, 3, elements=coords))
def test_center_idempotent_and_translation_invariant(frames, offset):
    g = path_graph(4)
    seq = SkeletonSequence(frames, 5)
    once = normalize_center(seq, g)
    assert np.allclose(normalize_center(once, g).frames, once.frames, atol=1e-12)
    shifted = normalize_center(SkeletonSequence(frames + offset, 5), g)
    assert np.allclose(shifted.frames, once.frames, atol=1e-10)


def test_normalize_persons_centers_each_half(rng):
    g = path_graph(4)
    a, b = random_sequence(rng), random_sequence(rng)
    pair = normalize_persons(concat_two_person(a, b), g)
    na, nb = split_two_person(pair)
    assert na == normalize_center(a, g)
    assert nb == normalize_center(b, g)


# ---------------------------------------------------------------- resampling

def test_resample_identity(rng):
    seq = random_sequence(rng, T=35)
    assert resample_to_length(seq, 35) == seq


def test_resample_subsample_indices():
    frames = np.arange(200, dtype=float)[:, None, None] * np.ones((1, 2, 3))
    out = resample_to_length(SkeletonSequence(frames, 200), 100)
    assert out.valid_length == 100
    assert np.array_equal(out.frames[:, 0, 0], np.arange(0, 200, 2))


def test_resample_pads(rng):
    seq = random_sequence(rng, T=60)
    out = resample_to_length(seq, 100)
    assert out.T == 100 and out.valid_length == 60
    assert np.array_equal(out.frames[:60], seq.frames)
    assert not out.frames[60:].any()


@given(st.integers(1, 300), st.integers(1, 150))
def test_resample_order_preserving(L, T):
    frames = (np.arange(L, dtype=float) + 1)[:, None, None] * np.ones((1, 1, 3))
    out = resample_to_length(SkeletonSequence(frames, L), T)
    src = out.frames[: out.valid_length, 0, 0]
    assert np.all(np.diff(src) > 0)
    assert not out.frames[out.valid_length:].any()
    assert out.valid_length == min(L, T)


# ---------------------------------------------------------------- two persons

def test_concat_zero_second_person(rng):
    a = random_sequence(rng)
    b = SkeletonSequence(np.zeros_like(a.frames), a.valid_length)
    pair = concat_two_person(a, b)
    assert not pair.frames[..., 3:].any()


def test_concat_self_duplicates(rng):
    a = random_sequence(rng)
    pair = concat_two_person(a, a)
    assert np.array_equal(pair.frames[..., :3], pair.frames[..., 3:])


def test_concat_hand_frame():
    a = SkeletonSequence(np.array([[[1.0, 2, 3]]]), 1)
    b = SkeletonSequence(np.array([[[4.0, 5, 6]]]), 1)
    assert concat_two_person(a, b).frames.tolist() == [[[1, 2, 3, 4, 5, 6]]]


def test_concat_shape_mismatch(rng):
    with pytest.raises(InvalidInputError):
        concat_two_person(random_sequence(rng, T=4), random_sequence(rng, T=5))


# ---------------------------------------------------------------- I/O

def _dataset(rng, n=3, D=3):
    g = limb_graph(6)
    seqs = [random_sequence(rng, T=5, J=6, D=D, valid=3 + k % 3, label=k % 2, subject=k)
            for k in range(n)]
    return Dataset(g, seqs, 2, ["a", "b"])


def test_dataset_roundtrip_bit_identical(rng, tmp_path):
    ds = _dataset(rng)
    save_dataset(ds, tmp_path / "d.jsonl")
    back = load_dataset(tmp_path / "d.jsonl")
    assert back.graph == ds.graph and back.class_names == ds.class_names
    for s, t in zip(ds.sequences, back.sequences):
        assert np.array_equal(s.frames[: s.valid_length], t.frames)
        assert (s.label, s.subject_id, s.valid_length) == (t.label, t.subject_id, t.valid_length)


def test_dataset_roundtrip_6d(rng, tmp_path):
    ds = _dataset(rng, D=6)
    save_dataset(ds, tmp_path / "d.jsonl")
    assert load_dataset(tmp_path / "d.jsonl").sequences[0].coord_dim == 6


def test_empty_dataset_is_valid(tmp_path):
    ds = Dataset(limb_graph(6), [], 2, ["a", "b"])
    save_dataset(ds, tmp_path / "e.jsonl")
    assert len(load_dataset(tmp_path / "e.jsonl")) == 0


def test_label_out_of_range_names_record(rng, tmp_path):
    ds = _dataset(rng)
    save_dataset(ds, tmp_path / "d.jsonl")
    lines = (tmp_path / "d.jsonl").read_text().splitlines()
    rec = json.loads(lines[2])
    rec["label"] = 2
    lines[2] = json.dumps(rec)
    (tmp_path / "d.jsonl").write_text("\n".join(lines))
    with pytest.raises(LoadError, match="record 1"):
        load_dataset(tmp_path / "d.jsonl")


def test_wrong_joint_count(rng, tmp_path):
    ds = _dataset(rng)
    save_dataset(ds, tmp_path / "d.jsonl")
    lines = (tmp_path / "d.jsonl").read_text().splitlines()
    rec = json.loads(lines[1])
    rec["frames"] = [f[:5] for f in rec["frames"]]
    lines[1] = json.dumps(rec)
    (tmp_path / "d.jsonl").write_text("\n".join(lines))
    with pytest.raises(LoadError, match="record 0"):
        load_dataset(tmp_path / "d.jsonl")


def test_missing_file(tmp_path):
    with pytest.raises(LoadError):
        load_dataset(tmp_path / "nope.jsonl")


# ---------------------------------------------------------------- folds

def test_folds_small_partition(rng):
    ds = _dataset(rng, n=4)
    folds = split_folds(ds, 2)
    assert [len(te) for _, te in folds] == [2, 2]
    assert sorted(np.concatenate([te for _, te in folds])) == [0, 1, 2, 3]


def test_folds_by_subject_no_leakage(rng):
    g = limb_graph(6)
    seqs = [random_sequence(rng, T=3, J=6, subject=1 + k % 4) for k in range(12)]
    ds = Dataset(g, seqs, 1, ["a"])
    for train, test in split_folds(ds, 2, "by-subject", seed=3):
        tr = {seqs[i].subject_id for i in train}
        te = {seqs[i].subject_id for i in test}
        assert not tr & te and len(te) == 2 and tr | te == {1, 2, 3, 4}


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(2, 6), st.integers(0, 2**16),
       st.sampled_from(["by-sequence", "by-subject", "by-view"]))
def test_folds_are_partition(n, k, seed, mode):
    rng = np.random.default_rng(seed)
    g = limb_graph(6)
    seqs = [random_sequence(rng, T=2, J=6, subject=int(rng.integers(0, 8)),
                            view=int(rng.integers(0, 8))) for _ in range(n)]
    ds = Dataset(g, seqs, 1, ["a"])
    try:
        folds = split_folds(ds, k, mode, seed)
    except InvalidInputError:
        return  # not enough groups for k folds
    tests = np.concatenate([te for _, te in folds])
    assert sorted(tests) == list(range(n))
    for train, test in folds:
        assert not set(train) & set(test) and len(train) + len(test) == n
    again = split_folds(ds, k, mode, seed)
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, again))


def test_stack_frames(rng):
    seqs = [random_sequence(rng, T=4, J=2, valid=v) for v in (4, 2)]
    X, lengths = stack_frames(seqs)
    assert X.shape == (2, 4, 6) and lengths.tolist() == [4, 2]
    assert np.array_equal(X[1, 0], seqs[1].frames[0].reshape(-1))


def test_msr_layout():
    g = kinect_v1_20()
    assert g.joint_names[g.root_joint] == "spine"
    assert [g.joint_names[c] for c in g.center_joints] == ["hip_center", "hip_left", "hip_right"]
