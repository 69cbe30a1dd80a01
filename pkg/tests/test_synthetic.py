import numpy as np
import pytest

from skelrnn.errors import ConfigError
from skelrnn.serialize import chain_order
from skelrnn.skeleton import load_dataset, save_dataset
from skelrnn.synthetic import SyntheticSpec, generate, rest_pose


def test_counts_and_labels():
    ds = generate(SyntheticSpec(class_count=4, samples_per_class=50))
    assert len(ds) == 200
    assert np.bincount([s.label for s in ds.sequences]).tolist() == [50] * 4
    assert ds.graph.joint_count == 20


def test_roundtrip(tmp_path):
    ds = generate(SyntheticSpec(samples_per_class=3))
    save_dataset(ds, tmp_path / "s.jsonl")
    back = load_dataset(tmp_path / "s.jsonl")
    assert back.graph == ds.graph
    assert all(a == b for a, b in zip(ds.sequences, back.sequences))
    assert len((tmp_path / "s.jsonl").read_text().splitlines()) == len(ds) + 1


def test_manifest_format(tmp_path):
    (tmp_path / "m.yaml").write_text("class_count: 2\nsamples_per_class: 3\nseed: 4\n")
    ds = load_dataset(tmp_path / "m.yaml", "synthetic-manifest")
    ref = generate(SyntheticSpec(class_count=2, samples_per_class=3, seed=4))
    assert all(a == b for a, b in zip(ds.sequences, ref.sequences))


def test_deterministic():
    a = generate(SyntheticSpec(samples_per_class=4, seed=9))
    b = generate(SyntheticSpec(samples_per_class=4, seed=9))
    assert all(x == y for x, y in zip(a.sequences, b.sequences))


def test_noise_free_samples_differ_only_by_phase():
    # one subject, fixed length: every sample of a class traces the same orbit
    spec = SyntheticSpec(class_count=2, samples_per_class=6, noise=0.0, subjects=1,
                         length_range=(40, 40), seed=2)
    ds = generate(spec)
    a, b = ds.sequences[0], ds.sequences[1]
    assert not np.array_equal(a.frames, b.frames)
    # only the moving part differs, and it stays on the same sphere around its anchor
    still = [j for j in range(20) if j not in ds.graph.parts["left-arm"]]
    assert np.allclose(a.frames[:, still], b.frames[:, still], atol=1e-12)
    d = lambda s: np.linalg.norm(s.frames[:, 5:10] - s.frames[:, [3]], axis=-1)  # noqa: E731
    assert np.allclose(np.sort(d(a), axis=0)[0], np.sort(d(b), axis=0)[0], atol=1e-12)


def test_classes_move_different_parts():
    ds = generate(SyntheticSpec(class_count=4, samples_per_class=1, noise=0.0))
    for seq, part in zip(ds.sequences, ["left-arm", "right-arm", "left-leg", "right-leg"]):
        motion = np.ptp(seq.frames[: seq.valid_length], axis=0).max(axis=1)
        moving = {j for j in range(20) if motion[j] > 1e-9}
        assert moving == set(ds.graph.parts[part])


def test_templates_distinct():
    with pytest.raises(ConfigError):
        SyntheticSpec(class_count=2, templates=[dict(part="left-arm", axis="z"),
                                                dict(part="left-arm", axis="z")])
    with pytest.raises(ConfigError):
        SyntheticSpec(noise=-1.0)


def test_default_templates_cycle():
    t = SyntheticSpec(class_count=9).resolved_templates()
    assert [x["part"] for x in t[:4]] == ["left-arm", "right-arm", "left-leg", "right-leg"]
    assert t[4]["axis"] != t[0]["axis"]
    assert t[8]["freq"] == 2.0


def test_views_rotate_about_vertical():
    ds = generate(SyntheticSpec(class_count=1, samples_per_class=2, noise=0.0, subjects=1,
                                views=[0.0, 90.0], length_range=(5, 5), amplitude=0.0))
    assert [s.view_id for s in ds.sequences] == [0, 1]
    a, b = ds.sequences
    # heights unchanged, the left-right axis turns into the depth axis
    assert np.allclose(a.frames[..., 1], b.frames[..., 1], atol=1e-12)
    da = a.frames[0] - a.frames[0, 0]
    db = b.frames[0] - b.frames[0, 0]
    assert np.allclose(db[:, 2], -da[:, 0], atol=1e-12)


def test_rest_pose_chainable():
    ds = generate(SyntheticSpec(samples_per_class=1))
    assert rest_pose(ds.graph).shape == (20, 3)
    assert sorted(chain_order(ds.graph).order) == list(range(20))
