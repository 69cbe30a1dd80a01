import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skelrnn.errors import ConfigError, InvalidInputError
from skelrnn.graphs import kinect_v2_25, limb_graph
from skelrnn.neural.gradcheck import TOLERANCE, gradcheck_problem, gradient_check
from skelrnn.neural.lstm import LstmLayerParams, lstm_forward
from skelrnn.neural.network import (NetworkSpec, build_spec, count_params, forward,
                                    forward_hierarchical, forward_stacked, init_params,
                                    loss_and_grads, param_shapes, parse_structure,
                                    predict_proba)
from skelrnn.neural.optim import TrainConfig, sgd_step
from skelrnn.posterior import ClassPosterior, cross_entropy, softmax
from skelrnn.skeleton import SkeletonGraph

from conftest import path_graph


def lstm_param_formula(In, H):
    return 4 * H * In + 4 * H * H + 3 * H + 4 * H


# ---------------------------------------------------------------- structure grammar

@pytest.mark.parametrize("text, expected", [
    ("R512-512", ("stacked", (512, 512), ())),
    ("R4", ("stacked", (4,), ())),
    ("P128,B512", ("hierarchical", (128,), (512,))),
    ("P128-128, B512", ("hierarchical", (128, 128), (512,))),
])
def test_parse_structure(text, expected):
    assert parse_structure(text) == expected


@pytest.mark.parametrize("text", ["", "R", "512-512", "P128", "R5,B2", "R-1"])
def test_parse_structure_rejects(text):
    with pytest.raises(ConfigError):
        parse_structure(text)


def test_spec_roundtrip():
    spec = build_spec("P2-3,B4", 18, 3, graph=limb_graph(6))
    assert NetworkSpec.from_dict(spec.to_dict()) == spec
    assert spec.structure == "P2-3,B4"


# ---------------------------------------------------------------- parameter counts

def test_count_stacked_formula():
    spec = build_spec("R512-512", 75, 60)
    expected = lstm_param_formula(75, 512) + lstm_param_formula(512, 512) + 60 * 512 + 60
    assert count_params(spec) == expected == 3337276


def test_count_hierarchical_formula():
    g = kinect_v2_25()
    spec = build_spec("P128,B512", 75, 60, graph=g)
    parts = sum(lstm_param_formula(len(g.parts[p]) * 3, 128) for p in g.parts)
    expected = parts + lstm_param_formula(5 * 128, 512) + 60 * 512 + 60
    assert count_params(spec) == expected == 2764220


def test_hierarchical_has_fewer_params():
    g = kinect_v2_25()
    assert count_params(build_spec("P128,B512", 75, 60, graph=g)) < \
        count_params(build_spec("R512-512", 75, 60))


# ---------------------------------------------------------------- init

def test_init_deterministic_and_forget_bias():
    spec = build_spec("P3,B4", 18, 3, graph=limb_graph(6))
    a, b = init_params(spec, 9), init_params(spec, 9)
    assert a.keys() == b.keys() == param_shapes(spec).keys()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    for k, v in a.items():
        if k.endswith(".b") and not k.startswith("head"):
            H = v.size // 4
            assert np.array_equal(v[H:2 * H], np.ones(H))
            assert not v[:H].any() and not v[2 * H:].any()


def test_init_glorot_range():
    spec = build_spec("R64-32", 40, 5)
    p = init_params(spec, 0)
    for name, (fan_in, fan_out) in {"lstm0.Wx": (40, 64), "lstm0.Wh": (64, 64),
                                    "lstm1.Wx": (64, 32), "head.W": (32, 5)}.items():
        a = math.sqrt(6 / (fan_in + fan_out))
        assert np.max(np.abs(p[name])) <= a
        assert np.max(np.abs(p[name])) > 0.9 * a  # the range is actually used


# ---------------------------------------------------------------- forward

def test_zero_head_uniform(rng):
    spec = build_spec("R4", 6, 5)
    p = init_params(spec, 0)
    p["head.W"][:] = 0.0
    probs = predict_proba(spec, p, rng.normal(size=(3, 4, 6)))
    assert np.allclose(probs, 0.2, atol=1e-15)


def test_zero_body_uniform(rng):
    spec = build_spec("P3,B4", 18, 4, graph=limb_graph(6))
    p = init_params(spec, 0)
    for k in p:
        if k.startswith(("body.", "head.")):
            p[k][:] = 0.0
    probs = predict_proba(spec, p, rng.normal(size=(2, 5, 18)))
    assert np.allclose(probs, 0.25, atol=1e-15)


def test_two_layer_composition(rng):
    spec = build_spec("R5-3", 4, 3)
    p = init_params(spec, 1)
    x = rng.normal(size=(6, 4))
    l0 = LstmLayerParams.from_params(p, "lstm0")
    l1 = LstmLayerParams.from_params(p, "lstm1")
    h = lstm_forward(l1, lstm_forward(l0, x, 6), 6)[-1]
    expected = softmax(p["head.W"] @ h + p["head.b"])
    got = forward_stacked(spec, p, x).probs
    assert np.allclose(got, expected, atol=1e-14)


def test_hierarchical_single_part_equals_stacked(rng):
    g = path_graph(4)
    hier = build_spec("P3,B5", 12, 2, graph=g)
    stack = build_spec("R3-5", 12, 2)
    ph = init_params(hier, 4)
    ps = {k.replace("part.trunk.lstm0", "lstm0").replace("body.lstm0", "lstm1"): v
          for k, v in ph.items()}
    x = rng.normal(size=(7, 12))
    a = forward_hierarchical(hier, ph, x, graph=g).probs
    b = forward_stacked(spec=stack, params=ps, x=x).probs
    assert np.max(np.abs(a - b)) < 1e-12


def test_hierarchical_routes_columns(rng):
    """Perturbing one part's joints only changes that part's hidden path."""
    g = limb_graph(6)
    spec = build_spec("P3,B4", 18, 3, graph=g)
    p = init_params(spec, 2)
    for k in p:
        if k.startswith("part.left-arm"):
            p[k][:] = 0.0
    x = rng.normal(size=(5, 18))
    y = x.copy()
    j = g.parts["left-arm"][0]
    y[:, 3 * j:3 * j + 3] += 10.0
    assert np.array_equal(forward_hierarchical(spec, p, x).probs,
                          forward_hierarchical(spec, p, y).probs)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_posteriors_normalized(seed):
    rng = np.random.default_rng(seed)
    spec = build_spec("R3", 4, 4)
    probs = predict_proba(spec, init_params(spec, seed), rng.normal(scale=3, size=(2, 3, 4)))
    assert np.all(probs > 0)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-9)


@pytest.mark.parametrize("structure", ["R4-3", "P2,B3"])
def test_padding_invariance_bitwise(rng, structure):
    g = limb_graph(6)
    spec = build_spec(structure, 18, 3, graph=g)
    p = init_params(spec, 3)
    X = rng.normal(size=(3, 5, 18))
    lengths = np.array([5, 3, 2])
    for n, L in enumerate(lengths):
        X[n, L:] = 0.0
    a = forward(spec, p, X, lengths)[0]
    Xp = np.concatenate([X, np.zeros((3, 9, 18))], axis=1)
    b = forward(spec, p, Xp, lengths)[0]
    assert np.array_equal(a, b)
    # a row's output does not depend on the rest of the batch
    c = forward(spec, p, X[1:2, :3], lengths[1:2])[0]
    assert np.allclose(a[1], c[0], atol=1e-14)


def test_batch_shape_errors(rng):
    spec = build_spec("R3", 4, 2)
    p = init_params(spec, 0)
    with pytest.raises(InvalidInputError):
        forward(spec, p, rng.normal(size=(2, 3, 5)))
    with pytest.raises(InvalidInputError):
        forward(spec, p, rng.normal(size=(2, 3, 4)), np.array([0, 3]))


# ---------------------------------------------------------------- loss

def test_cross_entropy_cases(rng):
    assert cross_entropy(ClassPosterior(np.array([0.0, 1.0])), 1) == 0.0
    assert math.isclose(cross_entropy(ClassPosterior(np.full(4, 0.25)), 2), math.log(4))
    for _ in range(20):
        z = rng.normal(scale=4, size=5)
        naive = -math.log(math.exp(z[3]) / sum(math.exp(v) for v in z))
        assert abs(cross_entropy(ClassPosterior.from_logits(z), 3) - naive) < 1e-10


def test_head_bias_gradient_at_zero_weights(rng):
    spec = build_spec("R3", 4, 3)
    p = {k: np.zeros_like(v) for k, v in init_params(spec, 0).items()}
    X = np.ones((1, 2, 4))
    _, grads, probs = loss_and_grads(spec, p, X, np.array([2]), np.array([1]))
    assert np.array_equal(grads["head.b"], probs[0] - np.eye(3)[1])
    assert np.allclose(probs, 1 / 3, atol=1e-15)


def test_duplicate_equals_weight_two(rng):
    spec = build_spec("R3", 4, 3)
    p = init_params(spec, 5)
    X = rng.normal(size=(3, 4, 4))
    lengths, labels = np.array([4, 4, 2]), np.array([0, 2, 1])
    Xd = np.concatenate([X, X[:1]])
    ld, yd = np.append(lengths, 4), np.append(labels, 0)
    loss_a, ga, _ = loss_and_grads(spec, p, Xd, ld, yd)
    loss_b, gb, _ = loss_and_grads(spec, p, X, lengths, labels, weights=np.array([2.0, 1, 1]))
    assert math.isclose(loss_a, loss_b, rel_tol=1e-12)
    for k in ga:
        assert np.allclose(ga[k], gb[k], atol=1e-14)


# ---------------------------------------------------------------- gradient checks

@pytest.mark.parametrize("variant, structure", [
    ("stacked", "R4-4"), ("stacked", "R3"), ("hierarchical", "P2,B4"),
    ("hierarchical", "P2-2,B3"), ("spatial", "R4-4")])
def test_gradient_check(variant, structure):
    spec, params, X, lengths, labels = gradcheck_problem(variant, structure, T=4, seed=3)
    errors = gradient_check(spec, params, X, lengths, labels)
    assert set(errors) == set(params)
    assert any(".peep" in k for k in errors)
    assert max(errors.values()) < TOLERANCE, errors


def test_gradient_check_catches_corruption():
    spec, params, X, lengths, labels = gradcheck_problem("stacked", "R3", T=3)
    errors = gradient_check(spec, params, X, lengths, labels, corrupt="lstm0.peep")
    assert errors["lstm0.peep"] > TOLERANCE


# ---------------------------------------------------------------- training sanity

def test_overfit_one_batch(rng):
    spec = build_spec("R8", 6, 3)
    p = init_params(spec, 0)
    X = rng.normal(size=(6, 5, 6))
    lengths, labels = np.full(6, 5), np.array([0, 1, 2, 0, 1, 2])
    cfg = TrainConfig(lr0=0.5, grad_clip=None)
    losses = []
    for _ in range(50):
        loss, g, _ = loss_and_grads(spec, p, X, lengths, labels)
        losses.append(loss)
        p = sgd_step(p, g, 0, cfg)
    assert all(b < a for a, b in zip(losses, losses[1:]))
