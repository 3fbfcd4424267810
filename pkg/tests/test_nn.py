import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cdrl.checkpoint import Checkpoint, dumps, loads
from cdrl.nn import (LN_EPS, GaussianHead, MlpParams, NonFiniteError, ShapeError, adam_init,
                     adam_step, gaussian_logprob, gaussian_logprob_grads, init_mlp, layer_norm,
                     mlp_forward, mlp_grad, param_count)

from conftest import finite_difference_grads, rel_err


def test_zero_weights_give_bias():
    p = init_mlp((3, 4, 2), np.random.default_rng(0))
    p = p.with_arrays([np.zeros_like(a) for a in p.arrays()])
    p.biases[-1][:] = [0.5, -2.0]
    out, _ = mlp_forward(p, np.array([1.0, 2.0, 3.0]))
    np.testing.assert_array_equal(out, [0.5, -2.0])


def test_identity_layer():
    p = MlpParams((3, 3), [np.eye(3)], [np.zeros(3)], "identity")
    x = np.array([0.3, -1.0, 7.0])
    out, _ = mlp_forward(p, x)
    np.testing.assert_array_equal(out, x)


def test_small_tanh_net_matches_hand_loop():
    p = init_mlp((2, 3, 1), np.random.default_rng(7), "tanh")
    p.biases[0][:] = [0.1, -0.2, 0.3]
    p.biases[1][:] = [0.05]
    x = [0.4, -0.7]
    hidden = []
    for j in range(3):
        s = p.biases[0][j] + sum(p.weights[0][j][i] * x[i] for i in range(2))
        hidden.append(math.tanh(s))
    expected = p.biases[1][0] + sum(p.weights[1][0][j] * hidden[j] for j in range(3))
    out, _ = mlp_forward(p, np.array(x))
    assert out[0] == pytest.approx(expected, abs=1e-14)


def test_forward_rejects_bad_input():
    p = init_mlp((3, 2), np.random.default_rng(0))
    with pytest.raises(ShapeError):
        mlp_forward(p, np.zeros(4))
    with pytest.raises(NonFiniteError):
        mlp_forward(p, np.array([0.0, np.nan, 1.0]))


def test_batch_rows_match_single_inputs(rng):
    p = init_mlp((4, 8, 3), rng, "relu", True)
    xs = rng.normal(size=(5, 4))
    batch, _ = mlp_forward(p, xs)
    for i in range(5):
        single, _ = mlp_forward(p, xs[i])
        np.testing.assert_allclose(batch[i], single, rtol=1e-13, atol=1e-14)


def test_zero_upstream_gives_zero_grads(rng):
    p = init_mlp((3, 5, 2), rng, "tanh", True)
    _, cache = mlp_forward(p, rng.normal(size=3))
    g, gx = mlp_grad(p, cache, np.zeros(2))
    assert all(np.all(a == 0) for a in g.arrays())
    assert np.all(gx == 0)


def test_linear_layer_weight_grad_is_outer_product(rng):
    p = init_mlp((4, 3), rng, "identity")
    x = rng.normal(size=4)
    u = rng.normal(size=3)
    _, cache = mlp_forward(p, x)
    g, gx = mlp_grad(p, cache, u)
    np.testing.assert_allclose(g.weights[0], np.outer(u, x), rtol=1e-14)
    np.testing.assert_allclose(g.biases[0], u)
    np.testing.assert_allclose(gx, p.weights[0].T @ u, rtol=1e-13)


def test_grad_rejects_wrong_upstream(rng):
    p = init_mlp((3, 2), rng)
    _, cache = mlp_forward(p, np.zeros(3))
    with pytest.raises(ShapeError):
        mlp_grad(p, cache, np.zeros(3))


@pytest.mark.parametrize("activation", ["tanh", "relu", "identity"])
@pytest.mark.parametrize("norm", [False, True])
def test_4_8_8_2_gradients_match_finite_differences(activation, norm):
    rng = np.random.default_rng(2024)
    p = init_mlp((4, 8, 8, 2), rng, activation, norm)
    p.biases = [rng.normal(scale=0.1, size=b.shape) for b in p.biases]
    x = rng.normal(size=4)
    u = rng.normal(size=2)
    _, cache = mlp_forward(p, x)
    g, gx = mlp_grad(p, cache, u)
    fd, fdx = finite_difference_grads(p, x, u)
    for analytic, numeric in zip(g.arrays(), fd):
        assert np.max(rel_err(analytic, numeric)) < 1e-4
    assert np.max(rel_err(gx, fdx)) < 1e-4


def test_batched_gradient_is_sum_of_rows(rng):
    p = init_mlp((3, 6, 2), rng, "tanh", True)
    xs = rng.normal(size=(4, 3))
    us = rng.normal(size=(4, 2))
    _, cache = mlp_forward(p, xs)
    g, _ = mlp_grad(p, cache, us)
    total = [np.zeros_like(a) for a in p.arrays()]
    for i in range(4):
        _, c = mlp_forward(p, xs[i])
        gi, _ = mlp_grad(p, c, us[i])
        total = [t + a for t, a in zip(total, gi.arrays())]
    for a, b in zip(g.arrays(), total):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(sizes=st.lists(st.integers(1, 16), min_size=2, max_size=5),
       norm=st.booleans(), seed=st.integers(0, 2**32 - 1))
def test_param_count_formula(sizes, norm, seed):
    p = init_mlp(sizes, np.random.default_rng(seed), "relu", norm)
    flags = (norm,) * (len(sizes) - 2)
    assert p.num_params() == param_count(sizes, flags)


def test_determinism_same_seed():
    a = init_mlp((5, 7, 3), np.random.default_rng(99), "tanh", True)
    b = init_mlp((5, 7, 3), np.random.default_rng(99), "tanh", True)
    x = np.linspace(-1, 1, 5)
    assert mlp_forward(a, x)[0].tobytes() == mlp_forward(b, x)[0].tobytes()


def test_adam_zero_gradient_is_identity(rng):
    p = init_mlp((3, 4, 2), rng)
    state = adam_init(p)
    new, state2 = adam_step(p, p.with_arrays([np.zeros_like(a) for a in p.arrays()]), state, 1e-3)
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), new.arrays()))
    assert state2.step_count == 1


@pytest.mark.parametrize("g", [3.7, -0.002, 1e4])
def test_adam_first_step_moves_by_lr(g):
    (p,), _ = adam_step([np.array([1.0])], [np.array([g])], adam_init([np.array([1.0])]), 0.01)
    assert abs(p[0] - 1.0) == pytest.approx(0.01 * abs(g) / (abs(g) + 1e-8), rel=1e-9)
    assert np.sign(1.0 - p[0]) == np.sign(g)


def test_adam_three_step_trace():
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    p, m, v = 0.0, 0.0, 0.0
    expected = []
    for t, g in enumerate((1.0, 1.0, -1.0), start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        p -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
        expected.append(p)
    # hand values: -0.1, -0.2, -0.2 - 0.1 * (0.071 / 0.271)
    assert expected[2] == pytest.approx(-0.2 - 0.1 * 0.071 / 0.271, abs=1e-8)
    params, state = [np.array([0.0])], adam_init([np.array([0.0])])
    got = []
    for g in (1.0, 1.0, -1.0):
        params, state = adam_step(params, [np.array([g])], state, lr)
        got.append(params[0][0])
    np.testing.assert_allclose(got, expected, rtol=1e-14)
    assert state.step_count == 3


def test_adam_rejects_non_finite(rng):
    p = [np.zeros(2)]
    with pytest.raises(NonFiniteError):
        adam_step(p, [np.array([np.inf, 0.0])], adam_init(p), 1e-3)


def test_layer_norm_examples():
    np.testing.assert_array_equal(layer_norm([3.0, 3.0, 3.0], np.ones(3), np.zeros(3)), 0.0)
    out = layer_norm([1.0, -1.0], np.ones(2), np.zeros(2))
    np.testing.assert_allclose(out, np.array([1.0, -1.0]) / math.sqrt(1 + LN_EPS), rtol=1e-15)
    y = layer_norm([1.0, 2.0, 3.0, 4.0], np.ones(4), np.zeros(4))
    assert abs(y.mean()) < 1e-12
    assert y.var() == pytest.approx(1.0, abs=1e-5 / 1.25 + 1e-6)


def test_gaussian_logprob_at_mode():
    head = GaussianHead(np.zeros(1), np.zeros(1))
    assert gaussian_logprob(head, np.zeros(1)) == pytest.approx(-0.5 * math.log(2 * math.pi))
    assert gaussian_logprob(head, np.zeros(1)) == pytest.approx(-0.9189385, abs=1e-7)


@given(d=st.floats(-20, 20), mean=st.floats(-5, 5), log_std=st.floats(-3, 2))
def test_gaussian_logprob_symmetric(d, mean, log_std):
    head = GaussianHead(np.array([mean]), np.array([log_std]))
    assert gaussian_logprob(head, [mean + d]) == pytest.approx(gaussian_logprob(head, [mean - d]),
                                                              rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("mean,log_std", [(0.0, 0.0), (1.3, -1.2), (-2.0, 1.5)])
def test_gaussian_density_integrates_to_one(mean, log_std):
    head = GaussianHead(np.array([mean]), np.array([log_std]))
    s = math.exp(log_std)
    total, _ = integrate.quad(lambda a: math.exp(gaussian_logprob(head, [a])),
                              mean - 8 * s, mean + 8 * s, epsabs=1e-12, epsrel=1e-12)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_gaussian_logprob_grads_match_finite_differences():
    mean, log_std, a, h = np.array([0.3, -1.0]), np.array([-0.4, 0.2]), np.array([0.9, -0.5]), 1e-6
    dmean, dlog = gaussian_logprob_grads(GaussianHead(mean, log_std), a)
    for i in range(2):
        e = np.eye(2)[i] * h
        fd_m = (gaussian_logprob(GaussianHead(mean + e, log_std), a)
                - gaussian_logprob(GaussianHead(mean - e, log_std), a)) / (2 * h)
        fd_s = (gaussian_logprob(GaussianHead(mean, log_std + e), a)
                - gaussian_logprob(GaussianHead(mean, log_std - e), a)) / (2 * h)
        assert dmean[i] == pytest.approx(fd_m, rel=1e-6)
        assert dlog[i] == pytest.approx(fd_s, rel=1e-6)


def test_checkpoint_round_trip_is_exact(rng):
    nets = {"policy": init_mlp((5, 8, 2), rng, "tanh", False),
            "critic": init_mlp((6, 4, 4, 1), rng, "relu", True)}
    nets["critic"].gains[0][:] = rng.normal(size=4)
    ckpt = Checkpoint({"env_id": "point-runner", "note": "a b"}, nets,
                      {"log_std": np.array([-0.3, 1e-300])})
    text = dumps(ckpt)
    back = loads(text)
    assert back.header == ckpt.header
    for name, net in nets.items():
        other = back.networks[name]
        assert other.layer_sizes == net.layer_sizes and other.layer_norm == net.layer_norm
        assert all(np.array_equal(a, b) for a, b in zip(net.arrays(), other.arrays()))
    np.testing.assert_array_equal(back.extras["log_std"], ckpt.extras["log_std"])
    assert dumps(back) == text
    header, body = text.split("\n\n")
    assert len(body.split()) == sum(n.num_params() for n in nets.values()) + 2
