import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cdrl.reward_space import (RefreshSchedule, RewardSpace, conditional_reward, from_condition,
                               refresh_tick, reward_weights, sample_conditions, to_condition)

SPACE = RewardSpace.from_epsilon(("forward", "healthy", "control"), 0.2)

finite = st.floats(-1e3, 1e3, allow_nan=False)


@st.composite
def spaces(draw, max_features=6):
    n = draw(st.integers(2, max_features))
    ranges = []
    for _ in range(n - 1):
        lo = draw(st.floats(-50, 50))
        width = draw(st.floats(1e-2, 50))
        ranges.append((lo, lo + width))
    xi = draw(st.floats(-5, 5))
    anchor = draw(st.integers(0, n - 1))
    return RewardSpace(tuple(f"f{i}" for i in range(n)), tuple(ranges), xi, anchor)


@pytest.mark.parametrize("omega,c", [(1.0, 0.0), (1.2, 1.0), (0.9, -0.5), (0.8, -1.0)])
def test_to_condition_examples(omega, c):
    np.testing.assert_allclose(to_condition(SPACE, [omega, omega]), [c, c], atol=1e-15)


def test_from_condition_extrapolates():
    np.testing.assert_allclose(from_condition(SPACE, [0.0, 2.0]), [1.0, 1.4], atol=1e-15)
    np.testing.assert_allclose(from_condition(SPACE, [-3.0, 10.0]), [0.4, 3.0], atol=1e-14)


def test_reward_examples():
    phi = np.array([2.0, 1.0, -0.5])
    assert conditional_reward(SPACE, [0.0, 0.0], phi) == pytest.approx(2.5, abs=1e-15)
    assert conditional_reward(SPACE, [-0.5, 0.5], phi) == pytest.approx(2.35, abs=1e-14)
    assert conditional_reward(SPACE, [0.3, -0.9], np.zeros(3)) == 0.0


def test_anchor_position_is_configurable():
    space = RewardSpace(("a", "b", "c"), ((0.0, 2.0), (10.0, 20.0)), anchor_weight=3.0,
                        anchor_index=2)
    np.testing.assert_allclose(reward_weights(space, [0.0, 0.0]), [1.0, 15.0, 3.0])


def test_bad_lengths_rejected():
    with pytest.raises(ValueError):
        to_condition(SPACE, [1.0])
    with pytest.raises(ValueError):
        conditional_reward(SPACE, [0.0, 0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        RewardSpace(("a", "b"), ((1.0, 1.0),))
    with pytest.raises(ValueError):
        RewardSpace(("a", "b", "c"), ((0.0, 1.0),))


@settings(max_examples=200)
@given(space=spaces(), data=st.data())
def test_affine_round_trip(space, data):
    c = data.draw(arrays(np.float64, space.condition_dim, elements=st.floats(-10, 10)))
    np.testing.assert_allclose(to_condition(space, from_condition(space, c)), c, rtol=0,
                               atol=1e-9 * (1 + np.abs(space.lo).max() / (space.hi - space.lo).min()))
    w = from_condition(space, c)
    np.testing.assert_allclose(from_condition(space, to_condition(space, w)), w, rtol=1e-12,
                               atol=1e-12 * (1 + np.abs(w).max()))


@settings(max_examples=200)
@given(space=spaces(), data=st.data())
def test_reward_matches_loop_dot_product(space, data):
    n = space.feature_dim
    omega = data.draw(arrays(np.float64, n - 1, elements=st.floats(-20, 20)))
    phi = data.draw(arrays(np.float64, n, elements=st.floats(-20, 20)))
    full, k = [], 0
    for i in range(n):
        if i == space.anchor_index:
            full.append(space.anchor_weight)
        else:
            full.append(omega[k])
            k += 1
    direct = sum(w * f for w, f in zip(full, phi))
    got = conditional_reward(space, to_condition(space, omega), phi)
    assert got == pytest.approx(direct, abs=1e-9 * (1 + sum(abs(w * f) for w, f in zip(full, phi))))


@given(space=spaces(), data=st.data())
def test_reward_linear_in_phi_and_affine_in_c(space, data):
    n, m = space.feature_dim, space.condition_dim
    c1, c2 = (data.draw(arrays(np.float64, m, elements=st.floats(-3, 3))) for _ in range(2))
    p1, p2 = (data.draw(arrays(np.float64, n, elements=st.floats(-3, 3))) for _ in range(2))
    a = data.draw(st.floats(-2, 2))
    scale = 1e-9 * (1 + np.abs(space.lo).max() + np.abs(space.hi).max() + abs(space.anchor_weight))
    lhs = conditional_reward(space, c1, a * p1 + p2)
    rhs = a * conditional_reward(space, c1, p1) + conditional_reward(space, c1, p2)
    assert lhs == pytest.approx(rhs, abs=scale * 100)
    # affine in c: r(t c1 + (1-t) c2) = t r(c1) + (1-t) r(c2)
    t = data.draw(st.floats(0, 1))
    mix = conditional_reward(space, t * c1 + (1 - t) * c2, p1)
    assert mix == pytest.approx(t * conditional_reward(space, c1, p1)
                                + (1 - t) * conditional_reward(space, c2, p1), abs=scale * 100)


@given(k=st.floats(0.01, 100), w=arrays(np.float64, 4, elements=st.floats(-5, 5)),
       phi=arrays(np.float64, 4, elements=st.floats(-5, 5)))
def test_scaling_all_weights_scales_reward(k, w, phi):
    # with an unanchored weight vector, k * weights gives k * reward
    space = RewardSpace(("a", "b", "c", "d"), ((-10.0, 10.0),) * 3, anchor_weight=w[0])
    scaled = RewardSpace(("a", "b", "c", "d"), ((-10.0, 10.0),) * 3, anchor_weight=k * w[0])
    r = conditional_reward(space, to_condition(space, w[1:]), phi)
    rk = conditional_reward(scaled, to_condition(scaled, k * w[1:]), phi)
    assert rk == pytest.approx(k * r, rel=1e-9, abs=1e-9)


def test_batched_reward_matches_rows(rng):
    c = rng.uniform(-2, 2, size=(7, 2))
    phi = rng.normal(size=(7, 3))
    batch = conditional_reward(SPACE, c, phi)
    for i in range(7):
        assert batch[i] == conditional_reward(SPACE, c[i], phi[i])


def test_sample_conditions_bounds_and_determinism():
    a = sample_conditions(SPACE, 500, np.random.default_rng(3))
    b = sample_conditions(SPACE, 500, np.random.default_rng(3))
    assert a.shape == (500, 2)
    assert np.all(np.abs(a) <= 1.0)
    np.testing.assert_array_equal(a, b)
    with pytest.raises(ValueError):
        sample_conditions(SPACE, 0, np.random.default_rng(0))


def test_sample_conditions_moments():
    x = sample_conditions(SPACE, 100_000, np.random.default_rng(11))
    assert np.all(np.abs(x.mean(axis=0)) < 0.02)
    assert np.all(np.abs(x.var(axis=0) - 1 / 3) < 0.02)


def test_refresh_examples():
    every = RefreshSchedule(1)
    assert all(refresh_tick(every) for _ in range(5))
    sched = RefreshSchedule(10)
    due = [t for t in range(1, 101) if refresh_tick(sched)]
    assert due == list(range(10, 101, 10))
    with pytest.raises(ValueError):
        RefreshSchedule(0)


@given(period=st.integers(1, 50), ticks=st.integers(0, 500))
def test_refresh_count(period, ticks):
    sched = RefreshSchedule(period)
    assert sum(refresh_tick(sched) for _ in range(ticks)) == ticks // period
