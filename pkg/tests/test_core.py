"""Closed-form primitives: frozen hand values, branch logic, invariants."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pwhl.core import (
    Coefficients,
    Dataset,
    PenaltyConfig,
    check_weights,
    huber_loss,
    huber_psi,
    pwhl_objective,
    soft_threshold,
)

finite_floats = st.floats(min_value=-1e6, max_value=1e6,
                          allow_nan=False, allow_infinity=False)


# ---------------------------------------------------------------- huber_loss

def test_huber_loss_hand_values():
    assert huber_loss(0.0, 1.0) == 0.0
    assert huber_loss(0.5, 1.0) == 0.25
    assert huber_loss(2.0, 1.0) == 3.0
    # both branches agree at the threshold
    assert huber_loss(1.0, 1.0) == 1.0


def test_huber_loss_branches():
    # alpha = 0.5 puts the threshold at 2: quadratic below, linear above
    assert huber_loss(1.5, 0.5) == 2.25
    assert huber_loss(3.0, 0.5) == 8.0    # 2*2*3 - 4


def test_huber_loss_is_even_and_array_safe():
    x = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    out = huber_loss(x, 1.0)
    assert out.shape == x.shape
    np.testing.assert_allclose(out, huber_loss(-x, 1.0))
    np.testing.assert_array_equal(out, [3.0, 0.25, 0.0, 0.25, 3.0])


def test_huber_loss_rejects_bad_inputs():
    with pytest.raises(ValueError):
        huber_loss(1.0, 0.0)
    with pytest.raises(ValueError):
        huber_loss(1.0, -2.0)
    with pytest.raises(ValueError):
        huber_loss(np.array([1.0, np.nan]), 1.0)


@given(x=finite_floats, y=finite_floats,
       alpha=st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=200, deadline=None)
def test_huber_loss_midpoint_convexity(x, y, alpha):
    mid = huber_loss(0.5 * (x + y), alpha)
    avg = 0.5 * (huber_loss(x, alpha) + huber_loss(y, alpha))
    assert mid <= avg + 1e-9 * max(1.0, abs(avg))


@given(alpha=st.floats(min_value=1e-2, max_value=1e2))
@settings(max_examples=100, deadline=None)
def test_huber_loss_continuous_at_threshold(alpha):
    cut = 1.0 / alpha
    eps = 1e-9 * max(1.0, cut)
    lo = huber_loss(cut - eps, alpha)
    hi = huber_loss(cut + eps, alpha)
    assert abs(hi - lo) < 1e-6 * max(1.0, cut * cut)


# ---------------------------------------------------------------- huber_psi

def test_huber_psi_hand_values():
    assert huber_psi(0.0, 1.0) == 0.0
    assert huber_psi(0.3, 1.0) == 0.3
    assert huber_psi(-5.0, 0.5) == -2.0


def test_huber_psi_is_half_loss_derivative():
    # d/dx huber_loss(x) = 2 * huber_psi(x), checked off the kink
    rng = np.random.default_rng(7)
    alpha = 0.8
    cut = 1.0 / alpha
    xs = rng.uniform(-4.0, 4.0, 200)
    xs = xs[np.abs(np.abs(xs) - cut) > 1e-3]
    h = 1e-6
    num = (huber_loss(xs + h, alpha) - huber_loss(xs - h, alpha)) / (2.0 * h)
    np.testing.assert_allclose(num, 2.0 * huber_psi(xs, alpha), atol=1e-6)


@given(e=finite_floats, alpha=st.floats(min_value=1e-3, max_value=1e3))
@settings(max_examples=200, deadline=None)
def test_huber_psi_bounded_and_odd(e, alpha):
    v = huber_psi(e, alpha)
    assert abs(v) <= 1.0 / alpha + 1e-12
    assert huber_psi(-e, alpha) == -v


# ---------------------------------------------------------------- soft_threshold

def test_soft_threshold_hand_values():
    assert soft_threshold(1.2, 0.5) == pytest.approx(0.7)
    assert soft_threshold(-0.3, 0.5) == 0.0
    assert soft_threshold(2.0, 1.3) == pytest.approx(0.7)
    assert soft_threshold(-2.0, 1.3) == pytest.approx(-0.7)
    assert soft_threshold(3.25, 0.0) == 3.25


def test_soft_threshold_rejects_negative_threshold():
    with pytest.raises(ValueError):
        soft_threshold(1.0, -0.1)


@given(x=st.floats(min_value=-100, max_value=100),
       t=st.floats(min_value=0, max_value=50))
@settings(max_examples=200, deadline=None)
def test_soft_threshold_is_prox_of_l1(x, t):
    # the output must beat every point of a dense grid on the prox objective
    z_star = soft_threshold(x, t)
    obj = lambda z: 0.5 * (z - x) ** 2 + t * abs(z)
    grid = np.linspace(x - 2 * t - 1, x + 2 * t + 1, 2001)
    assert obj(z_star) <= np.min(0.5 * (grid - x) ** 2 + t * np.abs(grid)) + 1e-9


def test_soft_threshold_vectorized():
    x = np.array([-2.0, -0.5, 0.0, 0.5, 2.0])
    np.testing.assert_allclose(soft_threshold(x, 1.0), [-1.0, 0.0, 0.0, 0.0, 1.0])


# ---------------------------------------------------------------- containers

def test_dataset_validation_and_immutability():
    X = np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]])
    y = np.array([1.0, 2.0, 3.0])
    ds = Dataset(X, y)
    assert ds.n == 3 and ds.p == 2
    with pytest.raises(ValueError):
        ds.X[0, 0] = 99.0
    with pytest.raises(ValueError):
        Dataset(X[:1], y[:1])          # fewer than two rows
    with pytest.raises(ValueError):
        Dataset(X, y[:2])              # length mismatch
    with pytest.raises(ValueError):
        Dataset(X * np.nan, y)
    with pytest.raises(ValueError):
        Dataset(X, y, feature_names=("a",))


def test_coefficients_support_uses_tolerance():
    c = Coefficients(np.array([0.5, 1e-9, -0.3, 0.0]))
    np.testing.assert_array_equal(c.support(), [0, 2])
    loose = Coefficients(np.array([0.5, 1e-9, -0.3, 0.0]), zero_tolerance=0.4)
    np.testing.assert_array_equal(loose.support(), [0])
    assert len(c) == 4


def test_check_weights_bounds():
    assert check_weights([0.5, 1.0]).tolist() == [0.5, 1.0]
    with pytest.raises(ValueError):
        check_weights([0.0, 1.0])
    with pytest.raises(ValueError):
        check_weights([0.5, 1.1])
    with pytest.raises(ValueError):
        check_weights([0.5], n=2)


def test_penalty_config_validation():
    varpi = np.ones(3)
    cfg = PenaltyConfig(alpha=0.5, mu=0.2, lam=0.1, varpi=varpi)
    assert cfg.alpha == 0.5
    with pytest.raises(ValueError):
        PenaltyConfig(alpha=-1.0, mu=0.2, lam=0.1, varpi=varpi)
    with pytest.raises(ValueError):
        PenaltyConfig(alpha=0.5, mu=-0.2, lam=0.1, varpi=varpi)
    with pytest.raises(ValueError):
        PenaltyConfig(alpha=0.5, mu=0.2, lam=0.1, varpi=np.zeros(3))
    with pytest.raises(ValueError):
        PenaltyConfig(alpha=0.5, mu=0.2, lam=0.1, varpi=varpi, w_tol=0.0)


# ---------------------------------------------------------------- objective

def test_objective_hand_value():
    # n=2, p=1 instance evaluated by hand:
    # r = (0, 1), w = (1, 0.5) -> w*r = (0, 0.5), losses (0, 0.25)
    # 0.5*0.25 + 0.2*(1*|1-1| + 1*|1-0.5|) + 0.1*1 = 0.125 + 0.1 + 0.1
    ds = Dataset(np.array([[1.0], [1.0]]), np.array([1.0, 3.0]))
    cfg = PenaltyConfig(alpha=1.0, mu=0.2, lam=0.1, varpi=np.ones(2))
    # residuals are (0, 2): w*r = (0, 1), losses (0, 1)
    val = pwhl_objective(ds, np.array([1.0]), np.array([1.0, 0.5]), cfg)
    assert val == pytest.approx(0.5 * (0.0 + 1.0) + 0.2 * 0.5 + 0.1, abs=1e-12)
    assert val == pytest.approx(0.7, abs=1e-12)


def test_objective_zero_cases():
    ds = Dataset(np.array([[1.0], [2.0]]), np.array([0.0, 0.0]))
    cfg = PenaltyConfig(alpha=1.0, mu=0.3, lam=0.4, varpi=np.ones(2))
    assert pwhl_objective(ds, np.zeros(1), np.ones(2), cfg) == 0.0

    # exact interpolation leaves only the L1 term
    ds2 = Dataset(np.array([[1.0], [2.0]]), np.array([0.5, 1.0]))
    val = pwhl_objective(ds2, np.array([0.5]), np.ones(2), cfg)
    assert val == pytest.approx(0.4 * 0.5, abs=1e-12)


def test_objective_second_hand_value():
    ds = Dataset(np.array([[1.0], [2.0]]), np.array([1.0, 0.0]))
    cfg = PenaltyConfig(alpha=1.0, mu=0.2, lam=0.3, varpi=np.array([1.0, 2.0]))
    val = pwhl_objective(ds, np.array([0.5]), np.array([1.0, 0.5]), cfg)
    # r = (0.5, -1), w*r = (0.5, -0.5), losses (0.25, 0.25)
    # 0.5*0.5 + 0.2*(0 + 2*0.5) + 0.3*0.5 = 0.25 + 0.2 + 0.15
    assert val == pytest.approx(0.6, abs=1e-12)


def test_objective_validates_shapes():
    ds = Dataset(np.array([[1.0], [2.0]]), np.array([1.0, 0.0]))
    cfg = PenaltyConfig(alpha=1.0, mu=0.2, lam=0.3, varpi=np.ones(2))
    with pytest.raises(ValueError):
        pwhl_objective(ds, np.zeros(3), np.ones(2), cfg)
    with pytest.raises(ValueError):
        pwhl_objective(ds, np.zeros(1), np.array([0.5, 1.5]), cfg)
