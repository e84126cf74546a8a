"""Warm-start chain: trimmed fit, initial weights, priors, pilot refit."""

import numpy as np
import pytest

from pwhl.core import Dataset
from pwhl.solver import InnerSolverOptions, update_beta
from pwhl.warmstart import (
    compute_warm_start,
    initial_weights,
    pilot_refit,
    prior_weights,
    sparse_lts_init,
)

_QUAD_ALPHA = 1e-6  # huge threshold turns the Huber solver into least squares


# ---------------------------------------------------------------- sparse_lts_init

def test_lts_no_trim_equals_plain_penalized_fit():
    rng = np.random.default_rng(4)
    n, p = 40, 6
    X = rng.normal(size=(n, p))
    y = X @ np.array([1.0, -0.5, 0, 0, 0.3, 0]) + rng.normal(0, 0.5, n)
    ds = Dataset(X, y)
    opts = InnerSolverOptions(beta_tol=1e-9, max_iters=2000)
    beta_lts = sparse_lts_init(ds, 0.1, trim_fraction=1.0, n_starts=3,
                               rng_seed=0, opts=opts)
    beta_plain = update_beta(ds, np.ones(n), np.zeros(p), _QUAD_ALPHA, 0.1, opts)
    np.testing.assert_allclose(beta_lts.beta, beta_plain, atol=1e-5)


def test_lts_zero_response_gives_zero():
    ds = Dataset(np.random.default_rng(0).normal(size=(20, 5)), np.zeros(20))
    beta = sparse_lts_init(ds, 0.1, rng_seed=1)
    np.testing.assert_array_equal(beta.beta, np.zeros(5))


def test_lts_resists_gross_response_outliers():
    rng = np.random.default_rng(123)
    n, p = 60, 10
    X = rng.normal(size=(n, p))
    beta_star = np.zeros(p)
    beta_star[:3] = 1.0
    y = X @ beta_star + rng.normal(0, 1, n)
    y[:6] += 50.0
    ds = Dataset(X, y)
    opts = InnerSolverOptions(beta_tol=1e-8, max_iters=1000)
    beta_trim = sparse_lts_init(ds, 0.1, trim_fraction=0.75, n_starts=20,
                                rng_seed=7, opts=opts)
    beta_plain = update_beta(ds, np.ones(n), np.zeros(p), _QUAD_ALPHA, 0.1, opts)
    err_trim = float(np.linalg.norm(beta_trim.beta - beta_star))
    err_plain = float(np.linalg.norm(beta_plain - beta_star))
    assert err_trim < err_plain


def test_lts_deterministic_and_details():
    rng = np.random.default_rng(5)
    ds = Dataset(rng.normal(size=(30, 4)), rng.normal(size=30))
    a = sparse_lts_init(ds, 0.2, n_starts=5, rng_seed=11)
    b, info = sparse_lts_init(ds, 0.2, n_starts=5, rng_seed=11, return_details=True)
    assert a.beta.tobytes() == b.beta.tobytes()
    assert info["h"] == int(np.ceil(0.75 * 30))
    assert len(info["traces"]) == 5
    # concentration never increases the trimmed objective within a start
    for trace in info["traces"]:
        diffs = np.diff(np.asarray(trace))
        assert np.all(diffs <= 1e-9 * np.maximum(1.0, np.abs(trace[:-1])))


def test_lts_validates_arguments():
    ds = Dataset(np.ones((10, 2)), np.arange(10.0))
    with pytest.raises(ValueError):
        sparse_lts_init(ds, -0.1)
    with pytest.raises(ValueError):
        sparse_lts_init(ds, 0.1, trim_fraction=0.0)
    with pytest.raises(ValueError):
        sparse_lts_init(ds, 0.1, trim_fraction=1.5)
    with pytest.raises(ValueError):
        sparse_lts_init(ds, 0.1, n_starts=0)
    with pytest.raises(ValueError):
        sparse_lts_init(ds, 0.1, elemental_size=0)


# ---------------------------------------------------------------- initial_weights

def test_initial_weights_flat_residuals():
    w = initial_weights(np.full(7, 3.0), clamp_eps=0.01)
    np.testing.assert_array_equal(w, np.full(7, 0.99))


def test_initial_weights_single_gross_residual():
    r = np.array([0.1, -0.2, 0.15, -0.05, 0.12, 20.0])
    w = initial_weights(r, clamp_eps=0.01)
    assert np.argmin(w) == 5
    assert w[5] < 0.99
    med = np.median(r)
    s = 1.4826 * np.median(np.abs(r - med))
    assert w[5] == pytest.approx(np.clip(2.5 * s / 20.0, 0.01, 0.99))
    np.testing.assert_array_equal(w[:5], np.full(5, 0.99))


def test_initial_weights_never_reach_one():
    rng = np.random.default_rng(2)
    w = initial_weights(rng.normal(0, 5, 200), clamp_eps=0.01)
    assert np.all(w < 1.0) and np.all(w > 0.0)


def test_initial_weights_validation():
    with pytest.raises(ValueError):
        initial_weights(np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        initial_weights(np.array([1.0]), clamp_eps=0.5)
    with pytest.raises(ValueError):
        initial_weights(np.array([]))


# ---------------------------------------------------------------- prior_weights

def test_prior_weights_hand_values():
    assert prior_weights(np.array([np.exp(-1.0)]))[0] == pytest.approx(1.0)
    assert prior_weights(np.array([0.99]), varpi_cap=50.0)[0] == 50.0
    # 1 / |log 0.99| = 99.499... just below the default cap
    assert prior_weights(np.array([0.99]))[0] == pytest.approx(99.49916247, abs=1e-6)


def test_prior_weights_monotone_before_cap():
    w = np.linspace(0.01, 0.95, 40)
    v = prior_weights(w, varpi_cap=1e9)
    assert np.all(np.diff(v) > 0)


def test_prior_weights_rejects_boundary():
    with pytest.raises(ValueError):
        prior_weights(np.array([1.0]))
    with pytest.raises(ValueError):
        prior_weights(np.array([0.0]))
    with pytest.raises(ValueError):
        prior_weights(np.array([0.5]), varpi_cap=0.0)


# ---------------------------------------------------------------- composition

def _contaminated_instance(seed=0, n=50, p=8):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    beta_star = np.zeros(p)
    beta_star[:2] = 1.0
    y = X @ beta_star + rng.normal(0, 1, n)
    y[:5] += 25.0
    return Dataset(X, y)


def test_compute_warm_start_shapes_and_determinism():
    ds = _contaminated_instance(seed=3)
    a = compute_warm_start(ds, lambda0=0.1, n_starts=10, rng_seed=4)
    b = compute_warm_start(ds, lambda0=0.1, n_starts=10, rng_seed=4)
    assert a.beta0.beta.tobytes() == b.beta0.beta.tobytes()
    assert a.w0.tobytes() == b.w0.tobytes()
    assert a.varpi.tobytes() == b.varpi.tobytes()
    assert a.w0.shape == (50,) and a.varpi.shape == (50,)
    assert np.all(a.w0 > 0) and np.all(a.w0 < 1)
    assert np.all(a.varpi > 0)
    # the shifted rows should carry the smallest initial weights
    assert set(np.argsort(a.w0)[:5].tolist()) == {0, 1, 2, 3, 4}


def test_pilot_refit_recovers_falsely_flagged_rows():
    ds = _contaminated_instance(seed=8)
    warm = compute_warm_start(ds, lambda0=0.05, n_starts=10, rng_seed=2)
    refreshed = pilot_refit(ds, warm)
    # outlier rows stay exposed after the rescale
    assert set(np.argsort(refreshed.w0)[:5].tolist()) == {0, 1, 2, 3, 4}
    # and the clean majority sits at the top weight
    top = float(np.max(refreshed.w0))
    assert int(np.sum(refreshed.w0 >= top - 1e-12)) >= 30
    assert np.all(refreshed.varpi > 0)


def test_pilot_refit_keep_floor():
    ds = _contaminated_instance(seed=9)
    warm = compute_warm_start(ds, lambda0=0.05, n_starts=10, rng_seed=5)
    # force the floor path by demanding more kept rows than are flagged clean
    refreshed = pilot_refit(ds, warm, min_keep_fraction=0.98)
    assert refreshed.w0.shape == (50,)
    assert np.all(refreshed.w0 > 0) and np.all(refreshed.w0 < 1)
