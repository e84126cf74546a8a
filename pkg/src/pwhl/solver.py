"""Alternating solver for the penalized weighted Huber-LASSO.

One outer iteration updates the coefficients at fixed weights (a convex
L1-penalized Huber regression solved by proximal gradient descent with
backtracking) and then refreshes the weights in closed form from the
unweighted residuals. Iteration stops when the weight vector is stable in
sup norm.

Internal normalization: the coefficient subproblem minimizes

    (1/n) * sum_i huber_loss(w_i * (y_i - x_i' beta), alpha) + lam * ||beta||_1

so that useful lam values stay on an O(1) scale regardless of n. The weight
rule compares per-observation losses against mu * varpi_i without any 1/n.
``solver_objective`` reports the matching joint value; ``pwhl_objective`` in
the core module reports the unnormalized scale used in traces.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import (
    Coefficients,
    Dataset,
    FitResult,
    NumericError,
    PenaltyConfig,
    SolverError,
    beta_vector,
    check_alpha,
    check_prior_weights,
    check_weights,
    huber_loss,
    huber_psi,
    pwhl_objective,
    soft_threshold,
)


@dataclass(frozen=True)
class InnerSolverOptions:
    """Knobs for the proximal-gradient coefficient update."""

    step_init: float = 1.0
    backtrack_factor: float = 0.5
    max_backtracks: int = 50
    beta_tol: float = 1e-7
    max_iters: int = 500

    def __post_init__(self):
        if not (0.0 < self.step_init and np.isfinite(self.step_init)):
            raise ValueError("step_init must be positive")
        if not (0.0 < self.backtrack_factor < 1.0):
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if int(self.max_backtracks) < 1 or int(self.max_iters) < 1:
            raise ValueError("iteration caps must be positive integers")
        if not (self.beta_tol > 0.0):
            raise ValueError("beta_tol must be positive")
        object.__setattr__(self, "max_backtracks", int(self.max_backtracks))
        object.__setattr__(self, "max_iters", int(self.max_iters))


def _smooth_value(X, y, w, beta, alpha):
    r = y - X @ beta
    return float(np.sum(huber_loss(w * r, alpha))) / y.shape[0], r


def update_beta(data, w, beta_prev, alpha, lam, opts=None, trace=None):
    """Solve the coefficient subproblem at fixed weights.

    Proximal gradient descent with backtracking line search on the smooth
    part; each accepted step is guaranteed not to increase the subproblem
    objective. Stops when the iterate moves less than ``opts.beta_tol`` in
    sup norm, or after ``opts.max_iters`` steps.

    Parameters
    ----------
    data : Dataset
    w : array of observation weights in (0, 1]
    beta_prev : warm-start coefficient vector (array or Coefficients)
    alpha, lam : Huber parameter and L1 level
    opts : InnerSolverOptions, optional
    trace : list, optional
        If given, the subproblem objective after each accepted step is
        appended (used by descent checks).

    Returns
    -------
    numpy.ndarray of length p.
    """
    opts = opts or InnerSolverOptions()
    alpha = check_alpha(alpha)
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0.0:
        raise ValueError("lam must be nonnegative and finite")
    X, y = data.X, data.y
    n = data.n
    w = check_weights(w, n)
    beta = beta_vector(beta_prev).copy()
    if beta.shape[0] != data.p:
        raise ValueError(f"beta_prev has length {beta.shape[0]}, expected {data.p}")

    g_val, r = _smooth_value(X, y, w, beta, alpha)
    f_val = g_val + lam * float(np.sum(np.abs(beta)))
    step = opts.step_init
    for _ in range(opts.max_iters):
        u = w * r
        grad = X.T @ (w * huber_psi(u, alpha))
        grad *= -2.0 / n
        if not np.all(np.isfinite(grad)):
            raise NumericError("non-finite gradient in coefficient update", last_beta=beta)

        step = min(opts.step_init, 2.0 * step)
        accepted = False
        for _ in range(opts.max_backtracks):
            cand = soft_threshold(beta - step * grad, step * lam)
            d = cand - beta
            g_cand, r_cand = _smooth_value(X, y, w, cand, alpha)
            bound = g_val + float(grad @ d) + float(d @ d) / (2.0 * step)
            if g_cand <= bound + 1e-12 * max(1.0, abs(g_val)):
                accepted = True
                break
            step *= opts.backtrack_factor
        if not accepted:
            raise SolverError("backtracking line search exhausted", last_beta=beta)

        f_cand = g_cand + lam * float(np.sum(np.abs(cand)))
        if f_cand > f_val + 1e-9 * max(1.0, abs(f_val)):
            raise SolverError("inner objective increased on an accepted step", last_beta=beta)
        delta = float(np.max(np.abs(d))) if d.size else 0.0
        beta, r, g_val, f_val = cand, r_cand, g_cand, f_cand
        if trace is not None:
            trace.append(f_val)
        if delta < opts.beta_tol:
            break
    return beta


def update_weights(residuals, varpi, mu, alpha):
    """Closed-form weight refresh from unweighted residuals.

    w_i = 1 when huber_loss(r_i) <= mu * varpi_i, else (mu * varpi_i) /
    huber_loss(r_i). Output entries always lie in (0, 1].
    """
    r = np.asarray(residuals, dtype=float).ravel()
    if not np.all(np.isfinite(r)):
        raise NumericError("non-finite residuals in weight update")
    varpi = check_prior_weights(varpi, r.shape[0])
    mu = float(mu)
    if not np.isfinite(mu) or mu < 0.0:
        raise ValueError("mu must be nonnegative and finite")
    losses = huber_loss(r, alpha)
    mubar = mu * varpi
    w = np.ones_like(r)
    flag = losses > mubar
    w[flag] = mubar[flag] / losses[flag]
    return w


def solver_objective(data, beta, w, cfg):
    """Joint objective on the solver's normalized scale.

    (1/n) * [sum_i huber_loss(w_i r_i) + mu * sum_i varpi_i |1 - w_i|]
        + lam * ||beta||_1

    On this scale the weight rule never loses to leaving a weight at one,
    and the coefficient step is an exact partial minimizer, which makes it
    the right scale for optimality comparisons.
    """
    b = beta_vector(beta)
    w = check_weights(w, data.n)
    r = data.y - data.X @ b
    loss = float(np.sum(huber_loss(w * r, cfg.alpha)))
    pen_w = cfg.mu * float(np.sum(cfg.varpi * np.abs(1.0 - w)))
    return (loss + pen_w) / data.n + cfg.lam * float(np.sum(np.abs(b)))


def _canonical_row_order(X, y, varpi, w0):
    """Deterministic row order depending only on row contents.

    Fitting in this order (and mapping the weights back) makes the fit
    bitwise invariant under row permutations of the input: the float
    reductions always see the same operand order.
    """
    M = np.ascontiguousarray(np.column_stack((y, varpi, w0, X)))
    keys = [M[i].tobytes() for i in range(M.shape[0])]
    return sorted(range(len(keys)), key=keys.__getitem__)


def fit_pwhl(data, beta0, cfg, opts=None, w0=None):
    """Alternate coefficient and weight updates until the weights stabilize.

    Parameters
    ----------
    data : Dataset
    beta0 : initial coefficients (array or Coefficients), typically from a
        robust warm start.
    cfg : PenaltyConfig
    opts : InnerSolverOptions, optional; ``beta_tol`` and ``max_iters`` are
        overridden by the config's ``beta_tol`` / ``max_inner_iters``.
    w0 : optional initial weights in (0, 1]; defaults to all ones.

    Returns
    -------
    FitResult. ``outliers`` is exactly {i : w_i < 1}. ``objective_trace``
    holds the reported-scale joint objective after every outer iteration.
    """
    varpi = check_prior_weights(cfg.varpi, data.n)
    beta = beta_vector(beta0).copy()
    if beta.shape[0] != data.p:
        raise ValueError(f"beta0 has length {beta.shape[0]}, expected {data.p}")
    if w0 is None:
        w_start = np.ones(data.n)
    else:
        w_start = check_weights(w0, data.n)

    order = _canonical_row_order(data.X, data.y, varpi, w_start)
    ds = Dataset(data.X[order], data.y[order])
    vs = varpi[order]
    cfg_s = replace(cfg, varpi=vs)
    inner = replace(
        opts or InnerSolverOptions(),
        beta_tol=cfg.beta_tol,
        max_iters=cfg.max_inner_iters,
    )

    w = w_start[order]
    trace = []
    converged = False
    iterations = 0
    for _ in range(cfg.max_outer_iters):
        iterations += 1
        beta = update_beta(ds, w, beta, cfg.alpha, cfg.lam, inner)
        r = ds.y - ds.X @ beta
        w_new = update_weights(r, vs, cfg.mu, cfg.alpha)
        trace.append(pwhl_objective(ds, beta, w_new, cfg_s))
        delta = float(np.max(np.abs(w_new - w)))
        w = w_new
        if delta < cfg.w_tol:
            converged = True
            break

    w_out = np.empty(data.n)
    w_out[order] = w
    outliers = frozenset(np.flatnonzero(w_out < 1.0).tolist())
    return FitResult(
        beta=Coefficients(beta),
        w=w_out,
        outliers=outliers,
        objective_trace=tuple(trace),
        outer_iterations=iterations,
        converged=converged,
        config_used=cfg,
    )


def fit_huber_lasso(data, alpha, lam, opts=None):
    """L1-penalized Huber regression with all weights frozen at one.

    The non-robust-weights baseline: a single coefficient subproblem solved
    from zero to its own convergence.
    """
    opts = opts or InnerSolverOptions()
    beta = update_beta(data, np.ones(data.n), np.zeros(data.p), alpha, lam, opts)
    return Coefficients(beta)


def weight_rule_gap(residuals, varpi, mu, alpha, grid_size=20001):
    """Diagnostic: how far the closed-form weight rule is from per-observation
    brute-force minimization of huber_loss(w r) + mu varpi (1 - w) over (0, 1].

    Returns the vector of nonnegative gaps (rule value minus grid minimum).
    The rule is not an exact minimizer of this subproblem in general; this
    makes the discrepancy observable.
    """
    r = np.asarray(residuals, dtype=float).ravel()
    varpi = check_prior_weights(varpi, r.shape[0])
    w_rule = update_weights(r, varpi, mu, alpha)
    grid = np.linspace(1.0 / grid_size, 1.0, grid_size)
    vals = huber_loss(np.outer(grid, r), alpha) + (mu * varpi)[None, :] * (1.0 - grid)[:, None]
    best = vals.min(axis=0)
    rule_vals = huber_loss(w_rule * r, alpha) + mu * varpi * (1.0 - w_rule)
    return rule_vals - best
