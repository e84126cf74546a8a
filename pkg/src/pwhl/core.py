"""Core types and closed-form primitives for the weighted Huber-LASSO.

The estimator couples a sparse coefficient vector beta with per-observation
weights w in (0, 1]: a weight strictly below one flags that observation as an
outlier. Everything downstream (solver, tuning, diagnostics) is built on the
few primitives defined here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# |beta_j| above this threshold counts as a nonzero (selected) coefficient
ZERO_TOL = 1e-6


class SolverError(RuntimeError):
    """Optimization failed; ``last_beta`` holds the final iterate, if any."""

    def __init__(self, message, last_beta=None):
        super().__init__(message)
        self.last_beta = last_beta


class NumericError(SolverError):
    """Non-finite values encountered during optimization."""


def _as_float_array(x, name):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_alpha(alpha):
    """Validate the Huber robustification parameter (threshold is 1/alpha)."""
    a = float(alpha)
    if not np.isfinite(a) or a <= 0.0:
        raise ValueError(f"alpha must be a positive finite number, got {alpha!r}")
    return a


def check_weights(w, n=None):
    """Validate an observation-weight vector: entries in (0, 1]."""
    w = _as_float_array(w, "weights").ravel()
    if n is not None and w.shape[0] != n:
        raise ValueError(f"expected {n} weights, got {w.shape[0]}")
    if np.any(w <= 0.0) or np.any(w > 1.0):
        raise ValueError("weights must lie in (0, 1]")
    return w


def check_prior_weights(varpi, n=None):
    """Validate per-observation prior weights: strictly positive and finite."""
    v = _as_float_array(varpi, "prior weights").ravel()
    if n is not None and v.shape[0] != n:
        raise ValueError(f"expected {n} prior weights, got {v.shape[0]}")
    if np.any(v <= 0.0):
        raise ValueError("prior weights must be strictly positive")
    return v


@dataclass(frozen=True)
class Dataset:
    """Immutable regression sample: design matrix X (n, p) and response y (n,)."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=float))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=float)).ravel()
        if X.ndim != 2:
            raise ValueError("X must be a 2-d array")
        n, p = X.shape
        if n < 2:
            raise ValueError("need at least two observations")
        if p < 1:
            raise ValueError("need at least one feature")
        if y.shape[0] != n:
            raise ValueError(f"X has {n} rows but y has {y.shape[0]} entries")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValueError("X and y must be finite")
        names = self.feature_names
        if names is not None:
            names = tuple(str(c) for c in names)
            if len(names) != p:
                raise ValueError(f"expected {p} feature names, got {len(names)}")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]


@dataclass(frozen=True)
class Coefficients:
    """Coefficient vector plus the tolerance used to call an entry nonzero."""

    beta: np.ndarray
    zero_tolerance: float = ZERO_TOL

    def __post_init__(self):
        b = np.ascontiguousarray(np.asarray(self.beta, dtype=float)).ravel()
        if not np.all(np.isfinite(b)):
            raise ValueError("coefficients must be finite")
        if not (float(self.zero_tolerance) >= 0.0):
            raise ValueError("zero_tolerance must be nonnegative")
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "zero_tolerance", float(self.zero_tolerance))

    def support(self):
        """Indices j with |beta_j| above the zero tolerance."""
        return np.flatnonzero(np.abs(self.beta) > self.zero_tolerance)

    def __len__(self):
        return self.beta.shape[0]


def beta_vector(beta):
    """Accept a Coefficients instance or a plain array, return the raw vector."""
    if isinstance(beta, Coefficients):
        return beta.beta
    return _as_float_array(beta, "beta").ravel()


@dataclass(frozen=True)
class PenaltyConfig:
    """Tuning constants for one joint fit.

    alpha   Huber robustification parameter; the loss switches from quadratic
            to linear at 1/alpha.
    mu      weight-penalty level; observation i is chargeable up to
            mu * varpi[i] before its weight drops below one.
    lam     L1 penalty level on the coefficients.
    varpi   per-observation prior weights (larger = harder to flag).
    """

    alpha: float
    mu: float
    lam: float
    varpi: np.ndarray
    max_outer_iters: int = 100
    max_inner_iters: int = 500
    w_tol: float = 1e-8
    beta_tol: float = 1e-7

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        for name in ("mu", "lam"):
            v = float(getattr(self, name))
            if not np.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be nonnegative and finite")
            object.__setattr__(self, name, v)
        varpi = check_prior_weights(self.varpi)
        varpi = np.ascontiguousarray(varpi)
        varpi.setflags(write=False)
        object.__setattr__(self, "varpi", varpi)
        for name in ("max_outer_iters", "max_inner_iters"):
            v = int(getattr(self, name))
            if v < 1:
                raise ValueError(f"{name} must be a positive integer")
            object.__setattr__(self, name, v)
        for name in ("w_tol", "beta_tol"):
            v = float(getattr(self, name))
            if not (v > 0.0):
                raise ValueError(f"{name} must be positive")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class FitResult:
    """Joint fit output: coefficients, weights, and the flagged observations."""

    beta: Coefficients
    w: np.ndarray
    outliers: frozenset
    objective_trace: tuple
    outer_iterations: int
    converged: bool
    config_used: PenaltyConfig

    def __post_init__(self):
        w = check_weights(self.w)
        w = np.ascontiguousarray(w)
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "outliers", frozenset(int(i) for i in self.outliers))
        object.__setattr__(self, "objective_trace", tuple(float(v) for v in self.objective_trace))
        if self.outer_iterations >= 1 and len(self.objective_trace) == 0:
            raise ValueError("objective_trace must be nonempty after at least one iteration")
        if self.outliers != frozenset(np.flatnonzero(self.w < 1.0).tolist()):
            raise ValueError("outlier set must be exactly {i : w_i < 1}")


def huber_loss(x, alpha):
    """Huber loss with threshold 1/alpha.

    Quadratic x**2 for |x| <= 1/alpha, linear 2|x|/alpha - 1/alpha**2 beyond.
    Accepts scalars or arrays; alpha must be positive.
    """
    a = check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("huber_loss: input must be finite")
    cut = 1.0 / a
    ax = np.abs(x)
    out = np.where(ax <= cut, x * x, 2.0 * cut * ax - cut * cut)
    return float(out) if out.ndim == 0 else out


def huber_psi(e, alpha):
    """Huber score: identity inside [-1/alpha, 1/alpha], clipped outside.

    Half the derivative of ``huber_loss``: d/dx huber_loss(x) = 2 * huber_psi(x).
    """
    a = check_alpha(alpha)
    e = np.asarray(e, dtype=float)
    if not np.all(np.isfinite(e)):
        raise ValueError("huber_psi: input must be finite")
    cut = 1.0 / a
    out = np.clip(e, -cut, cut)
    return float(out) if out.ndim == 0 else out


def soft_threshold(x, t):
    """Soft-thresholding operator: sign(x) * max(|x| - t, 0).

    This is the proximal map of t * |.|, i.e. the exact minimizer of
    0.5 * (z - x)**2 + t * |z| over z.
    """
    t = float(t)
    if not np.isfinite(t) or t < 0.0:
        raise ValueError("threshold must be nonnegative and finite")
    x = np.asarray(x, dtype=float)
    out = np.sign(x) * np.maximum(np.abs(x) - t, 0.0)
    return float(out) if out.ndim == 0 else out


def pwhl_objective(data, beta, w, cfg):
    """Joint objective value at (beta, w).

    0.5 * sum_i huber_loss(w_i * (y_i - x_i' beta), alpha)
        + mu * sum_i varpi_i * |1 - w_i|  +  lam * ||beta||_1

    This is the reported/traced scale; the solver's subproblems use their own
    internal normalization (see solver module).
    """
    b = beta_vector(beta)
    if b.shape[0] != data.p:
        raise ValueError(f"beta has length {b.shape[0]}, expected {data.p}")
    w = check_weights(w, data.n)
    varpi = check_prior_weights(cfg.varpi, data.n)
    r = data.y - data.X @ b
    loss = 0.5 * float(np.sum(huber_loss(w * r, cfg.alpha)))
    w_pen = cfg.mu * float(np.sum(varpi * np.abs(1.0 - w)))
    l1 = cfg.lam * float(np.sum(np.abs(b)))
    return loss + w_pen + l1
