"""Data-driven selection of the three tuning constants (mu, alpha, lam).

The weight-penalty level mu is picked first by a random-weighting stability
criterion: the warm-start coefficients are frozen, pairs of independently
perturbed residual vectors are run through the weight rule, and the average
pairwise agreement (Cohen's kappa) of the flagged sets is recorded per mu.
With mu fixed, (alpha, lam) are then chosen by a BIC-type criterion over a
grid of joint fits, where each flagged observation and each selected
coefficient costs one degree of freedom.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import Coefficients, Dataset, PenaltyConfig, beta_vector, check_prior_weights
from .solver import InnerSolverOptions, fit_pwhl, update_beta, update_weights

_HOMOSKEDASTIC_ALPHA = tuple(round(0.1 * k, 10) for k in range(1, 11))
_HETEROSKEDASTIC_ALPHA = (0.01, 0.05) + tuple(round(0.1 * k, 10) for k in range(1, 9))


class TuningError(RuntimeError):
    """No admissible grid point (for instance, every fit interpolated)."""


def _check_grid(name, grid):
    vals = tuple(float(v) for v in grid)
    if len(vals) == 0:
        raise ValueError(f"{name} must be nonempty")
    if any(not np.isfinite(v) or v <= 0.0 for v in vals):
        raise ValueError(f"{name} entries must be positive and finite")
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError(f"{name} must be strictly increasing")
    return vals


@dataclass(frozen=True)
class TuningGrid:
    """Candidate grids and constants for the two selection stages.

    ``hetero`` only switches the default alpha grid (heteroskedastic noise
    calls for smaller alpha, i.e. a wider quadratic zone); an explicitly
    supplied alpha_grid always wins.
    """

    mu_grid: tuple = tuple(round(0.1 * k, 10) for k in range(1, 6))
    alpha_grid: tuple | None = None
    lambda_grid: tuple = tuple(round(0.1 * k, 10) for k in range(1, 11))
    n_pairs: int = 20
    c_bic: float = 1.01
    hetero: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mu_grid", _check_grid("mu_grid", self.mu_grid))
        alpha = self.alpha_grid
        if alpha is None:
            alpha = _HETEROSKEDASTIC_ALPHA if self.hetero else _HOMOSKEDASTIC_ALPHA
        object.__setattr__(self, "alpha_grid", _check_grid("alpha_grid", alpha))
        object.__setattr__(self, "lambda_grid", _check_grid("lambda_grid", self.lambda_grid))
        if int(self.n_pairs) < 1:
            raise ValueError("n_pairs must be a positive integer")
        object.__setattr__(self, "n_pairs", int(self.n_pairs))
        if not (0.0 < float(self.c_bic) < 2.0):
            raise ValueError("c_bic must lie in (0, 2)")
        object.__setattr__(self, "c_bic", float(self.c_bic))


def cohens_kappa(set_a, set_b, n):
    """Chance-corrected agreement of two index sets within {0, ..., n-1}.

    When the expected agreement is (numerically) one, the sets leave no room
    for chance correction: returns 1.0 if they are equal, else 0.0.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be positive")
    A = frozenset(int(i) for i in set_a)
    B = frozenset(int(i) for i in set_b)
    for S in (A, B):
        if S and (min(S) < 0 or max(S) >= n):
            raise ValueError("set elements must lie in range(n)")
    a, b = len(A), len(B)
    p_o = (len(A & B) + (n - len(A | B))) / n
    p_e = (a * b + (n - a) * (n - b)) / (n * n)
    if 1.0 - p_e < 1e-12:
        return 1.0 if A == B else 0.0
    return (p_o - p_e) / (1.0 - p_e)


def _perturbed_outlier_set(r0, omega, varpi, mu, alpha):
    """Flagged set after one weight pass on randomly rescaled residuals."""
    w = update_weights(omega * r0, varpi, mu, alpha)
    return frozenset(np.flatnonzero(w < 1.0).tolist())


@dataclass(frozen=True)
class MuSelection:
    mu: float
    table: tuple  # rows of (mu, stability score)


def select_mu(data, beta0, varpi, alpha, grid, rng_seed=0):
    """Pick mu by random-weighting stability of the flagged set.

    For each candidate mu, ``grid.n_pairs`` pairs of unit-mean exponential
    perturbation vectors rescale the frozen warm-start residuals; each pair
    contributes the kappa agreement of its two flagged sets. The mu with the
    smallest average agreement is returned (ties go to the smaller mu).

    Deterministic given ``rng_seed``: draw b of candidate index k uses the
    streams (rng_seed, k, b, 0) and (rng_seed, k, b, 1), so evaluations can
    be parallelized without changing the result.
    """
    varpi = check_prior_weights(varpi, data.n)
    r0 = data.y - data.X @ beta_vector(beta0)
    rows = []
    best_mu, best_score = None, np.inf
    for k, mu in enumerate(grid.mu_grid):
        kappas = []
        for b in range(grid.n_pairs):
            om1 = np.random.default_rng((int(rng_seed), k, b, 0)).exponential(1.0, data.n)
            om2 = np.random.default_rng((int(rng_seed), k, b, 1)).exponential(1.0, data.n)
            s1 = _perturbed_outlier_set(r0, om1, varpi, mu, alpha)
            s2 = _perturbed_outlier_set(r0, om2, varpi, mu, alpha)
            kappas.append(cohens_kappa(s1, s2, data.n))
        score = float(np.mean(kappas))
        rows.append((float(mu), score))
        if score < best_score:
            best_mu, best_score = float(mu), score
    return MuSelection(mu=best_mu, table=tuple(rows))


def bic_score(data, fit, c_bic=1.01):
    """BIC-type score of a joint fit.

    n * log(RSS/n) + df * (log n + c_bic * log(p + n)) with
    RSS = sum_i (w_i * (y_i - x_i' beta))^2 and df counting selected
    coefficients plus flagged observations. A zero RSS (perfect weighted
    interpolation) returns -inf; callers must treat that as degenerate
    rather than optimal.
    """
    c_bic = float(c_bic)
    n, p = data.n, data.p
    r = data.y - data.X @ fit.beta.beta
    rss = float(np.sum((fit.w * r) ** 2))
    df = int(fit.beta.support().shape[0]) + len(fit.outliers)
    if rss == 0.0:
        return -math.inf
    return n * math.log(rss / n) + df * (math.log(n) + c_bic * math.log(p + n))


@dataclass(frozen=True)
class BicRow:
    alpha: float
    lam: float
    score: float
    df: int
    rss: float


@dataclass(frozen=True)
class GridSelection:
    alpha: float
    lam: float
    fit: object
    table: tuple  # BicRow entries, alpha-major ascending


def select_alpha_lambda(data, mu_hat, grid, warm, opts=None,
                        max_outer_iters=100, max_inner_iters=500,
                        w_tol=1e-8, beta_tol=1e-7,
                        search_max_outer=40, search_w_tol=1e-5):
    """Choose (alpha, lam) by the BIC-type score at fixed mu.

    Runs one joint fit per grid point. Within each alpha the lam values are
    visited in descending order and every fit is warm-started from its
    neighbor's solution (the first from the supplied ``WarmStart``), so the
    whole sweep behaves like a path algorithm. Grid fits use the looser
    ``search_*`` stopping profile; the winning cell is then refit at the
    requested tolerances and that refit is returned. Ties are broken toward
    larger alpha and then larger lam. The full score table is returned
    alongside the winning fit.
    """
    mu_hat = float(mu_hat)
    opts = opts or InnerSolverOptions()
    best = None  # (score, alpha, lam)
    rows = []
    for alpha in sorted(grid.alpha_grid, reverse=True):
        beta_prev, w_prev = warm.beta0, warm.w0
        for lam in sorted(grid.lambda_grid, reverse=True):
            cfg = PenaltyConfig(
                alpha=alpha, mu=mu_hat, lam=lam, varpi=warm.varpi,
                max_outer_iters=search_max_outer, max_inner_iters=max_inner_iters,
                w_tol=search_w_tol, beta_tol=beta_tol,
            )
            fit = fit_pwhl(data, beta_prev, cfg, opts=opts, w0=w_prev)
            beta_prev, w_prev = fit.beta, fit.w
            score = bic_score(data, fit, grid.c_bic)
            r = data.y - data.X @ fit.beta.beta
            rss = float(np.sum((fit.w * r) ** 2))
            df = int(fit.beta.support().shape[0]) + len(fit.outliers)
            rows.append(BicRow(alpha=float(alpha), lam=float(lam),
                               score=score, df=df, rss=rss))
            if math.isinf(score) and score < 0:
                continue
            if best is None or score < best[0]:
                best = (score, float(alpha), float(lam))
    if best is None:
        raise TuningError("every grid point was degenerate (zero weighted RSS)")
    cfg = PenaltyConfig(
        alpha=best[1], mu=mu_hat, lam=best[2], varpi=warm.varpi,
        max_outer_iters=max_outer_iters, max_inner_iters=max_inner_iters,
        w_tol=w_tol, beta_tol=beta_tol,
    )
    final = fit_pwhl(data, warm.beta0, cfg, opts=opts, w0=warm.w0)
    rows.sort(key=lambda row: (row.alpha, row.lam))
    return GridSelection(alpha=best[1], lam=best[2], fit=final, table=tuple(rows))


@dataclass(frozen=True)
class BaselineSelection:
    """Winning cell of the frozen-weight reference fit's BIC sweep."""

    alpha: float
    lam: float
    beta: Coefficients
    table: tuple


def tune_huber_lasso(data, grid, opts=None):
    """BIC-tune a plain Huber-LASSO (every observation weight frozen at one).

    Reference method for robustness comparisons: no rows can be flagged, so
    the degrees of freedom count only the selected coefficients and the RSS
    uses the plain residuals. The lam values are swept in descending order
    per alpha with warm starts, mirroring the joint-fit grid search. Ties
    break toward larger alpha then larger lam.
    """
    opts = opts or InnerSolverOptions()
    n, p = data.n, data.p
    ones = np.ones(n)
    penalty = math.log(n) + grid.c_bic * math.log(p + n)
    best = None  # (score, alpha, lam, beta)
    rows = []
    for alpha in sorted(grid.alpha_grid, reverse=True):
        beta_prev = np.zeros(p)
        for lam in sorted(grid.lambda_grid, reverse=True):
            beta_prev = update_beta(data, ones, beta_prev, alpha, lam, opts)
            coef = Coefficients(beta_prev)
            r = data.y - data.X @ beta_prev
            rss = float(r @ r)
            df = int(coef.support().shape[0])
            if rss == 0.0:
                score = -math.inf
            else:
                score = n * math.log(rss / n) + df * penalty
            rows.append(BicRow(alpha=float(alpha), lam=float(lam),
                               score=score, df=df, rss=rss))
            if math.isinf(score) and score < 0:
                continue
            if best is None or score < best[0]:
                best = (score, float(alpha), float(lam), coef)
    if best is None:
        raise TuningError("every grid point was degenerate (zero RSS)")
    rows.sort(key=lambda row: (row.alpha, row.lam))
    return BaselineSelection(alpha=best[1], lam=best[2], beta=best[3],
                             table=tuple(rows))


def write_mu_table(path, rows):
    """CSV export of the mu stability table (columns: mu, score)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mu", "score"])
        for mu, score in rows:
            writer.writerow([repr(float(mu)), repr(float(score))])


def write_bic_table(path, rows):
    """CSV export of the grid score table (columns: alpha, lambda, score, df, rss)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha", "lambda", "score", "df", "rss"])
        for row in rows:
            writer.writerow([repr(row.alpha), repr(row.lam), repr(row.score),
                             row.df, repr(row.rss)])
