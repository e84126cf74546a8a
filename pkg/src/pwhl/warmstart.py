"""Robust warm starts: trimmed initial coefficients and data-driven weights.

The joint fit needs three ingredients up front: a contamination-resistant
coefficient vector beta0, initial observation weights w0 derived from its
residuals, and prior weights varpi_i = min(cap, 1 / |log w0_i|) that set how
much loss each observation may absorb before being flagged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Coefficients, Dataset, beta_vector
from .solver import InnerSolverOptions, update_beta

# alpha with 1/alpha so large that the Huber loss is effectively squared error
_QUAD_ALPHA = 1e-6
# Elemental subsets need enough rows that a penalized fit on them can tell
# signal coordinates from noise: 3-point subsets routinely hand the first
# concentration step a fit whose residuals cannot expose shifted-covariate
# rows, after which every later step keeps them. Eight rows balances that
# against the chance of an all-clean draw (0.9^8 ~ 0.43 at 10% contamination,
# 0.7^8 ~ 0.06 at 30%, recoverable with enough starts).
_ELEMENTAL_SIZE = 8


def _quad_lasso(X, y, lam, beta_start, opts):
    """L1-penalized least squares via the Huber solver with a huge threshold."""
    ds = Dataset(X, y)
    return update_beta(ds, np.ones(ds.n), beta_start, _QUAD_ALPHA, lam, opts)


def _trimmed_objective(X, y, beta, subset, lam):
    r = y[subset] - X[subset] @ beta
    return float(r @ r) / subset.shape[0] + lam * float(np.sum(np.abs(beta)))


def _memorizing(r, subset, floor):
    """True when the kept residuals sit far below the full-sample scale.

    A fit whose trimmed mean square is a tiny fraction of the squared robust
    scale of all residuals has memorized its subset rather than modeled it.
    """
    if floor is None or floor <= 0.0:
        return False
    rs = r[subset]
    trimmed = float(rs @ rs) / rs.shape[0]
    med = float(np.median(r))
    scale = 1.4826 * float(np.median(np.abs(r - med)))
    if scale <= 0.0:
        return False
    return trimmed < float(floor) * scale * scale


def sparse_lts_init(data, lambda0, trim_fraction=0.75, n_starts=20, rng_seed=0,
                    max_csteps=20, opts=None, elemental_size=_ELEMENTAL_SIZE,
                    return_details=False, leverage_cut=6.0, overfit_floor=0.05):
    """Sparse least-trimmed-squares warm start via concentration steps.

    Each random start draws a small elemental subset, fits an L1-penalized
    least-squares model on it, then repeatedly refits on the h observations
    with the smallest absolute residuals until the subset stops changing
    (or ``max_csteps`` is hit). The candidate with the smallest trimmed
    penalized objective wins. Concentration never increases that objective:
    re-selecting the h best residuals cannot raise the trimmed sum, and the
    warm-started refit cannot raise its own objective.

    Two safeguards deal with contaminated draws. Elemental subsets are
    sampled only from rows whose squared norm sits within ``leverage_cut``
    robust deviations of the median: rows carrying a large covariate shift
    have enormous norms, and a start seeded with even one of them tends to
    soak up the shift instead of exposing it. (If screening leaves fewer
    rows than a subset needs, all rows stay eligible.) Second, with many
    more columns than kept rows a start can drive its trimmed error to
    nearly zero by memorizing its subset, contaminated rows included; such
    a fit scores deceptively well. Candidates whose trimmed mean square
    falls below ``overfit_floor`` times the squared robust scale of their
    full-sample residuals are therefore rejected, unless every candidate
    is (then the smallest objective wins regardless).

    Parameters
    ----------
    data : Dataset
    lambda0 : L1 level used for every subset fit.
    trim_fraction : fraction of observations kept; h = ceil(fraction * n).
        With 1.0 this reduces to a plain penalized least-squares fit.
    n_starts : number of random starts (also the retry budget for degenerate
        subsets).
    rng_seed : base seed; start k draws from an independent stream (seed, k).
    elemental_size : rows per random starting subset (capped at pool size).
    return_details : if True, also return per-start objective traces.
    leverage_cut : robust-z cutoff for the elemental sampling pool; None
        disables the screen.
    overfit_floor : minimum allowed ratio of trimmed mean square to squared
        robust residual scale; 0 disables the guard.

    Returns
    -------
    Coefficients, or (Coefficients, details dict) with ``return_details``.
    """
    n, p = data.n, data.p
    if not (0.0 < trim_fraction <= 1.0):
        raise ValueError("trim_fraction must lie in (0, 1]")
    h = int(np.ceil(trim_fraction * n))
    if h < 2:
        raise ValueError("trimming leaves fewer than two observations")
    lambda0 = float(lambda0)
    if not np.isfinite(lambda0) or lambda0 < 0.0:
        raise ValueError("lambda0 must be nonnegative and finite")
    if int(n_starts) < 1:
        raise ValueError("n_starts must be positive")
    if int(elemental_size) < 1:
        raise ValueError("elemental_size must be positive")
    opts = opts or InnerSolverOptions(beta_tol=1e-6, max_iters=300)

    X, y = data.X, data.y
    pool = np.arange(n)
    if leverage_cut is not None and np.isfinite(leverage_cut):
        norms = np.einsum("ij,ij->i", X, X)
        center = float(np.median(norms))
        spread = 1.4826 * float(np.median(np.abs(norms - center)))
        if spread > 0.0:
            eligible = np.flatnonzero(norms <= center + float(leverage_cut) * spread)
            if eligible.size >= min(int(elemental_size), n):
                pool = eligible
    m = min(int(elemental_size), pool.size)
    best_beta, best_obj = None, np.inf
    fallback_beta, fallback_obj = None, np.inf
    traces = []
    failures = 0
    for k in range(int(n_starts)):
        rng = np.random.default_rng((int(rng_seed), k))
        subset = None
        for _ in range(int(n_starts)):
            cand = np.sort(pool[rng.choice(pool.size, size=m, replace=False)])
            if np.any(X[cand] != 0.0) or np.any(y[cand] != 0.0):
                subset = cand
                break
            failures += 1
        if subset is None:
            continue

        beta = _quad_lasso(X[subset], y[subset], lambda0, np.zeros(p), opts)
        trace = []
        prev_subset = None
        for _ in range(int(max_csteps)):
            r = y - X @ beta
            subset = np.sort(np.argsort(np.abs(r), kind="stable")[:h])
            trace.append(_trimmed_objective(X, y, beta, subset, lambda0))
            if prev_subset is not None and np.array_equal(subset, prev_subset):
                break
            beta = _quad_lasso(X[subset], y[subset], lambda0, beta, opts)
            prev_subset = subset
        r = y - X @ beta
        subset = np.sort(np.argsort(np.abs(r), kind="stable")[:h])
        obj = _trimmed_objective(X, y, beta, subset, lambda0)
        trace.append(obj)
        traces.append(trace)
        if obj < fallback_obj:
            fallback_obj, fallback_beta = obj, beta
        if obj < best_obj and not _memorizing(r, subset, overfit_floor):
            best_obj, best_beta = obj, beta

    if best_beta is None:
        best_beta, best_obj = fallback_beta, fallback_obj
    if best_beta is None:
        raise ValueError("all trimmed starts were degenerate (no usable subset)")
    result = Coefficients(best_beta)
    if return_details:
        return result, {"objective": best_obj, "traces": traces, "h": h,
                        "degenerate_retries": failures}
    return result


def initial_weights(residuals0, clamp_eps=0.01):
    """Initial observation weights from warm-start residuals.

    Residuals within 2.5 robust scales get weight 1 - clamp_eps; larger ones
    get 2.5 * scale / |r|, clamped into [clamp_eps, 1 - clamp_eps]. The scale
    is the median absolute deviation times 1.4826, falling back to the mean
    absolute deviation (and, if that is zero too, every weight is 1 - clamp_eps).
    """
    clamp_eps = float(clamp_eps)
    if not (0.0 < clamp_eps < 0.5):
        raise ValueError("clamp_eps must lie in (0, 0.5)")
    r = np.asarray(residuals0, dtype=float).ravel()
    if r.size == 0:
        raise ValueError("residuals must be nonempty")
    if not np.all(np.isfinite(r)):
        raise ValueError("residuals must be finite")
    med = float(np.median(r))
    dev = np.abs(r - med)
    s = 1.4826 * float(np.median(dev))
    if s == 0.0:
        s = float(np.mean(dev))
    if s == 0.0:
        return np.full(r.shape[0], 1.0 - clamp_eps)
    absr = np.abs(r)
    w = np.full(r.shape[0], 1.0 - clamp_eps)
    big = absr > 2.5 * s
    w[big] = np.clip(2.5 * s / absr[big], clamp_eps, 1.0 - clamp_eps)
    return w


def prior_weights(w0, varpi_cap=100.0):
    """Prior weights varpi_i = min(cap, 1 / |log w0_i|).

    Requires every initial weight strictly inside (0, 1): a weight of exactly
    one would give an infinite prior, which the cap exists to prevent but
    signals an upstream bug, so it is rejected.
    """
    cap = float(varpi_cap)
    if not np.isfinite(cap) or cap <= 0.0:
        raise ValueError("varpi_cap must be positive and finite")
    w = np.asarray(w0, dtype=float).ravel()
    if np.any(w <= 0.0) or np.any(w >= 1.0) or not np.all(np.isfinite(w)):
        raise ValueError("initial weights must lie strictly inside (0, 1)")
    return np.minimum(cap, 1.0 / np.abs(np.log(w)))


@dataclass(frozen=True)
class WarmStart:
    """Bundle of warm-start outputs consumed by tuning and fitting."""

    beta0: Coefficients
    w0: np.ndarray
    varpi: np.ndarray

    def __post_init__(self):
        w0 = np.asarray(self.w0, dtype=float).ravel()
        varpi = np.asarray(self.varpi, dtype=float).ravel()
        if w0.shape != varpi.shape:
            raise ValueError("w0 and varpi must have matching lengths")
        object.__setattr__(self, "w0", w0)
        object.__setattr__(self, "varpi", varpi)


def compute_warm_start(data, lambda0, trim_fraction=0.75, n_starts=20,
                       rng_seed=0, clamp_eps=0.01, varpi_cap=100.0, opts=None,
                       elemental_size=_ELEMENTAL_SIZE):
    """Run the full warm-start chain: trimmed fit, then weight construction."""
    beta0 = sparse_lts_init(data, lambda0, trim_fraction=trim_fraction,
                            n_starts=n_starts, rng_seed=rng_seed, opts=opts,
                            elemental_size=elemental_size)
    r0 = data.y - data.X @ beta_vector(beta0)
    w0 = initial_weights(r0, clamp_eps=clamp_eps)
    varpi = prior_weights(w0, varpi_cap=varpi_cap)
    return WarmStart(beta0=beta0, w0=w0, varpi=varpi)


def pilot_refit(data, warm, alpha=1.0, lam=0.4, clamp_eps=0.01,
                varpi_cap=100.0, opts=None, min_keep_fraction=0.5,
                strip_fraction=0.25, max_passes=3):
    """Refresh a warm start: strip tiny coordinates, re-trim, refit.

    The raw trimmed fit is run at a deliberately small L1 level so that the
    concentration steps land in the uncontaminated basin, but the small
    penalty leaves two kinds of damage behind. First, near-interpolation of
    its own subset collapses the kept residuals (and the robust scale with
    them), so ordinary rows outside the subset end up down-weighted. Second,
    when rows share a common covariate shift, a cheap escape exists: spread
    a small compensating mass over many coordinates so the shifted rows'
    residuals cancel. That fit keeps the true signal almost intact, yet its
    residuals hide the contaminated rows completely, and any refit on a
    subset still containing them drags the signal toward zero (a single
    far-out row's capped loss gradient outpulls the whole clean majority).

    Both problems are handled by a second flagging pass on a hard-thresholded
    copy of the coefficients: zeroing coordinates below ``strip_fraction``
    times the largest magnitude keeps genuine signal but removes spread-out
    compensation mass, so residuals of the stripped vector expose rows the
    raw residuals hid. A row is kept only when both passes trust it; every
    row flagged by either pass is dropped (down-weighting is not enough: a
    shifted row kept at small weight still leaks enough gradient to
    re-absorb its own shift). The survivors get a moderate-penalty refit,
    and the keep/refit cycle repeats (up to ``max_passes``) whenever the
    refit residuals flag rows still in the subset: a straggler the first
    pass misses is dropped as soon as any refit exposes it. The refit runs
    at a Huber threshold near the clean noise level, so a straggler's pull
    on the coefficients is capped instead of quadratic and cannot drag the
    fit back toward hiding it. Initial weights and priors are rebuilt from
    the final refit residuals, which now have an honest scale on the full
    sample.

    ``min_keep_fraction`` guards against a paranoid flagging pass: at least
    that fraction of rows (the smallest stripped residuals) is always kept.
    """
    opts = opts or InnerSolverOptions()
    strip_fraction = float(strip_fraction)
    if not (0.0 <= strip_fraction < 1.0):
        raise ValueError("strip_fraction must lie in [0, 1)")
    if int(max_passes) < 1:
        raise ValueError("max_passes must be positive")
    beta0 = beta_vector(warm.beta0).copy()
    top = float(np.max(np.abs(beta0))) if beta0.size else 0.0
    if top > 0.0 and strip_fraction > 0.0:
        beta0[np.abs(beta0) < strip_fraction * top] = 0.0
    r0 = data.y - data.X @ beta0
    w_strip = initial_weights(r0, clamp_eps=clamp_eps)
    keep = (w_strip >= np.max(w_strip) - 1e-12) \
        & (warm.w0 >= np.max(warm.w0) - 1e-12)
    floor = max(2, int(np.ceil(float(min_keep_fraction) * data.n)))
    if int(np.sum(keep)) < floor:
        keep = np.zeros(data.n, dtype=bool)
        keep[np.argsort(np.abs(r0), kind="stable")[:floor]] = True
    beta = beta0
    for _ in range(int(max_passes)):
        sub = Dataset(data.X[keep], data.y[keep])
        beta = update_beta(sub, np.ones(sub.n), beta, alpha, lam, opts)
        r = data.y - data.X @ beta
        w_pass = initial_weights(r, clamp_eps=clamp_eps)
        trusted = w_pass >= np.max(w_pass) - 1e-12
        shrunk = keep & trusted
        if int(np.sum(shrunk)) < floor or np.array_equal(shrunk, keep):
            break
        keep = shrunk
    r = data.y - data.X @ beta
    w0 = initial_weights(r, clamp_eps=clamp_eps)
    varpi = prior_weights(w0, varpi_cap=varpi_cap)
    return WarmStart(beta0=Coefficients(beta), w0=w0, varpi=varpi)
