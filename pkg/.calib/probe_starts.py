"""Probe: (a) does the clean-basin candidate beat the absorbed one under the
LTS objective (search starvation) or lose to it (objective failure)?
(b) warm-stage miss counts at n_starts 60 vs 200, lambda0 fixed at 0.05.
"""
import json
import sys
import time

import numpy as np

from pwhl.simgen import ContaminationSpec, PipelineConfig, derive_seed, generate_sample
from pwhl.warmstart import _quad_lasso, _trimmed_objective, compute_warm_start
from pwhl.solver import InnerSolverOptions
from pwhl.core import Dataset, beta_vector

_STREAM_WARMSTART = 3

SCEN = {
    "case2_s1": ContaminationSpec(n=100, p=400, case="covariate", c=0.1, seed=1),
    "c703_s1": ContaminationSpec(n=100, p=400, case="covariate", c=0.3, seed=1),
    "hetero2_s1": ContaminationSpec(n=100, p=400, case="covariate", c=0.1,
                                    hetero=True, seed=1),
}

OPTS = InnerSolverOptions(beta_tol=1e-6, max_iters=300)


def oracle_candidate(sample, lam0, h):
    """Clean-rows quad lasso, then C-steps on the full sample."""
    data = sample.data
    clean = np.array(sorted(set(range(data.n)) - set(sample.truth_outliers)))
    beta = _quad_lasso(data.X[clean], data.y[clean], lam0, np.zeros(data.p), OPTS)
    prev = None
    for _ in range(20):
        r = data.y - data.X @ beta
        subset = np.sort(np.argsort(np.abs(r), kind="stable")[:h])
        if prev is not None and np.array_equal(subset, prev):
            break
        beta = _quad_lasso(data.X[subset], data.y[subset], lam0, beta, OPTS)
        prev = subset
    r = data.y - data.X @ beta
    subset = np.sort(np.argsort(np.abs(r), kind="stable")[:h])
    return beta, _trimmed_objective(data.X, data.y, beta, subset, lam0)


def lts_obj(sample, beta, lam0, h):
    data = sample.data
    r = data.y - data.X @ beta
    subset = np.sort(np.argsort(np.abs(r), kind="stable")[:h])
    return _trimmed_objective(data.X, data.y, beta, subset, lam0)


def run(name, spec, n_starts):
    t0 = time.time()
    missed = soft = 0
    bad = []
    obj_rows = []
    for rep in range(20):
        s = generate_sample(spec, rep)
        warm = compute_warm_start(
            s.data, lambda0=0.05, trim_fraction=0.65, n_starts=n_starts,
            rng_seed=derive_seed(spec.seed, rep, _STREAM_WARMSTART),
        )
        w0 = warm.w0
        mx = w0.max()
        t_rows = np.array(sorted(s.truth_outliers))
        miss_rows = t_rows[w0[t_rows] >= mx - 1e-12]
        soft_rows = t_rows[(w0[t_rows] > 0.5) & (w0[t_rows] < mx - 1e-12)]
        missed += miss_rows.size
        soft += soft_rows.size
        if miss_rows.size:
            bad.append(rep)
            found = lts_obj(s, beta_vector(warm.beta0), 0.05, 65)
            _, orc = oracle_candidate(s, 0.05, 65)
            obj_rows.append((rep, round(found, 4), round(orc, 4)))
    dt = time.time() - t0
    print(name, n_starts, json.dumps({"missed": int(missed), "soft": int(soft),
                                      "bad_reps": bad}), f"{dt:.0f}s", flush=True)
    for rep, found, orc in obj_rows:
        tag = "STARVED" if orc < found - 1e-9 else "OBJ-PREFERS-ABSORption"
        print(f"    rep {rep}: found {found} oracle {orc} -> {tag}", flush=True)


for name, spec in SCEN.items():
    for ns in (60, 200):
        run(name, spec, ns)
print("STARTS PROBE DONE", flush=True)
