"""Dump per-candidate stats (mse on own h-subset, L1, induced missed truth
rows, induced soft-flagged truth rows, induced falsely-flagged clean rows)
for every start of every rep of five seed-1 scenarios, to .calib/cands.npz.
Offline rule evaluation then needs no refitting.
"""
import numpy as np

from pwhl.simgen import ContaminationSpec, derive_seed, generate_sample
from pwhl.solver import InnerSolverOptions
from pwhl.warmstart import _quad_lasso, initial_weights

_STREAM_WARMSTART = 3
OPTS = InnerSolverOptions(beta_tol=1e-6, max_iters=300)

SCEN = {
    "case2": ContaminationSpec(n=100, p=400, case="covariate", c=0.1, seed=1),
    "c703": ContaminationSpec(n=100, p=400, case="covariate", c=0.3, seed=1),
    "hetero2": ContaminationSpec(n=100, p=400, case="covariate", c=0.1,
                                 hetero=True, seed=1),
    "case3": ContaminationSpec(n=100, p=400, case="both", c=0.1, seed=1,
                               both_from_contaminated=True),
    "case1": ContaminationSpec(n=100, p=400, case="response", c=0.1, seed=1),
}

N_STARTS = 200
LAM0 = 0.05
H = 65

store = {}
for name, spec in SCEN.items():
    for rep in range(20):
        s = generate_sample(spec, rep)
        data = s.data
        t_rows = np.array(sorted(s.truth_outliers))
        clean_rows = np.array(sorted(set(range(data.n)) - set(s.truth_outliers)))
        rows = []
        for k in range(N_STARTS):
            rng = np.random.default_rng(
                (int(derive_seed(spec.seed, rep, _STREAM_WARMSTART)), k))
            subset = None
            for _ in range(N_STARTS):
                cand = np.sort(rng.choice(data.n, size=8, replace=False))
                if np.any(data.X[cand] != 0.0) or np.any(data.y[cand] != 0.0):
                    subset = cand
                    break
            if subset is None:
                continue
            beta = _quad_lasso(data.X[subset], data.y[subset], LAM0,
                               np.zeros(data.p), OPTS)
            prev = None
            for _ in range(20):
                r = data.y - data.X @ beta
                subset = np.sort(np.argsort(np.abs(r), kind="stable")[:H])
                if prev is not None and np.array_equal(subset, prev):
                    break
                beta = _quad_lasso(data.X[subset], data.y[subset], LAM0,
                                   beta, OPTS)
                prev = subset
            r = data.y - data.X @ beta
            subset = np.sort(np.argsort(np.abs(r), kind="stable")[:H])
            mse = float(r[subset] @ r[subset]) / subset.shape[0]
            l1 = float(np.abs(beta).sum())
            w0 = initial_weights(r)
            mx = w0.max()
            miss = int(np.sum(w0[t_rows] >= mx - 1e-12)) if t_rows.size else 0
            soft = (int(np.sum((w0[t_rows] > 0.5) & (w0[t_rows] < mx - 1e-12)))
                    if t_rows.size else 0)
            swamp = int(np.sum(w0[clean_rows] < 0.5))
            rows.append((k, mse, l1, miss, soft, swamp))
        store[f"{name}_{rep}"] = np.array(rows, dtype=float)
        print(name, rep, "pool", len(rows), flush=True)
np.savez_compressed(".calib/cands.npz", **store)
print("DUMP DONE", flush=True)
