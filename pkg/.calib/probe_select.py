"""Collect the full candidate pool of the trimmed-starts search and evaluate
alternative winner-selection scores offline.

Each candidate is one start's C-step fixed point: record its h-subset MSE,
L1 norm, and how many truth rows the induced initial weights would miss.
Then for score rules mse + s * L1 (s in a small grid) count per-scenario
missed truth rows if the rule picked the argmin candidate per rep.
"""
import json

import numpy as np

from pwhl.core import Dataset
from pwhl.simgen import ContaminationSpec, derive_seed, generate_sample
from pwhl.solver import InnerSolverOptions
from pwhl.warmstart import _quad_lasso, initial_weights

_STREAM_WARMSTART = 3
OPTS = InnerSolverOptions(beta_tol=1e-6, max_iters=300)

SCEN = {
    "case2_s1": ContaminationSpec(n=100, p=400, case="covariate", c=0.1, seed=1),
    "c703_s1": ContaminationSpec(n=100, p=400, case="covariate", c=0.3, seed=1),
    "hetero2_s1": ContaminationSpec(n=100, p=400, case="covariate", c=0.1,
                                    hetero=True, seed=1),
}

N_STARTS = 200
LAM0 = 0.05
H = 65
RULES = (0.05, 0.1, 0.2, 0.3, 0.5)


def candidates(data, rng_seed):
    """Replicate the start loop: per start, elemental draw -> quad lasso ->
    C-steps to a fixed point; yield (beta, subset)."""
    n, p = data.n, data.p
    X, y = data.X, data.y
    out = []
    for k in range(N_STARTS):
        rng = np.random.default_rng((int(rng_seed), k))
        subset = None
        for _ in range(N_STARTS):
            cand = np.sort(rng.choice(n, size=8, replace=False))
            if np.any(X[cand] != 0.0) or np.any(y[cand] != 0.0):
                subset = cand
                break
        if subset is None:
            continue
        beta = _quad_lasso(X[subset], y[subset], LAM0, np.zeros(p), OPTS)
        prev = None
        for _ in range(20):
            r = y - X @ beta
            subset = np.sort(np.argsort(np.abs(r), kind="stable")[:H])
            if prev is not None and np.array_equal(subset, prev):
                break
            beta = _quad_lasso(X[subset], y[subset], LAM0, beta, OPTS)
            prev = subset
        r = y - X @ beta
        subset = np.sort(np.argsort(np.abs(r), kind="stable")[:H])
        out.append((beta, subset))
    return out


for name, spec in SCEN.items():
    per_rule_miss = {s: 0 for s in RULES}
    per_rule_badreps = {s: [] for s in RULES}
    for rep in range(20):
        s = generate_sample(spec, rep)
        data = s.data
        t_rows = np.array(sorted(s.truth_outliers))
        pool = candidates(data, derive_seed(spec.seed, rep, _STREAM_WARMSTART))
        mses, l1s, misses = [], [], []
        for beta, subset in pool:
            r = data.y - data.X @ beta
            mse = float(r[subset] @ r[subset]) / subset.shape[0]
            l1 = float(np.abs(beta).sum())
            w0 = initial_weights(r)
            mx = w0.max()
            miss = int(np.sum(w0[t_rows] >= mx - 1e-12))
            mses.append(mse)
            l1s.append(l1)
            misses.append(miss)
        mses = np.array(mses)
        l1s = np.array(l1s)
        misses = np.array(misses)
        for srule in RULES:
            k = int(np.argmin(mses + srule * l1s))
            per_rule_miss[srule] += int(misses[k])
            if misses[k]:
                per_rule_badreps[srule].append(rep)
    print(name, json.dumps({str(k): {"missed": per_rule_miss[k],
                                     "bad_reps": per_rule_badreps[k]}
                            for k in RULES}), flush=True)
print("SELECT PROBE DONE", flush=True)
