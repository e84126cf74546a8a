"""Probe the guard score that decides warm-vs-pilot.

For every rep of case2/hetero2/c703 (seed 1), compute for both the raw warm
beta and the pilot refit beta:
  - trimmed (65%) mean Huber_{alpha=0.1} loss of full-sample residuals
  - L1 norm
  - truth rows missed by the w0 each start would induce
A usable guard score must pick the start with fewer missed truth rows
(ties -> either) in every rep, across all three scenarios.
"""
import numpy as np

from pwhl.core import beta_vector, huber_loss
from pwhl.simgen import ContaminationSpec, derive_seed, generate_sample
from pwhl.warmstart import compute_warm_start, pilot_refit

_STREAM_WARMSTART = 3

SCEN = {
    "case2": ContaminationSpec(n=100, p=400, case="covariate", c=0.1, seed=1),
    "hetero2": ContaminationSpec(n=100, p=400, case="covariate", c=0.1,
                                 hetero=True, seed=1),
    "c703": ContaminationSpec(n=100, p=400, case="covariate", c=0.3, seed=1),
}


def stats(sample, ws):
    data = sample.data
    beta = beta_vector(ws.beta0)
    r = data.y - data.X @ beta
    losses = np.sort(huber_loss(r, 0.1))
    h = int(np.ceil(0.65 * data.n))
    trimmed = float(np.mean(losses[:h]))
    l1 = float(np.abs(beta).sum())
    t_rows = np.array(sorted(sample.truth_outliers))
    mx = ws.w0.max()
    missed = int(np.sum(ws.w0[t_rows] >= mx - 1e-12))
    return trimmed, l1, missed


for name, spec in SCEN.items():
    print(f"== {name}", flush=True)
    for rep in range(20):
        s = generate_sample(spec, rep)
        warm = compute_warm_start(
            s.data, lambda0=0.05, trim_fraction=0.65, n_starts=60,
            rng_seed=derive_seed(spec.seed, rep, _STREAM_WARMSTART))
        pil = pilot_refit(s.data, warm)
        tw, lw, mw = stats(s, warm)
        tp, lp, mp = stats(s, pil)
        flag = ""
        if mw != mp:
            flag = "  <-- divergent"
        print(f"rep {rep:2d} warm trim={tw:8.4f} l1={lw:6.2f} miss={mw} | "
              f"pilot trim={tp:8.4f} l1={lp:6.2f} miss={mp}{flag}", flush=True)
print("GUARD PROBE DONE", flush=True)
