"""Dissect absorbed warm starts: coordinate anatomy + strip response."""
import numpy as np

from pwhl.core import beta_vector
from pwhl.simgen import ContaminationSpec, derive_seed, generate_sample
from pwhl.warmstart import compute_warm_start, initial_weights

CASES = [
    ("c703_r3", ContaminationSpec(n=100, p=400, case="covariate", c=0.3, seed=1), 3),
    ("c703_r13", ContaminationSpec(n=100, p=400, case="covariate", c=0.3, seed=1), 13),
    ("case2_r8", ContaminationSpec(n=100, p=400, case="covariate", c=0.1, seed=1), 8),
    ("het2_r5", ContaminationSpec(n=100, p=400, case="covariate", c=0.1,
                                  hetero=True, seed=1), 5),
]

for name, spec, rep in CASES:
    s = generate_sample(spec, rep)
    data = s.data
    warm = compute_warm_start(
        data, lambda0=0.05, trim_fraction=0.65, n_starts=60,
        rng_seed=derive_seed(spec.seed, rep, 3))
    b = beta_vector(warm.beta0)
    nz = np.flatnonzero(b)
    order = nz[np.argsort(-np.abs(b[nz]))]
    print(f"== {name}: nnz={nz.size} max={np.abs(b).max():.3f} "
          f"sum[0:100)={b[:100].sum():+.3f} sum_sig={b[:3].sum():+.3f}")
    print("  top coords:", [(int(j), round(float(b[j]), 3)) for j in order[:14]])
    t_rows = np.array(sorted(s.truth_outliers))
    for frac in (0.0, 0.15, 0.25, 0.4, 0.6):
        bs = b.copy()
        top = np.abs(bs).max()
        if top > 0 and frac > 0:
            bs[np.abs(bs) < frac * top] = 0.0
        r = data.y - data.X @ bs
        w = initial_weights(r)
        mx = w.max()
        flagged = w < mx - 1e-12
        miss = int(np.sum(~flagged[t_rows]))
        clean = np.ones(data.n, bool); clean[t_rows] = False
        swamp = int(np.sum(flagged & clean))
        print(f"  strip {frac:.2f}: nnz={int(np.sum(bs != 0)):3d} "
              f"sum[0:100)={bs[:100].sum():+.3f} "
              f"|r[truth]| med={np.median(np.abs(r[t_rows])):7.2f} "
              f"|r[clean]| q90={np.quantile(np.abs(r[clean]), 0.9):6.2f} "
              f"miss={miss:2d} swamp={swamp:2d}")
print("DISSECT DONE")
