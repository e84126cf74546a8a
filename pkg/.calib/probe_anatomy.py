"""Step-by-step pilot anatomy on failing case2 reps."""
import numpy as np

from pwhl.core import Dataset, beta_vector
from pwhl.simgen import ContaminationSpec, derive_seed, generate_sample
from pwhl.solver import InnerSolverOptions, update_beta
from pwhl.warmstart import compute_warm_start, initial_weights

spec = ContaminationSpec(n=100, p=400, case="covariate", c=0.1, seed=1)
for rep in (8, 16, 17):
    s = generate_sample(spec, rep)
    data = s.data
    truth = np.array(sorted(s.truth_outliers))
    warm = compute_warm_start(
        data, lambda0=0.05, trim_fraction=0.65, n_starts=60,
        rng_seed=derive_seed(spec.seed, rep, 3))
    b0 = beta_vector(warm.beta0)
    print(f"== rep {rep}: warm l1={np.abs(b0).sum():.2f} "
          f"sig={b0[:3].sum():+.3f} sum100={b0[:100].sum():+.3f}")
    top = np.abs(b0).max()
    bs = b0.copy()
    bs[np.abs(bs) < 0.25 * top] = 0.0
    r0 = data.y - data.X @ bs
    w_strip = initial_weights(r0)
    keep = (w_strip >= w_strip.max() - 1e-12) & (warm.w0 >= warm.w0.max() - 1e-12)
    kt = [int(i) for i in truth if keep[i]]
    print(f"   strip: nnz={int((bs != 0).sum())} sig={bs[:3].sum():+.3f} "
          f"sum100={bs[:100].sum():+.3f} keep={int(keep.sum())} "
          f"truth_in_keep={kt}")
    beta = bs
    opts = InnerSolverOptions()
    for p_i in range(3):
        sub = Dataset(data.X[keep], data.y[keep])
        beta = update_beta(sub, np.ones(sub.n), beta, 1.0, 0.4, opts)
        r = data.y - data.X @ beta
        w_pass = initial_weights(r)
        trusted = w_pass >= w_pass.max() - 1e-12
        kt = [int(i) for i in truth if keep[i] and trusted[i]]
        scale = 1.4826 * np.median(np.abs(r - np.median(r)))
        print(f"   pass{p_i}: l1={np.abs(beta).sum():.2f} sig={beta[:3].sum():+.3f} "
              f"sum100={beta[:100].sum():+.3f} scale={scale:.2f} "
              f"|r[truth]| med={np.median(np.abs(r[truth])):.2f} "
              f"missed={int(np.sum(trusted[truth]))} truth_still_kept={kt}")
        shrunk = keep & trusted
        if shrunk.sum() < 50 or np.array_equal(shrunk, keep):
            break
        keep = shrunk
print("ANATOMY DONE")
