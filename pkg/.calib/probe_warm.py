"""Per-rep probe: which truth rows does the warm start / pilot miss?"""
import json

import numpy as np

from pwhl.simgen import ContaminationSpec, PipelineConfig, generate_sample, derive_seed, _STREAM_WARMSTART
from pwhl.warmstart import compute_warm_start, pilot_refit

REPS = 20
pipe = PipelineConfig(tune=True)


def probe(name, spec):
    tot_warm_miss = 0
    tot_pilot_miss = 0
    bad_reps = []
    for rep in range(REPS):
        s = generate_sample(spec, rep)
        truth = np.array(sorted(s.truth_outliers), dtype=int)
        warm = compute_warm_start(
            s.data, lambda0=pipe.lts_lambda0, trim_fraction=pipe.trim_fraction,
            n_starts=pipe.lts_n_starts,
            rng_seed=derive_seed(spec.seed, rep, _STREAM_WARMSTART),
            clamp_eps=pipe.clamp_eps, varpi_cap=pipe.varpi_cap,
            elemental_size=pipe.lts_elemental_size,
        )
        top_w = warm.w0.max()
        warm_miss = [int(t) for t in truth if warm.w0[t] >= top_w - 1e-12]
        pw = pilot_refit(s.data, warm, alpha=pipe.pilot_alpha, lam=pipe.pilot_lam,
                         clamp_eps=pipe.clamp_eps, varpi_cap=pipe.varpi_cap)
        top_p = pw.w0.max()
        pilot_miss = [int(t) for t in truth if pw.w0[t] >= top_p - 1e-12]
        tot_warm_miss += len(warm_miss)
        tot_pilot_miss += len(pilot_miss)
        if warm_miss or pilot_miss:
            bad_reps.append({
                "rep": rep, "warm_miss": warm_miss, "pilot_miss": pilot_miss,
                "truth_w0": [round(float(pw.w0[t]), 4) for t in truth],
            })
    print(name, json.dumps({"warm_missed_rows": tot_warm_miss,
                            "pilot_missed_rows": tot_pilot_miss,
                            "bad_reps": bad_reps}), flush=True)


if __name__ == "__main__":
    probe("case2", ContaminationSpec(n=100, p=400, case="covariate", c=0.1, seed=1))
    probe("hetero2", ContaminationSpec(n=100, p=400, case="covariate", c=0.1,
                                       hetero=True, seed=1))
    probe("c7_01", ContaminationSpec(n=100, p=400, case="covariate", c=0.1, seed=2))
    probe("c7_03", ContaminationSpec(n=100, p=400, case="covariate", c=0.3, seed=2))
    print("PROBE DONE", flush=True)
