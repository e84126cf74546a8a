"""Ground-truth acceptance studies: tuned 20-rep scenarios + baselines."""
import json
import time

import numpy as np

from pwhl.metrics import aggregate, estimation_error, evaluate_replication
from pwhl.simgen import ContaminationSpec, PipelineConfig, generate_sample, run_scenario
from pwhl.tuning import TuningGrid, tune_huber_lasso

REPS = 20

SCENARIOS = [
    ("case2", ContaminationSpec(n=100, p=400, case="covariate", c=0.1, seed=1), False),
    ("c703", ContaminationSpec(n=100, p=400, case="covariate", c=0.3, seed=1), False),
    ("hetero2", ContaminationSpec(n=100, p=400, case="covariate", c=0.1,
                                  hetero=True, seed=1), True),
    ("case3", ContaminationSpec(n=100, p=400, case="both", c=0.1, seed=1,
                                both_from_contaminated=True), False),
    ("case1", ContaminationSpec(n=100, p=400, case="response", c=0.1, seed=1), False),
]

out = {}
for name, spec, hetero_grid in SCENARIOS:
    t0 = time.time()
    pipe = PipelineConfig(tune=True, grid=TuningGrid(hetero=hetero_grid))
    records = run_scenario(spec, pipe, REPS)
    rows = [evaluate_replication(r) for r in records]
    rep_detail = []
    for rec, row in zip(records, rows):
        truth = set(rec.truth)
        det = set(rec.detected)
        missed = sorted(truth - det)
        false = sorted(det - truth)
        ee = estimation_error(rec.beta_hat, rec.beta_star)["EE"]
        rep_detail.append({
            "rep": rec.replication, "missed": missed, "false": false,
            "EE": round(float(ee), 4), "mu": rec.mu, "alpha": rec.alpha,
            "lam": rec.lam})
        print(f"[{name} rep {rec.replication:2d}] miss={len(missed):2d} "
              f"false={len(false):2d} EE={ee:6.3f} "
              f"(mu={rec.mu} a={rec.alpha} lam={rec.lam})", flush=True)
    rep_report = aggregate(rows)
    d = rep_report.summary_dict()
    out[name] = {"summary": d, "reps": rep_detail}
    print(f"== {name}: M={d['M']:.4f} S={d['S']:.4f} JD={d['JD']:.2f} "
          f"SR={d['SR']:.2f} EE={d['EE']:.4f} FPR={d['FPR']:.4f} "
          f"({time.time()-t0:.0f}s)", flush=True)

grid = TuningGrid()
for key, c in (("base_low", 0.1), ("base_high", 0.3)):
    t0 = time.time()
    spec = ContaminationSpec(n=100, p=400, case="covariate", c=c, seed=1)
    ees = []
    for rep in range(REPS):
        s = generate_sample(spec, rep)
        sel = tune_huber_lasso(s.data, grid)
        ees.append(float(estimation_error(sel.beta.beta, s.beta_star)["EE"]))
    out[key] = {"EE": float(np.mean(ees)), "per_rep": [round(e, 4) for e in ees]}
    print(f"== {key}: EE={out[key]['EE']:.4f} ({time.time()-t0:.0f}s)", flush=True)

pw_ratio = out["c703"]["summary"]["EE"] / out["case2"]["summary"]["EE"]
base_ratio = out["base_high"]["EE"] / out["base_low"]["EE"]
print(f"criterion7: pwhl ratio={pw_ratio:.4f} baseline ratio={base_ratio:.4f} "
      f"(need <2 and < baseline)", flush=True)
with open("batch1.json", "w") as fh:
    json.dump(out, fh, indent=1)
print("BATCH DONE", flush=True)
