"""Tuned pipeline on the case2 reps that failed the last batch."""
from pwhl.metrics import estimation_error
from pwhl.simgen import ContaminationSpec, PipelineConfig, run_replication
from pwhl.tuning import TuningGrid

spec = ContaminationSpec(n=100, p=400, case="covariate", c=0.1, seed=1)
pipe = PipelineConfig(tune=True, grid=TuningGrid())
for rep in (8, 10, 16, 17):
    rec = run_replication(spec, pipe, replication=rep)
    truth, det = set(rec.truth), set(rec.detected)
    ee = estimation_error(rec.beta_hat, rec.beta_star)["EE"]
    print(f"rep {rep:2d} miss={len(truth - det)} false={len(det - truth)} "
          f"EE={ee:6.3f} (mu={rec.mu} a={rec.alpha} lam={rec.lam})", flush=True)
print("FIXREPS DONE")
