"""Detection and selection quality measures, per replication and aggregated.

Conventions for degenerate denominators: with no true outliers the masking
rate is 0 and joint detection is 1 (nothing to miss); with every observation
a true outlier the swamping rate is 0 (nobody left to swamp). Rates are
plain fractions, never percentages.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .core import ZERO_TOL


def outlier_metrics(detected, truth, n):
    """Masking rate, swamping rate, and the joint-detection indicator.

    M  = |truth \\ detected| / |truth|        (missed outliers)
    S  = |detected \\ truth| / (n - |truth|)  (false alarms)
    jd = 1 iff truth is a subset of detected
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be positive")
    D = frozenset(int(i) for i in detected)
    T = frozenset(int(i) for i in truth)
    for S_ in (D, T):
        if S_ and (min(S_) < 0 or max(S_) >= n):
            raise ValueError("indices must lie in range(n)")
    masked = len(T - D)
    swamped = len(D - T)
    m_rate = 0.0 if not T else masked / len(T)
    s_rate = 0.0 if len(T) == n else swamped / (n - len(T))
    jd = 1.0 if T <= D else 0.0
    return {"M": m_rate, "S": s_rate, "jd": jd}


def selection_metrics(beta_hat, beta_star, zero_tolerance=ZERO_TOL):
    """Support-recovery rates of an estimate against the truth.

    FZR: fraction of truly nonzero coefficients estimated as zero.
    FPR: fraction of truly zero coefficients estimated as nonzero.
    sr:  exact support match indicator.
    cr:  coverage indicator (true support contained in the estimated one).
    """
    bh = np.asarray(beta_hat, dtype=float).ravel()
    bs = np.asarray(beta_star, dtype=float).ravel()
    if bh.shape != bs.shape:
        raise ValueError("coefficient vectors must have equal length")
    tol = float(zero_tolerance)
    nz_hat = np.abs(bh) > tol
    nz_star = np.abs(bs) > tol
    n_signal = int(nz_star.sum())
    n_null = bs.shape[0] - n_signal
    fzr = 0.0 if n_signal == 0 else float(np.sum(~nz_hat & nz_star)) / n_signal
    fpr = 0.0 if n_null == 0 else float(np.sum(nz_hat & ~nz_star)) / n_null
    sr = 1.0 if np.array_equal(nz_hat, nz_star) else 0.0
    cr = 1.0 if np.all(nz_hat[nz_star]) else 0.0
    return {"FZR": fzr, "FPR": fpr, "sr": sr, "cr": cr}


def estimation_error(beta_hat, beta_star, zero_tolerance=ZERO_TOL):
    """Squared L2 errors: overall, and restricted to the true signals."""
    bh = np.asarray(beta_hat, dtype=float).ravel()
    bs = np.asarray(beta_star, dtype=float).ravel()
    if bh.shape != bs.shape:
        raise ValueError("coefficient vectors must have equal length")
    diff = bh - bs
    ee = float(diff @ diff)
    sig = np.abs(bs) > float(zero_tolerance)
    ee_non = float(diff[sig] @ diff[sig])
    return {"EE": ee, "EE_non": ee_non}


_ROW_KEYS = ("M", "S", "jd", "FZR", "FPR", "sr", "cr", "EE", "EE_non")


def evaluate_replication(record):
    """Flatten one replication record into a metric row (a plain dict).

    ``record`` needs attributes detected, truth, n, beta_hat, beta_star and
    zero_tolerance; any object with those (for instance a ReplicationRecord)
    works.
    """
    row = {"replication": int(getattr(record, "replication", 0))}
    row.update(outlier_metrics(record.detected, record.truth, record.n))
    row.update(selection_metrics(record.beta_hat, record.beta_star, record.zero_tolerance))
    row.update(estimation_error(record.beta_hat, record.beta_star, record.zero_tolerance))
    mse = getattr(record, "holdout_mse", None)
    if mse is not None:
        row["holdout_mse"] = float(mse)
    return row


@dataclass(frozen=True)
class MetricsReport:
    """Aggregated study results plus the per-replication table."""

    n_replications: int
    M: float
    S: float
    JD: float
    FZR: float
    FPR: float
    SR: float
    CR: float
    EE: float
    EE_non: float
    per_replication: tuple
    holdout_mse: float | None = None

    def summary_dict(self):
        out = {
            "n_replications": self.n_replications,
            "M": self.M, "S": self.S, "JD": self.JD,
            "FZR": self.FZR, "FPR": self.FPR, "SR": self.SR, "CR": self.CR,
            "EE": self.EE, "EE_non": self.EE_non,
        }
        if self.holdout_mse is not None:
            out["holdout_mse"] = self.holdout_mse
        return out


def aggregate(rows):
    """Average metric rows into a MetricsReport.

    Rates and errors are averaged; the indicator columns jd/sr/cr become the
    fractions JD/SR/CR.
    """
    rows = [dict(r) for r in rows]
    if not rows:
        raise ValueError("need at least one replication")
    for row in rows:
        missing = [k for k in _ROW_KEYS if k not in row]
        if missing:
            raise ValueError(f"metric row missing keys {missing}")

    def mean(key):
        return float(np.mean([row[key] for row in rows]))

    have_mse = all("holdout_mse" in row for row in rows)
    return MetricsReport(
        n_replications=len(rows),
        M=mean("M"), S=mean("S"), JD=mean("jd"),
        FZR=mean("FZR"), FPR=mean("FPR"), SR=mean("sr"), CR=mean("cr"),
        EE=mean("EE"), EE_non=mean("EE_non"),
        per_replication=tuple(rows),
        holdout_mse=mean("holdout_mse") if have_mse else None,
    )


def write_report_csv(path, report, scenario_label=""):
    """One-row CSV summary of an aggregated report."""
    summary = report.summary_dict()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario"] + list(summary.keys()))
        writer.writerow([scenario_label] + [repr(v) if isinstance(v, float) else v
                                            for v in summary.values()])


def write_report_json(path, report, scenario=None):
    """Full JSON report: summary plus the per-replication table."""
    payload = {
        "schema_version": 1,
        "summary": report.summary_dict(),
        "per_replication": list(report.per_replication),
    }
    if scenario is not None:
        payload["scenario"] = scenario
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
