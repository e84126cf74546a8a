"""Penalized weighted Huber-LASSO: sparse regression with built-in outlier
detection, plus tuning, diagnostics, and a simulation harness."""

from .core import (
    Coefficients,
    Dataset,
    FitResult,
    NumericError,
    PenaltyConfig,
    SolverError,
    ZERO_TOL,
    huber_loss,
    huber_psi,
    pwhl_objective,
    soft_threshold,
)
from .diagnostics import (
    BreakdownCurve,
    InfluenceResult,
    JointParam,
    SmoothingParams,
    active_set,
    empirical_breakdown,
    estimating_function,
    influence_function,
    joint_embedding,
    smoothed_estimating_function,
    smoothed_psi,
    smoothing_gap,
)
from .metrics import (
    MetricsReport,
    aggregate,
    estimation_error,
    evaluate_replication,
    outlier_metrics,
    selection_metrics,
)
from .simgen import (
    ContaminationSpec,
    LabeledSample,
    PipelineConfig,
    ReplicationRecord,
    contaminate,
    gen_design,
    gen_response,
    generate_sample,
    run_replication,
    run_scenario,
)
from .solver import (
    InnerSolverOptions,
    fit_huber_lasso,
    fit_pwhl,
    solver_objective,
    update_beta,
    update_weights,
    weight_rule_gap,
)
from .tuning import (
    BaselineSelection,
    GridSelection,
    MuSelection,
    TuningError,
    TuningGrid,
    bic_score,
    cohens_kappa,
    select_alpha_lambda,
    select_mu,
    tune_huber_lasso,
)
from .warmstart import (
    WarmStart,
    compute_warm_start,
    initial_weights,
    pilot_refit,
    prior_weights,
    sparse_lts_init,
)

__version__ = "0.1.0"
