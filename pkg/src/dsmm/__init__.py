"""Derivative-free direct search for nonconvex minimization and
nonconvex-PL min-max games, with executable theory validators."""

from .core import (
    CallCounter,
    EvaluationError,
    ObjectiveOracle,
    Point,
    RngStream,
    TraceRecord,
    as_point,
    finite_difference_gradient,
)
from .direct_search import DsConfig, OneStepResult, SearchState, StoppingRule, ds_step, forcing, minimize, one_step
from .gda_baseline import GdaConfig, GdaResult, gda_solve
from .minmax import (
    InfeasibleConstantsError,
    MinMaxConfig,
    MinMaxResult,
    derive_inner_tolerance,
    fne_residual,
    solve,
)
from .problems import (
    GameConstants,
    LabeledDataset,
    MinMaxProblem,
    MinProblem,
    make_synthetic_dataset,
    pl_nonconvex_min,
    quadratic_min,
    quadratic_saddle,
    robust_regression,
    rosenbrock,
)
from .spanning import (
    SpanningSet,
    cosine_measure_mc,
    make_minimal_uniform,
    make_orthonormal_pm,
    make_probabilistic_pair,
    make_rotated,
)
from .stochastic_oracle import AccuracyConfig, Estimate, NoiseModel, estimate, required_samples
from .theory_validators import (
    FeasibilityReport,
    WalkConfig,
    check_nonconvex_constants,
    check_pl_constants,
    check_pl_implications,
    estimate_complexity_slope,
    simulate_reflected_walk,
    walk_confinement_k,
)

__version__ = "0.1.0"
