"""Sequential min-max driver: solve the inner maximization to tolerance with
the full direct-search loop, then take one successful direct-search step for
the min player; repeat until the min player shows stationarity evidence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .core import CallCounter, Point, RngStream, TraceRecord, as_point, trace_record_fields
from .direct_search import DsConfig, OneStepResult, StoppingRule, minimize, one_step
from .problems import GameConstants, MinMaxProblem
from .spanning import SpanningSet, make_orthonormal_pm
from .stochastic_oracle import AccuracyConfig, NoiseModel
from .theory_validators import WalkConfig, step_size_bound_constant, walk_confinement_k

__all__ = [
    "InfeasibleConstantsError",
    "MinMaxConfig",
    "OuterRecord",
    "MinMaxResult",
    "derive_inner_tolerance",
    "default_net_decrease_constant",
    "solve",
    "fne_residual",
    "MINMAX_TRACE_HEADER",
    "minmax_trace_to_csv",
    "write_minmax_trace",
]

INNER_TOLERANCE_MODES = ("theory_driven", "fixed")


class InfeasibleConstantsError(ValueError):
    """A coupling-constant inequality required by the scheme is violated."""


@dataclass(frozen=True)
class MinMaxConfig:
    c_x: float
    c_y: float
    gamma: float = 2.0
    sigma0_x: float = 1.0
    sigma0_y: float = 1.0
    eps_target: float = 1e-2
    K: Optional[float] = None  # defaults to (c_x - D1)/2, clipped above 2*eps_x
    inner_tolerance_mode: str = "theory_driven"
    eps_max_fixed: Optional[float] = None  # defaults to eps_target/10 in fixed mode
    T_outer_max: int = 1000
    inner_max_iterations: int = 100_000
    max_oracle_calls: int = 50_000_000
    sigma_max: float = 1e6
    use_gradient_stopping: bool = False  # validation mode: stop inner on grad norm
    delta_walk: float = 0.9  # confidence for the stochastic step-size walk bound

    def __post_init__(self):
        if self.c_x <= 0 or self.c_y <= 0:
            raise ValueError("forcing constants must be positive")
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")
        if self.sigma0_x <= 0 or self.sigma0_y <= 0:
            raise ValueError("initial step sizes must be positive")
        if self.eps_target <= 0:
            raise ValueError("eps_target must be positive")
        if self.inner_tolerance_mode not in INNER_TOLERANCE_MODES:
            raise ValueError(f"unknown inner_tolerance_mode {self.inner_tolerance_mode!r}")


def default_net_decrease_constant(gc: GameConstants, cfg: MinMaxConfig, eps_x: float = 0.0) -> float:
    """Default K = (c_x - D1)/2, clipped to exceed 2*eps_x.

    Any K in (2*eps_x, c_x - D1) is admissible; the midpoint balances the
    guaranteed outer decrease against inner-tolerance tightness.
    """
    k = 0.5 * (cfg.c_x - gc.D1)
    if eps_x > 0:
        k = max(k, 2.0 * eps_x * 1.000001)
    if not (k > 2.0 * eps_x and cfg.c_x > gc.D1 + k):
        raise InfeasibleConstantsError(
            f"no admissible K: need 2*eps_x < K < c_x - D1 "
            f"(c_x={cfg.c_x}, D1={gc.D1}, eps_x={eps_x})"
        )
    return k


def derive_inner_tolerance(
    gc: GameConstants, cfg: MinMaxConfig, C_min: float, k_walk: int = 0
) -> float:
    """Inner accuracy eps_max guaranteeing net outer decrease -K*sigma_t^2.

    C_min is the min player's step-size-lemma constant.  The bound is
    eps_max = eps * min{ 2C(c_x - K - D1)/(gamma^k D2),
                         C(-D2 + sqrt(D2^2 + 4(c_x - K - D1) D3))/(2 D3 gamma^k) }
    with gamma^k = 1 in the deterministic case.
    """
    if k_walk < 0:
        raise ValueError("k_walk must be >= 0")
    if C_min <= 0:
        raise ValueError("C_min must be positive")
    K = cfg.K if cfg.K is not None else default_net_decrease_constant(gc, cfg)
    margin = cfg.c_x - K - gc.D1
    if margin <= 0:
        raise InfeasibleConstantsError(
            f"requires c_x > K + D1, got c_x={cfg.c_x}, K={K}, D1={gc.D1}"
        )
    shrink = cfg.gamma**k_walk
    branch1 = 2.0 * C_min * margin / (shrink * gc.D2) if gc.D2 > 0 else math.inf
    branch2 = (
        C_min
        * (-gc.D2 + math.sqrt(gc.D2**2 + 4.0 * margin * gc.D3))
        / (2.0 * gc.D3 * shrink)
    )
    return cfg.eps_target * min(branch1, branch2)


def fne_residual(problem: MinMaxProblem, x: Point, y: Point) -> Tuple[float, float]:
    """(||grad_x f||, ||grad_y f||) at (x, y); validation mode only."""
    if problem.grad_x is None or problem.grad_y is None:
        raise ValueError("fne_residual needs analytic gradients")
    x = as_point(x)
    y = as_point(y)
    gx = np.asarray(problem.grad_x(x, y), dtype=float)
    gy = np.asarray(problem.grad_y(x, y), dtype=float)
    return float(np.linalg.norm(gx)), float(np.linalg.norm(gy))


@dataclass(frozen=True)
class OuterRecord:
    """Bookkeeping of one outer iteration: the inner solve that produced y_t
    from x_{t-1}, then the single min step that produced x_t."""

    t: int
    x_prev: Point
    y_prev: Point
    y_inner: Point
    x_new: Point
    sigma_t: float
    progressed: bool
    inner_met: bool
    inner_iterations: int
    inner_stop_reason: Optional[str]
    oracle_calls_total: int


@dataclass
class MinMaxResult:
    x: Point
    y: Point
    converged: bool
    eps_max: float
    outer: List[OuterRecord] = field(default_factory=list)
    trace: List[Tuple[int, str, TraceRecord]] = field(default_factory=list)
    oracle_calls: int = 0
    budget_exhausted: bool = False
    cap_hits: int = 0  # estimates clipped at the per-estimate sample cap


def _last_successful_sigma(history: List[TraceRecord]) -> Optional[float]:
    for rec in reversed(history):
        if rec.success:
            return rec.sigma
    return None


def solve(
    problem: MinMaxProblem,
    x0: Point,
    y0: Point,
    cfg: MinMaxConfig,
    noise: NoiseModel,
    acc_x: AccuracyConfig,
    acc_y: AccuracyConfig,
    rng: RngStream,
    gc: Optional[GameConstants] = None,
    pss_x: Optional[SpanningSet] = None,
    pss_y: Optional[SpanningSet] = None,
) -> MinMaxResult:
    """Alternate full inner maximization and one successful min step.

    The inner loop is solved to half the derived tolerance: stopping at
    ||grad_y f|| <= eps_max/2 (gradient mode) or at the first unsuccessful
    step with sigma <= C_y*eps_max/2 (production mode, certified through the
    step-size lemma) makes the distance-to-argmax bound eps_max/(2*mu) hold
    at every audited point.  Termination: the min player's one-step search
    reports no progress with its floor at C_min*eps_target/gamma (so the last
    failed trial certifies ||grad_x f|| <= eps_target) while the latest inner
    solve met its tolerance.
    """
    gc = gc if gc is not None else problem.constants
    x = as_point(x0)
    y = as_point(y0)
    pss_x = pss_x if pss_x is not None else make_orthonormal_pm(problem.dim_x)
    pss_y = pss_y if pss_y is not None else make_orthonormal_pm(problem.dim_y)

    eps_x_acc = 0.0 if noise.noiseless else acc_x.eps_f
    eps_y_acc = 0.0 if noise.noiseless else acc_y.eps_f

    if cfg.inner_tolerance_mode == "theory_driven":
        if gc is None:
            raise InfeasibleConstantsError("theory_driven mode needs game constants")
        C_min = step_size_bound_constant(pss_x.kappa_lower, gc.L11, cfg.c_x, eps_x_acc)
        k_walk = 0
        if not noise.noiseless:
            k_walk = walk_confinement_k(
                WalkConfig(p_f=acc_x.p_f, n=cfg.T_outer_max, delta=cfg.delta_walk)
            )
        eps_max = derive_inner_tolerance(gc, cfg, C_min, k_walk=k_walk)
    else:
        eps_max = cfg.eps_max_fixed if cfg.eps_max_fixed is not None else cfg.eps_target / 10.0
        if gc is not None:
            C_min = step_size_bound_constant(pss_x.kappa_lower, gc.L11, cfg.c_x, eps_x_acc)
        else:
            # black-box heuristic floor when no smoothness constants exist
            C_min = 0.1

    inner_target = eps_max / 2.0
    floor_x = C_min * cfg.eps_target / cfg.gamma

    if cfg.use_gradient_stopping:
        if problem.grad_y is None:
            raise ValueError("gradient stopping needs analytic gradients")
        inner_stop = StoppingRule(
            max_iter=cfg.inner_max_iterations, grad_target=inner_target
        )
        inner_met_reason = "grad_target"
    else:
        if gc is None:
            raise InfeasibleConstantsError(
                "production-mode inner stopping needs L22; provide game constants "
                "or enable use_gradient_stopping"
            )
        C_y = step_size_bound_constant(pss_y.kappa_lower, gc.L22, cfg.c_y, eps_y_acc)
        inner_stop = StoppingRule(
            max_iter=cfg.inner_max_iterations,
            unsuccessful_sigma_stop=C_y * inner_target,
        )
        inner_met_reason = "unsuccessful_sigma"

    counter = CallCounter()
    result = MinMaxResult(x=x, y=y, converged=False, eps_max=eps_max)
    warm_sigma_y = cfg.sigma0_y
    sigma_x = cfg.sigma0_x

    for t in range(1, cfg.T_outer_max + 1):
        outer_rng = rng.child(t)
        budget_left = cfg.max_oracle_calls - counter.count
        if budget_left <= 0:
            result.budget_exhausted = True
            break

        # (a) inner maximization of f(x, .) == minimization of -f(x, .)
        oracle_y = problem.oracle_in_y(x, counter)
        cfg_y = DsConfig(
            c=cfg.c_y, gamma=cfg.gamma, sigma0=warm_sigma_y, sigma_max=cfg.sigma_max,
            max_iterations=cfg.inner_max_iterations, max_oracle_calls=budget_left,
        )
        inner_state = minimize(
            y, pss_y, oracle_y, noise, acc_y, cfg_y, inner_stop, outer_rng.child(0)
        )
        y_prev = y
        y = inner_state.x
        result.cap_hits += inner_state.cap_hits
        inner_met = inner_state.stop_reason == inner_met_reason
        sig = _last_successful_sigma(inner_state.history)
        if sig is not None:
            warm_sigma_y = min(sig, cfg.sigma_max)
        for rec in inner_state.history:
            result.trace.append((t, "max", rec))

        # (b) one successful step for the min player on f(., y)
        budget_left = cfg.max_oracle_calls - counter.count
        if budget_left <= 0:
            result.budget_exhausted = True
            result.outer.append(
                OuterRecord(t, x, y_prev, y, x, sigma_x, False, inner_met,
                            inner_state.iteration, inner_state.stop_reason, counter.count)
            )
            break
        oracle_x = problem.oracle_in_x(y, counter)
        cfg_x = DsConfig(
            c=cfg.c_x, gamma=cfg.gamma, sigma0=sigma_x, sigma_max=cfg.sigma_max,
            max_oracle_calls=budget_left,
        )
        step: OneStepResult = one_step(
            x, sigma_x, pss_x, oracle_x, noise, acc_x, cfg_x,
            outer_rng.child(1), sigma_floor=floor_x,
        )
        for rec in step.state.history:
            result.trace.append((t, "min", rec))
        result.cap_hits += step.state.cap_hits
        x_prev = x
        if step.progressed:
            x = step.x
            sigma_x = step.sigma
        result.outer.append(
            OuterRecord(
                t, x_prev, y_prev, y, x,
                step.sigma if step.progressed else sigma_x,
                step.progressed, inner_met,
                inner_state.iteration, inner_state.stop_reason, counter.count,
            )
        )
        if step.budget_exhausted:
            result.budget_exhausted = True
            break
        if not step.progressed and inner_met:
            result.converged = True
            break

    result.x = x
    result.y = y
    result.oracle_calls = counter.count
    return result


MINMAX_TRACE_HEADER = "t,phase,k,sigma,f_est,f_best,success,calls,grad_norm"


def minmax_trace_to_csv(trace: List[Tuple[int, str, TraceRecord]]) -> str:
    lines = [MINMAX_TRACE_HEADER]
    for t, phase, rec in trace:
        fields = trace_record_fields(rec)
        lines.append(",".join([str(t), phase, fields[0]] + fields[1:]))
    return "\n".join(lines) + "\n"


def write_minmax_trace(path, trace: List[Tuple[int, str, TraceRecord]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(minmax_trace_to_csv(trace))
