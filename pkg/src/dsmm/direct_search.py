"""Direct-search minimization: full loop and single-successful-step variant.

Each iteration evaluates estimates at the incumbent and at every offspring
x + sigma*d for d in the spanning set, picks the offspring with the smallest
estimate (lowest index on ties), and accepts it when the estimated decrease
beats the forcing value c*sigma^2.  The step size multiplies by gamma on
success (clipped at sigma_max) and by 1/gamma otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import ObjectiveOracle, Point, RngStream, TraceRecord, as_point
from .spanning import SpanningSet
from .stochastic_oracle import AccuracyConfig, NoiseModel, estimate

__all__ = [
    "DsConfig",
    "StoppingRule",
    "SearchState",
    "OneStepResult",
    "forcing",
    "ds_step",
    "minimize",
    "one_step",
]

TIE_BREAKS = ("first_index", "lowest_index_among_min")


@dataclass(frozen=True)
class DsConfig:
    c: float
    gamma: float = 2.0
    sigma0: float = 1.0
    sigma_max: float = 1e6
    max_iterations: int = 100_000
    max_oracle_calls: int = 50_000_000
    tie_break: str = "lowest_index_among_min"
    sigma_floor: float = 1e-12  # full-loop stopping floor; one_step may override

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("forcing constant c must be positive")
        if self.gamma <= 1:
            raise ValueError("gamma must exceed 1")
        if not (0 < self.sigma0 <= self.sigma_max):
            raise ValueError("need 0 < sigma0 <= sigma_max")
        if self.tie_break not in TIE_BREAKS:
            raise ValueError(f"unknown tie_break {self.tie_break!r}")
        if self.sigma_floor <= 0:
            raise ValueError("sigma_floor must be positive")


@dataclass(frozen=True)
class StoppingRule:
    """Stopping conditions for the full loop.

    grad_target consults the analytic gradient and is meant for validation
    runs; unsuccessful_sigma_stop fires after an unsuccessful iteration whose
    step size was at or below the threshold, which certifies a gradient bound
    through the step-size lemma.
    """

    max_iter: Optional[int] = None
    max_calls: Optional[int] = None
    sigma_stop: Optional[float] = None
    grad_target: Optional[float] = None
    unsuccessful_sigma_stop: Optional[float] = None


@dataclass
class SearchState:
    x: Point
    sigma: float
    iteration: int = 0
    oracle_calls: int = 0
    last_success: bool = False
    history: List[TraceRecord] = field(default_factory=list)
    budget_exhausted: bool = False
    stop_reason: Optional[str] = None
    cap_hits: int = 0  # estimates whose sample count was clipped at n_max

    def __post_init__(self):
        self.x = as_point(self.x)
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


def forcing(c: float, sigma: float) -> float:
    """Forcing value c * sigma^2 a trial point must beat for acceptance."""
    if c <= 0:
        raise ValueError("forcing constant c must be positive")
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    return c * sigma * sigma


def _argmin_lowest_index(values: List[float]) -> int:
    best = 0
    for i in range(1, len(values)):
        if values[i] < values[best]:
            best = i
    return best


def ds_step(
    state: SearchState,
    pss: SpanningSet,
    oracle: ObjectiveOracle,
    noise: NoiseModel,
    acc: AccuracyConfig,
    cfg: DsConfig,
    rng: RngStream,
) -> SearchState:
    """One poll step; mutates and returns state, appending one trace row.

    If the oracle-call budget is already exhausted the state is returned
    intact with budget_exhausted set and no row appended; a step in flight
    may overshoot the budget by its own evaluation cost since polling is
    atomic.  Capped estimates are tallied in state.cap_hits as a warning.
    """
    if state.oracle_calls >= cfg.max_oracle_calls:
        state.budget_exhausted = True
        return state
    if pss.dim != oracle.dim:
        raise ValueError("spanning set dimension does not match the oracle")

    step_rng = rng.child(state.iteration)
    sigma = state.sigma
    current = estimate(oracle, noise, acc, state.x, sigma, step_rng.child(0))
    samples = current.samples_used
    capped = int(current.cap_hit)
    values: List[float] = []
    points: List[Point] = []
    # fixed offspring order with independent sub-streams, so concurrent
    # evaluation could not change the argmin
    for i in range(len(pss)):
        trial = state.x + sigma * pss.directions[i]
        est = estimate(oracle, noise, acc, trial, sigma, step_rng.child(i + 1))
        values.append(est.value)
        points.append(trial)
        samples += est.samples_used
        capped += int(est.cap_hit)

    best = _argmin_lowest_index(values)
    success = values[best] < current.value - forcing(cfg.c, sigma)

    grad_norm = None
    if oracle.grad is not None:
        grad_norm = float(np.linalg.norm(oracle.gradient(state.x)))

    state.history.append(
        TraceRecord(
            iteration=state.iteration,
            sigma=sigma,
            f_estimate_current=current.value,
            f_estimate_best_offspring=values[best],
            success=success,
            oracle_calls=state.oracle_calls + samples,
            grad_norm=grad_norm,
        )
    )
    state.oracle_calls += samples
    state.cap_hits += capped
    state.iteration += 1
    state.last_success = success
    if success:
        state.x = points[best]
        state.sigma = min(cfg.sigma_max, cfg.gamma * sigma)
    else:
        state.sigma = sigma / cfg.gamma
    return state


def _effective_limit(cfg_limit: int, rule_limit: Optional[int]) -> int:
    return cfg_limit if rule_limit is None else min(cfg_limit, rule_limit)


def minimize(
    x0: Point,
    pss: SpanningSet,
    oracle: ObjectiveOracle,
    noise: NoiseModel,
    acc: AccuracyConfig,
    cfg: DsConfig,
    stop: StoppingRule,
    rng: RngStream,
) -> SearchState:
    """Iterate ds_step until a stopping condition fires."""
    state = SearchState(x=as_point(x0), sigma=cfg.sigma0)
    max_iter = _effective_limit(cfg.max_iterations, stop.max_iter)
    max_calls = _effective_limit(cfg.max_oracle_calls, stop.max_calls)
    sigma_stop = max(cfg.sigma_floor, stop.sigma_stop or 0.0)

    while True:
        if state.iteration >= max_iter:
            state.stop_reason = "max_iter"
            break
        if state.oracle_calls >= max_calls:
            state.stop_reason = "max_calls"
            break
        if state.sigma <= sigma_stop:
            state.stop_reason = "sigma_stop"
            break
        if stop.grad_target is not None:
            gnorm = float(np.linalg.norm(oracle.gradient(state.x)))
            if gnorm <= stop.grad_target:
                state.stop_reason = "grad_target"
                break
        ds_step(state, pss, oracle, noise, acc, cfg, rng)
        if state.budget_exhausted:
            state.stop_reason = "max_calls"
            break
        if (
            stop.unsuccessful_sigma_stop is not None
            and not state.last_success
            and state.history[-1].sigma <= stop.unsuccessful_sigma_stop
        ):
            state.stop_reason = "unsuccessful_sigma"
            break
    return state


@dataclass
class OneStepResult:
    """Outcome of the single-successful-step search.

    progressed=False means the step size fell below the floor with no accepted
    point; the caller decides what that evidences (the min-max driver reads it
    as approximate stationarity of the min player).
    """

    x: Point
    sigma: float
    state: SearchState
    progressed: bool
    budget_exhausted: bool = False


def one_step(
    x: Point,
    sigma_in: float,
    pss: SpanningSet,
    oracle: ObjectiveOracle,
    noise: NoiseModel,
    acc: AccuracyConfig,
    cfg: DsConfig,
    rng: RngStream,
    sigma_floor: Optional[float] = None,
) -> OneStepResult:
    """Search for one successful sufficient-decrease step.

    The step size is first raised to min(gamma*sigma_in, sigma_max) (the last
    accepted update was successful by convention), then shrunk by gamma after
    every failed poll.  On the first success (x', sigma_k) is returned with
    the step size of the successful trial, not re-multiplied.
    """
    if sigma_in <= 0:
        raise ValueError("sigma_in must be positive")
    floor = cfg.sigma_floor if sigma_floor is None else sigma_floor
    if floor <= 0:
        raise ValueError("sigma_floor must be positive")

    x = as_point(x)
    sigma = min(cfg.gamma * sigma_in, cfg.sigma_max)
    state = SearchState(x=x, sigma=sigma)
    while sigma >= floor:
        if state.oracle_calls >= cfg.max_oracle_calls:
            return OneStepResult(x, sigma_in, state, progressed=False, budget_exhausted=True)
        state.sigma = sigma
        ds_step(state, pss, oracle, noise, acc, cfg, rng)
        if state.last_success:
            return OneStepResult(state.x, sigma, state, progressed=True)
        sigma = sigma / cfg.gamma
    return OneStepResult(x, sigma_in, state, progressed=False)
