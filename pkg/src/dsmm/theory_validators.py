"""Executable desk-scale checks of the quantitative convergence statements:
parameter feasibility, expected Lyapunov decrease, step-size lower bounds,
stopping-time scaling, reflected-random-walk confinement, and PL
implications."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .core import Point, RngStream, TraceRecord
from .direct_search import DsConfig, SearchState, StoppingRule, ds_step, minimize
from .problems import MinProblem
from .spanning import SpanningSet
from .stochastic_oracle import AccuracyConfig, NoiseModel

__all__ = [
    "InequalityCheck",
    "FeasibilityReport",
    "WalkConfig",
    "check_nonconvex_constants",
    "check_pl_constants",
    "feasible_v_interval",
    "pick_feasible_v",
    "walk_confinement_k",
    "stationary_tail",
    "simulate_reflected_walk",
    "PlImplicationReport",
    "check_pl_implications",
    "step_size_bound_constant",
    "audit_unsuccessful_bound",
    "lyapunov_step_bound",
    "lyapunov_mc",
    "SlopeReport",
    "hitting_times",
    "estimate_complexity_slope",
]

# relative slack so boundary-equality parameter choices report as satisfied
_REL_SLACK = 1e-12


@dataclass(frozen=True)
class InequalityCheck:
    name: str
    lhs: float
    rhs: float
    satisfied: bool


@dataclass(frozen=True)
class FeasibilityReport:
    checks: Tuple[InequalityCheck, ...]

    @property
    def satisfied(self) -> bool:
        return all(c.satisfied for c in self.checks)

    @property
    def violated(self) -> Tuple[InequalityCheck, ...]:
        return tuple(c for c in self.checks if not c.satisfied)

    def to_json(self) -> str:
        return json.dumps(
            [
                {"name": c.name, "lhs": c.lhs, "rhs": c.rhs, "satisfied": c.satisfied}
                for c in self.checks
            ],
            indent=2,
        )


def _geq(name: str, lhs: float, rhs: float) -> InequalityCheck:
    slack = _REL_SLACK * max(1.0, abs(rhs))
    return InequalityCheck(name, lhs, rhs, lhs >= rhs - slack)


def _gt(name: str, lhs: float, rhs: float) -> InequalityCheck:
    return InequalityCheck(name, lhs, rhs, lhs > rhs)


def check_nonconvex_constants(
    c: float, eps_f: float, v: float, p_f: float, gamma: float, l_f: float
) -> FeasibilityReport:
    """Feasibility of (c, v, p_f) for the expected Lyapunov decrease of the
    stochastic loop on a nonconvex objective."""
    if gamma <= 1 or not (0.0 < v < 1.0):
        raise ValueError("need gamma > 1 and v in (0, 1)")
    decay = 1.0 - gamma**-2
    checks = [
        _gt("c - 2*eps_f > 0", c - 2.0 * eps_f, 0.0),
        _geq(
            "p_f/sqrt(1-p_f) >= 4*v*l_f/((1-v)*(1-gamma^-2))",
            p_f / math.sqrt(1.0 - p_f),
            4.0 * v * l_f / ((1.0 - v) * decay),
        ),
        _geq(
            "v/(1-v) >= (gamma^2 - gamma^-2)/(c - 2*eps_f)",
            v / (1.0 - v),
            (gamma**2 - gamma**-2) / (c - 2.0 * eps_f) if c > 2.0 * eps_f else math.inf,
        ),
    ]
    return FeasibilityReport(tuple(checks))


def check_pl_constants(
    c: float, eps_f: float, l_f: float, v: float, p_f: float, gamma: float
) -> FeasibilityReport:
    """Strengthened feasibility for the PL-rate theorem."""
    if gamma <= 1 or not (0.0 < v < 1.0):
        raise ValueError("need gamma > 1 and v in (0, 1)")
    decay = 1.0 - gamma**-2
    ratio = v / (1.0 - v)
    checks = [
        _gt("c > 4*eps_f", c, 4.0 * eps_f),
        _gt("c > 2*sqrt(2)*l_f", c, 2.0 * math.sqrt(2.0) * l_f),
        _geq(
            "p_f/sqrt(1-p_f) >= 4*v*l_f/((1-v)*(1-gamma^-2))",
            p_f / math.sqrt(1.0 - p_f),
            4.0 * v * l_f / ((1.0 - v) * decay),
        ),
        _geq(
            "v/(1-v) >= (gamma^2 - gamma^-2)/(c - 2*eps_f)",
            ratio,
            (gamma**2 - gamma**-2) / (c - 2.0 * eps_f) if c > 2.0 * eps_f else math.inf,
        ),
        _geq("v/(1-v) >= 72*gamma^2/c", ratio, 72.0 * gamma**2 / c),
    ]
    return FeasibilityReport(tuple(checks))


def feasible_v_interval(
    c: float, eps_f: float, p_f: float, gamma: float, l_f: float, pl: bool = False
) -> Optional[Tuple[float, float]]:
    """Interval of admissible v/(1-v) ratios, or None when empty."""
    if c <= 2.0 * eps_f:
        return None
    lo = (gamma**2 - gamma**-2) / (c - 2.0 * eps_f)
    if pl:
        if c <= 4.0 * eps_f or c <= 2.0 * math.sqrt(2.0) * l_f:
            return None
        lo = max(lo, 72.0 * gamma**2 / c)
    if l_f == 0.0:
        return (lo, math.inf)
    hi = p_f * (1.0 - gamma**-2) / (4.0 * l_f * math.sqrt(1.0 - p_f))
    if hi < lo:
        return None
    return (lo, hi)


def pick_feasible_v(
    c: float, eps_f: float, p_f: float, gamma: float, l_f: float, pl: bool = False
) -> Optional[float]:
    """A v in (0, 1) satisfying the feasibility conditions, or None."""
    interval = feasible_v_interval(c, eps_f, p_f, gamma, l_f, pl=pl)
    if interval is None:
        return None
    lo, hi = interval
    ratio = lo * 1.5 if math.isinf(hi) else math.sqrt(lo * hi)
    return ratio / (1.0 + ratio)


@dataclass(frozen=True)
class WalkConfig:
    """Reflected biased walk: down with probability p_f, reflected at 0."""

    p_f: float
    n: int
    delta: float

    def __post_init__(self):
        if not (0.5 < self.p_f < 1.0):
            raise ValueError("p_f must lie in (1/2, 1)")
        if self.n < 1:
            raise ValueError("walk length n must be >= 1")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must lie in (0, 1)")


def walk_confinement_k(cfg: WalkConfig) -> int:
    """Smallest k with k >= log(1 - e^{log(delta)/n}) / log((1-p_f)/p_f) - 1."""
    tail = -math.expm1(math.log(cfg.delta) / cfg.n)  # 1 - delta^{1/n}
    bound = math.log(tail) / math.log((1.0 - cfg.p_f) / cfg.p_f) - 1.0
    return max(0, math.ceil(bound - 1e-12))


def stationary_tail(p_f: float, k: int) -> float:
    """Stationary mass of positions 0..k: 1 - ((1-p_f)/p_f)^(k+1)."""
    return 1.0 - ((1.0 - p_f) / p_f) ** (k + 1)


def simulate_reflected_walk(
    cfg: WalkConfig, replicates: int, rng: RngStream, k: Optional[int] = None
) -> float:
    """Empirical probability a length-n walk stays within [0, k].

    Starts at 0, moves up with probability 1-p_f, down with probability p_f,
    and reflects at 0.  k defaults to walk_confinement_k(cfg).
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    if k is None:
        k = walk_confinement_k(cfg)
    gen = rng.generator()
    pos = np.zeros(replicates, dtype=np.int64)
    escaped = np.zeros(replicates, dtype=bool)
    up_prob = 1.0 - cfg.p_f
    for _ in range(cfg.n):
        up = gen.random(replicates) < up_prob
        pos += np.where(up, 1, -1)
        np.maximum(pos, 0, out=pos)
        escaped |= pos > k
    return 1.0 - float(escaped.mean())


@dataclass(frozen=True)
class PlImplicationReport:
    """Worst margins (lhs - rhs, negative = violation) of the PL chain:
    (i)  0.5*||grad f||^2 >= mu*(f - f*)
    (ii) f - f* >= (mu/2)*||x - x*||^2   (quadratic growth)
    (iii) f - f* >= ||grad f||^2 / (2L)
    """

    worst_pl: float
    worst_qg: float
    worst_smooth: float
    violations: int
    samples: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


def check_pl_implications(
    problem: MinProblem,
    mu: float,
    L: float,
    samples: int,
    rng: RngStream,
    radius: float = 10.0,
    slack: float = 1e-10,
) -> PlImplicationReport:
    """Assert the PL chain at random points around the minimizer.

    Margins are scaled by max(1, |rhs|) so equality cases pass at float
    precision.
    """
    gen = rng.generator()
    oracle = problem.oracle
    worst = [math.inf, math.inf, math.inf]
    violations = 0
    for _ in range(samples):
        x = gen.uniform(-radius, radius, oracle.dim)
        fx = float(oracle.func(x))
        gap = fx - problem.f_star
        gnorm2 = float(np.sum(oracle.gradient(x) ** 2))
        dist2 = float(np.sum((x - problem.minimizer_for(x)) ** 2))
        margins = (
            (0.5 * gnorm2 - mu * gap) / max(1.0, abs(mu * gap)),
            (gap - 0.5 * mu * dist2) / max(1.0, abs(0.5 * mu * dist2)),
            (gap - gnorm2 / (2.0 * L)) / max(1.0, abs(gnorm2 / (2.0 * L))),
        )
        for i, m in enumerate(margins):
            worst[i] = min(worst[i], m)
            if m < -slack:
                violations += 1
    return PlImplicationReport(worst[0], worst[1], worst[2], violations, samples)


def step_size_bound_constant(kappa_min: float, L: float, c: float, eps_f: float = 0.0) -> float:
    """Constant C of the unsuccessful-step bound sigma_k >= C * ||grad f(x_k)||,
    C = 2*kappa_min / (L + 2c + 4*eps_f); it converts observed step sizes into
    certified gradient bounds."""
    if kappa_min <= 0 or L < 0 or c <= 0 or eps_f < 0:
        raise ValueError("need kappa_min > 0, L >= 0, c > 0, eps_f >= 0")
    return 2.0 * kappa_min / (L + 2.0 * c + 4.0 * eps_f)


def audit_unsuccessful_bound(
    history: Sequence[TraceRecord], C: float, rtol: float = 1e-9
) -> List[TraceRecord]:
    """Rows violating sigma_k >= C*||grad f(x_k)|| at unsuccessful steps.

    Rows without a recorded gradient norm are skipped.
    """
    violations = []
    for rec in history:
        if rec.success or rec.grad_norm is None:
            continue
        if rec.sigma < C * rec.grad_norm * (1.0 - rtol):
            violations.append(rec)
    return violations


def lyapunov_step_bound(p_f: float, v: float, gamma: float, sigma: float) -> float:
    """Expected one-step decrease bound: -p_f*(1-v)*(1-gamma^-2)*sigma^2/2."""
    return -p_f * (1.0 - v) * (1.0 - gamma**-2) * sigma**2 / 2.0


def lyapunov_mc(
    problem: MinProblem,
    x: Point,
    sigma: float,
    pss: SpanningSet,
    noise: NoiseModel,
    acc: AccuracyConfig,
    cfg: DsConfig,
    v: float,
    replicates: int,
    rng: RngStream,
) -> Tuple[float, float, float]:
    """(mean delta-Phi, stderr, theoretical bound) over single-step replicates
    at the state (x, sigma), with Phi = v*(f - f*) + (1-v)*sigma^2.

    f* cancels in the difference, so it is not needed.  Run with sigma_max
    large enough that the clip is inactive; the decrease bound is derived for
    the unclipped update.
    """
    oracle = problem.oracle
    deltas = np.empty(replicates)
    fx = float(oracle.func(np.asarray(x, dtype=float)))
    for r in range(replicates):
        state = SearchState(x=np.array(x, dtype=float), sigma=sigma)
        ds_step(state, pss, oracle, noise, acc, cfg, rng.child(r))
        f_new = float(oracle.func(state.x))
        deltas[r] = v * (f_new - fx) + (1.0 - v) * (state.sigma**2 - sigma**2)
    mean = float(deltas.mean())
    stderr = float(deltas.std(ddof=1) / math.sqrt(replicates)) if replicates > 1 else 0.0
    return mean, stderr, lyapunov_step_bound(acc.p_f, v, cfg.gamma, sigma)


@dataclass(frozen=True)
class SlopeReport:
    slope: float
    intercept: float
    eps_grid: Tuple[float, ...]
    mean_hits: Tuple[float, ...]
    inconclusive: bool
    detail: str = ""


def hitting_times(
    state_history: Sequence[TraceRecord],
    final_grad_norm: float,
    eps_grid: Sequence[float],
) -> List[Optional[int]]:
    """First iteration k with ||grad f(X_k)|| <= eps, per eps.

    Row k carries the gradient norm at the incumbent X_k (k=0 is the start);
    the final iterate's norm is supplied separately.
    """
    norms = [rec.grad_norm for rec in state_history]
    norms.append(final_grad_norm)
    out: List[Optional[int]] = []
    for eps in eps_grid:
        hit = None
        for k, g in enumerate(norms):
            if g is not None and g <= eps:
                hit = k
                break
        out.append(hit)
    return out


def _least_squares_slope(xs: np.ndarray, ys: np.ndarray) -> Tuple[float, float]:
    A = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(A, ys, rcond=None)
    return float(coef[0]), float(coef[1])


def estimate_complexity_slope(
    problem: MinProblem,
    pss: SpanningSet,
    noise: NoiseModel,
    acc: AccuracyConfig,
    cfg: DsConfig,
    eps_grid: Sequence[float],
    replicates: int,
    rng: RngStream,
    family: str = "nonconvex",
    x0_sampler: Optional[Callable[[np.random.Generator], Point]] = None,
) -> SlopeReport:
    """Least-squares slope of log mean hitting time.

    family='nonconvex' regresses against log(1/eps); family='pl' regresses
    against log(log(1/eps)), so a unit slope certifies O(log(1/eps)) growth.
    Hitting times are measured in iterations; a replicate that misses any
    grid value within budget marks the study inconclusive (the budget-capped
    iteration count is substituted so the slope is still reported).
    """
    eps_grid = sorted(eps_grid, reverse=True)
    if len(eps_grid) < 3:
        raise ValueError("eps_grid needs at least 3 decreasing values")
    if family not in ("nonconvex", "pl"):
        raise ValueError(f"unknown family {family!r}")
    if problem.oracle.grad is None:
        raise ValueError("complexity study needs an analytic gradient for stopping")

    tightest = min(eps_grid)
    hits = np.zeros((replicates, len(eps_grid)))
    inconclusive = False
    detail = ""
    for r in range(replicates):
        run_rng = rng.child(r)
        if x0_sampler is not None:
            x0 = x0_sampler(run_rng.child(10_001).generator())
        elif problem.x_star is not None:
            x0 = problem.x_star + 1.0
        else:
            x0 = np.ones(problem.oracle.dim)
        state = minimize(
            x0, pss, problem.oracle, noise, acc, cfg,
            StoppingRule(grad_target=tightest), run_rng,
        )
        final_norm = float(np.linalg.norm(problem.oracle.gradient(state.x)))
        times = hitting_times(state.history, final_norm, eps_grid)
        for j, t in enumerate(times):
            if t is None:
                inconclusive = True
                detail = f"replicate {r} missed eps={eps_grid[j]:g} within budget"
                t = state.iteration
            hits[r, j] = t

    means = tuple(float(m) for m in hits.mean(axis=0))
    if any(m <= 0 for m in means):
        return SlopeReport(
            math.nan, math.nan, tuple(eps_grid), means, True,
            "zero mean hitting time in the grid",
        )
    targets = np.log(1.0 / np.asarray(eps_grid))
    xs = np.log(targets) if family == "pl" else targets
    slope, intercept = _least_squares_slope(xs, np.log(np.asarray(means)))
    return SlopeReport(slope, intercept, tuple(eps_grid), means, inconclusive, detail)
