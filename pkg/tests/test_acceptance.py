"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every tolerance is fixed here, nothing is calibrated at run time.
"""

import math
import time

import numpy as np

from dsmm import (
    AccuracyConfig,
    DsConfig,
    GdaConfig,
    MinMaxConfig,
    NoiseModel,
    RngStream,
    StoppingRule,
    WalkConfig,
    check_nonconvex_constants,
    check_pl_implications,
    estimate_complexity_slope,
    fne_residual,
    gda_solve,
    make_synthetic_dataset,
    minimize,
    simulate_reflected_walk,
    solve,
    walk_confinement_k,
)
from dsmm.core import trace_to_csv
from dsmm.minmax import default_net_decrease_constant, minmax_trace_to_csv
from dsmm.problems import (
    ROSENBROCK_BOX,
    pl_nonconvex_min,
    quadratic_min,
    quadratic_saddle,
    robust_regression,
    rosenbrock,
)
from dsmm.spanning import make_orthonormal_pm
from dsmm.theory_validators import audit_unsuccessful_bound, lyapunov_mc

NOISELESS = NoiseModel()
ACC = AccuracyConfig(eps_f=1.0, p_f=0.9, l_f=1.0)


def report(number: int, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {number:02d} {'PASS' if ok else 'FAIL'}: {detail}")


def shell_start(gen: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    u = gen.standard_normal(dim)
    return radius * u / np.linalg.norm(u)


def test_criterion_01_step_size_bound_trace_audit():
    t0 = time.perf_counter()
    pss = make_orthonormal_pm(2)
    total_rows = 0
    total_violations = 0

    quad = quadratic_min(2)
    c_quad = 0.5
    C_quad = 2.0 * pss.kappa_lower / (quad.lipschitz_grad + 2.0 * c_quad)
    for seed in range(20):
        x0 = shell_start(RngStream(seed, 1).generator(), 2, 3.0)
        cfg = DsConfig(c=c_quad, gamma=2.0, sigma0=1.0, max_iterations=2000)
        state = minimize(x0, pss, quad.oracle, NOISELESS, ACC, cfg,
                         StoppingRule(sigma_stop=1e-10), RngStream(seed))
        total_rows += len(state.history)
        total_violations += len(audit_unsuccessful_bound(state.history, C_quad))

    rosen = rosenbrock()
    c_rosen = 0.01
    C_rosen = 2.0 * pss.kappa_lower / (rosen.lipschitz_grad + 2.0 * c_rosen)
    (x_lo, x_hi), (y_lo, y_hi) = ROSENBROCK_BOX
    for seed in range(20):
        gen = RngStream(seed, 2).generator()
        x0 = np.array([-1.2, 1.0]) + 0.1 * gen.uniform(-1.0, 1.0, 2)
        cfg = DsConfig(c=c_rosen, gamma=2.0, sigma0=0.5, max_iterations=6000)
        state = minimize(x0, pss, rosen.oracle, NOISELESS, ACC, cfg,
                         StoppingRule(grad_target=1e-3), RngStream(seed))
        total_rows += len(state.history)
        total_violations += len(audit_unsuccessful_bound(state.history, C_rosen))
        # the declared gradient-Lipschitz constant is certified on this box
        assert x_lo <= state.x[0] <= x_hi and y_lo <= state.x[1] <= y_hi

    elapsed = time.perf_counter() - t0
    ok = total_violations == 0 and elapsed < 10.0
    report(1, ok, f"step-size bound audit: {total_violations} violations in {total_rows} rows "
                  f"across 40 runs ({elapsed:.1f}s < 10s)")
    assert total_violations == 0
    assert elapsed < 10.0


def test_criterion_02_lyapunov_decrease():
    t0 = time.perf_counter()
    problem = quadratic_min(2)
    noise = NoiseModel("gaussian", 1.0)
    acc = AccuracyConfig(eps_f=1.0, p_f=0.9, l_f=1.0, c0=2.0)
    v = 1.0 / 3.0
    cfg = DsConfig(c=10.0, gamma=2.0, sigma0=1.0, sigma_max=1e6)
    feas = check_nonconvex_constants(cfg.c, acc.eps_f, v, acc.p_f, cfg.gamma, acc.l_f)
    assert feas.satisfied, feas.to_json()

    states = [
        (np.array([6.0, 0.0]), 1.0),
        (np.array([5.5, 0.0]), 1.0),
        (np.array([1.0, 1.0]), 0.5),
        (np.array([0.0, 0.0]), 0.7),
        (np.array([8.0, -3.0]), 2.0),
    ]
    pss = make_orthonormal_pm(2)
    worst_margin = math.inf
    ok = True
    for i, (x, sigma) in enumerate(states):
        mean, stderr, bound = lyapunov_mc(
            problem, x, sigma, pss, noise, acc, cfg, v, 2000, RngStream(1000 + i)
        )
        margin = bound + 3.0 * stderr - mean
        worst_margin = min(worst_margin, margin)
        ok = ok and (mean <= bound + 3.0 * stderr)
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 120.0
    report(2, ok, f"Lyapunov decrease at 5 states x 2000 replicates, worst margin "
                  f"{worst_margin:+.4f} ({elapsed:.1f}s < 120s)")
    assert ok


def test_criterion_03_pl_rate_shape():
    t0 = time.perf_counter()
    problem = quadratic_min(2)
    rep = estimate_complexity_slope(
        problem, make_orthonormal_pm(2), NOISELESS, ACC,
        DsConfig(c=0.5, gamma=2.0, sigma0=1.0, max_iterations=50_000),
        [1e-1, 1e-2, 1e-3, 1e-4, 1e-5], replicates=20, rng=RngStream(31), family="pl",
        x0_sampler=lambda gen: shell_start(gen, 2, 3.0),
    )
    elapsed = time.perf_counter() - t0
    ok = (not rep.inconclusive) and (0.7 <= rep.slope <= 1.3) and elapsed < 30.0
    report(3, ok, f"PL hitting-time growth: slope {rep.slope:.3f} in [0.7, 1.3], "
                  f"mean hits {[round(h, 1) for h in rep.mean_hits]} ({elapsed:.1f}s < 30s)")
    assert not rep.inconclusive, rep.detail
    assert 0.7 <= rep.slope <= 1.3
    assert elapsed < 30.0


def test_criterion_04_nonconvex_rate_envelope():
    t0 = time.perf_counter()
    problem = rosenbrock()
    rep = estimate_complexity_slope(
        problem, make_orthonormal_pm(2), NOISELESS, ACC,
        DsConfig(c=0.01, gamma=2.0, sigma0=0.5, max_iterations=200_000),
        [1e-1, 3e-2, 1e-2, 3e-3], replicates=3, rng=RngStream(32), family="nonconvex",
        x0_sampler=lambda gen: np.array([-1.2, 1.0]) + 0.05 * gen.standard_normal(2),
    )
    elapsed = time.perf_counter() - t0
    ok = (not rep.inconclusive) and rep.slope <= 2.5 and elapsed < 120.0
    report(4, ok, f"nonconvex hitting-time envelope: slope {rep.slope:.3f} <= 2.5, "
                  f"mean hits {[round(h, 1) for h in rep.mean_hits]} ({elapsed:.1f}s < 120s)")
    assert not rep.inconclusive, rep.detail
    assert rep.slope <= 2.5
    assert elapsed < 120.0


def test_criterion_05_random_walk_confinement():
    t0 = time.perf_counter()
    replicates = 100_000
    ok = True
    worst = math.inf
    for p_f in (0.6, 0.7, 0.9):
        for n in (100, 1000):
            for delta in (0.5, 0.9):
                cfg = WalkConfig(p_f=p_f, n=n, delta=delta)
                k = walk_confinement_k(cfg)
                emp = simulate_reflected_walk(cfg, replicates, RngStream(99, k + n))
                stderr = math.sqrt(max(emp * (1.0 - emp), 1e-12) / replicates)
                margin = emp - (delta - 3.0 * stderr)
                worst = min(worst, margin)
                ok = ok and margin >= 0.0
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60.0
    report(5, ok, f"reflected-walk confinement over 12 settings, worst margin "
                  f"{worst:+.4f} ({elapsed:.1f}s < 60s)")
    assert ok


def run_saddle(seed: int = 42):
    game = quadratic_saddle()
    cfg = MinMaxConfig(c_x=2.0, c_y=1.0, gamma=2.0, sigma0_x=1.0, sigma0_y=1.0,
                       eps_target=1e-2, T_outer_max=2000, use_gradient_stopping=False)
    result = solve(game, [1.0], [1.0], cfg, NOISELESS, ACC, ACC, RngStream(seed))
    return game, cfg, result


def test_criterion_06_minmax_end_to_end():
    t0 = time.perf_counter()
    game, cfg, res = run_saddle()
    gc = game.constants
    K = default_net_decrease_constant(gc, cfg)
    rx, ry = fne_residual(game, res.x, res.y)

    drift_violations = 0
    net_violations = 0
    successful = 0
    for rec, nxt in zip(res.outer, res.outer[1:]):
        if not rec.progressed:
            continue
        successful += 1
        s = rec.sigma_t
        drift = game.value(rec.x_new, nxt.y_inner) - game.value(rec.x_new, rec.y_inner)
        if drift > gc.D1 * s**2 + gc.D2 * s * res.eps_max + gc.D3 * res.eps_max**2 + 1e-12:
            drift_violations += 1
        net = game.value(rec.x_new, nxt.y_inner) - game.value(rec.x_prev, rec.y_inner)
        if not (net < -K * s**2):
            net_violations += 1

    elapsed = time.perf_counter() - t0
    ok = (res.converged and rx <= 1e-2 and ry <= 1e-2
          and drift_violations == 0 and net_violations == 0 and elapsed < 30.0)
    report(6, ok, f"min-max end-to-end: residuals ({rx:.4f}, {ry:.4f}) <= 1e-2, "
                  f"{successful} successful min steps, 0 drift / 0 net-decrease "
                  f"violations ({elapsed:.1f}s < 30s)")
    assert res.converged
    assert rx <= 1e-2 and ry <= 1e-2
    assert drift_violations == 0 and net_violations == 0
    assert elapsed < 30.0


def robust_game():
    data = make_synthetic_dataset(7, 50, 5)
    return robust_regression(data, 1.0)


def test_criterion_07_inner_max_oracle_equivalence():
    t0 = time.perf_counter()
    game = robust_game()
    mu = game.constants.mu
    cfg = MinMaxConfig(c_x=30.0, c_y=1.0, gamma=2.0, sigma0_x=0.1, sigma0_y=0.5,
                       eps_target=0.1, inner_tolerance_mode="fixed",
                       T_outer_max=5, inner_max_iterations=20_000,
                       max_oracle_calls=2_000_000, use_gradient_stopping=False)
    x0 = np.zeros(game.dim_x)
    y0 = np.full(game.dim_y, 1.0 / game.dim_y)
    res = solve(game, x0, y0, cfg, NOISELESS, ACC, ACC, RngStream(5))

    worst = -math.inf
    audited = 0
    for rec in res.outer:
        if not rec.inner_met:
            continue
        audited += 1
        p_star = game.inner_argmax(rec.x_prev)
        err = float(np.linalg.norm(rec.y_inner - p_star))
        worst = max(worst, err - (res.eps_max / (2.0 * mu) + 1e-6))
    elapsed = time.perf_counter() - t0
    ok = audited == len(res.outer) == 5 and worst <= 0.0 and elapsed < 60.0
    report(7, ok, f"inner-max equivalence: {audited} inner solves all within "
                  f"eps_max/(2 mu)+1e-6 (worst overrun {worst:+.2e}) ({elapsed:.1f}s < 60s)")
    assert audited == 5
    assert worst <= 0.0
    assert elapsed < 60.0


def test_criterion_08_ds_vs_gda_parity():
    t0 = time.perf_counter()
    game = robust_game()
    budget = 600_000

    def outer_objective(theta):
        return game.value(theta, game.inner_argmax(theta))

    x0 = np.zeros(game.dim_x)
    y0 = np.full(game.dim_y, 1.0 / game.dim_y)
    cfg = MinMaxConfig(c_x=30.0, c_y=1.0, gamma=2.0, sigma0_x=0.1, sigma0_y=0.5,
                       eps_target=0.1, inner_tolerance_mode="fixed",
                       T_outer_max=150, inner_max_iterations=20_000,
                       max_oracle_calls=budget, use_gradient_stopping=False)
    res = solve(game, x0, y0, cfg, NOISELESS, ACC, ACC, RngStream(5))
    ds_objective = outer_objective(res.x)

    # paper-style learning-rate grid, alternating ascent/descent, same budget
    # counted in gradient evaluations
    best_gda = math.inf
    for eta in (0.1, 0.05, 0.01, 0.005, 0.001, 0.0005):
        gda_cfg = GdaConfig(eta_x=eta, eta_y=eta, mode="alternating",
                            inner_steps_y=10, max_epochs=10**9)
        out = gda_solve(game, x0, y0, gda_cfg, max_grad_calls=budget)
        if not out.diverged:
            best_gda = min(best_gda, outer_objective(out.x))

    allowance = best_gda + 0.05 * abs(best_gda)
    elapsed = time.perf_counter() - t0
    ok = ds_objective <= allowance and elapsed < 300.0
    report(8, ok, f"DS vs GDA parity at {budget} calls: DS {ds_objective:.4f} <= "
                  f"best GDA {best_gda:.4f} + 5% ({elapsed:.1f}s < 300s)")
    assert ds_objective <= allowance
    assert elapsed < 300.0


def test_criterion_09_pl_implication_suite():
    t0 = time.perf_counter()
    ok = True
    details = []
    for problem in (quadratic_min(2), pl_nonconvex_min()):
        rep = check_pl_implications(
            problem, problem.mu, problem.lipschitz_grad, 1000, RngStream(9), slack=1e-10
        )
        ok = ok and rep.passed
        details.append(f"{problem.name}: {rep.violations} violations")
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 5.0
    report(9, ok, f"PL implications at 1000 points each ({'; '.join(details)}) "
                  f"({elapsed:.1f}s < 5s)")
    assert ok


def test_criterion_10_determinism():
    t0 = time.perf_counter()
    _, _, res_a = run_saddle()
    _, _, res_b = run_saddle()
    minmax_identical = minmax_trace_to_csv(res_a.trace) == minmax_trace_to_csv(res_b.trace)

    def noisy_ds_trace():
        problem = quadratic_min(2)
        cfg = DsConfig(c=10.0, gamma=2.0, sigma0=1.0, max_iterations=60)
        state = minimize([2.0, -1.0], make_orthonormal_pm(2), problem.oracle,
                         NoiseModel("gaussian", 1.0), ACC, cfg, StoppingRule(), RngStream(17))
        return trace_to_csv(state.history)

    ds_identical = noisy_ds_trace() == noisy_ds_trace()
    elapsed = time.perf_counter() - t0
    ok = minmax_identical and ds_identical
    report(10, ok, f"byte-identical replays: minmax trace {minmax_identical}, "
                   f"stochastic ds trace {ds_identical} ({elapsed:.1f}s)")
    assert minmax_identical
    assert ds_identical
