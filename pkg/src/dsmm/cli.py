"""Experiment runner: config parsing, problem/algorithm wiring, replicate
orchestration, and result persistence.

Subcommands:
  run <config.toml>      execute replicates, write trace CSVs + summary JSON
  validate <suite>       run a validator suite (lyapunov, walk, lemma2,
                         pl-implications, complexity-slope, all)
  pss dump               print a spanning set as a plain-text matrix
  dataset gen            emit the deterministic synthetic dataset as CSV

Exit codes for run: 0 ok, 1 malformed config, 2 infeasible constants,
3 budget exhaustion / non-convergence in any replicate.  validate exits 0
when every invariant passes, 1 on usage errors, 2 on infeasible constants,
4 when a validation check fails.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .core import RngStream, write_trace
from .direct_search import DsConfig, StoppingRule, minimize
from .gda_baseline import GdaConfig, gda_solve
from .minmax import (
    InfeasibleConstantsError,
    MinMaxConfig,
    MinMaxResult,
    fne_residual,
    minmax_trace_to_csv,
    solve,
)
from .problems import (
    MinMaxProblem,
    MinProblem,
    dataset_from_csv,
    dataset_to_csv,
    make_synthetic_dataset,
    pl_nonconvex_min,
    quadratic_min,
    quadratic_saddle,
    robust_regression,
    rosenbrock,
)
from .spanning import (
    dump_text,
    make_minimal_uniform,
    make_orthonormal_pm,
    make_probabilistic_pair,
    make_rotated,
)
from .stochastic_oracle import AccuracyConfig, NoiseModel, accuracy_floor_sigma
from .theory_validators import (
    WalkConfig,
    audit_unsuccessful_bound,
    check_nonconvex_constants,
    check_pl_constants,
    check_pl_implications,
    estimate_complexity_slope,
    step_size_bound_constant,
    lyapunov_mc,
    pick_feasible_v,
    simulate_reflected_walk,
    walk_confinement_k,
)

SPEC_VERSION = 1

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INFEASIBLE = 2
EXIT_BUDGET = 3
EXIT_VALIDATION = 4


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config schema


_SCHEMA: Dict[str, Any] = {
    "spec_version": int,
    "problem": {
        "name": str,
        "dim": int,
        "lambda_": float,
        "n": int,
        "d": int,
        "dataset_seed": int,
        "dataset_path": str,
    },
    "noise": {"kind": str, "sigma_f": float},
    "accuracy": {
        "eps_f": float,
        "p_f": float,
        "l_f": float,
        "c0": float,
        "n_max": int,
        "v": float,
    },
    "algorithm": {
        "kind": str,
        "ds": {
            "c": float,
            "gamma": float,
            "sigma0": float,
            "sigma_max": float,
            "max_iterations": int,
            "max_oracle_calls": int,
            "tie_break": str,
            "sigma_floor": float,
            "pss": str,
            "sigma_stop": float,
            "grad_target": float,
            "x0": list,
        },
        "minmax": {
            "c_x": float,
            "c_y": float,
            "gamma": float,
            "sigma0_x": float,
            "sigma0_y": float,
            "eps_target": float,
            "K": float,
            "inner_tolerance_mode": str,
            "eps_max_fixed": float,
            "T_outer_max": int,
            "inner_max_iterations": int,
            "max_oracle_calls": int,
            "sigma_max": float,
            "use_gradient_stopping": bool,
            "delta_walk": float,
            "x0": list,
            "y0": list,
        },
        "gda": {
            "eta_x": float,
            "eta_y": float,
            "mode": str,
            "inner_steps_y": int,
            "max_epochs": int,
            "x0": list,
            "y0": list,
        },
    },
    "run": {
        "seeds": list,
        "replicates": int,
        "output_dir": str,
        "jobs": int,
    },
}


def _check_keys(data: Dict[str, Any], schema: Dict[str, Any], path: str = "") -> None:
    for key, value in data.items():
        where = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key: {where}")
        expected = schema[key]
        if isinstance(expected, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where} must be a table")
            _check_keys(value, expected, where)
        elif expected is float:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{where} must be a number")
        elif expected is int:
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"{where} must be an integer")
        elif not isinstance(value, expected):
            raise ConfigError(f"{where} must be of type {expected.__name__}")


def load_config(path: str) -> Dict[str, Any]:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML: {exc}") from exc
    _check_keys(data, _SCHEMA)
    if data.get("spec_version") != SPEC_VERSION:
        raise ConfigError(
            f"spec_version must be {SPEC_VERSION}, got {data.get('spec_version')!r}"
        )
    for section in ("problem", "algorithm", "run"):
        if section not in data:
            raise ConfigError(f"missing required section: {section}")
    return data


# ---------------------------------------------------------------------------
# wiring


def build_problem(cfg: Dict[str, Any]):
    name = cfg.get("name")
    if name == "quadratic_min":
        return quadratic_min(int(cfg.get("dim", 2)))
    if name == "rosenbrock":
        return rosenbrock()
    if name == "pl_nonconvex_min":
        return pl_nonconvex_min()
    if name == "quadratic_saddle":
        return quadratic_saddle()
    if name == "robust_regression":
        lam = float(cfg.get("lambda_", 1.0))
        if "dataset_path" in cfg:
            data = dataset_from_csv(Path(cfg["dataset_path"]).read_text())
        else:
            data = make_synthetic_dataset(
                int(cfg.get("dataset_seed", 0)), int(cfg.get("n", 50)), int(cfg.get("d", 5))
            )
        return robust_regression(data, lam)
    raise ConfigError(f"unknown problem name: {name!r}")


def build_noise(cfg: Dict[str, Any]) -> NoiseModel:
    return NoiseModel(kind=cfg.get("kind", "none"), sigma_f=float(cfg.get("sigma_f", 0.0)))


def build_accuracy(cfg: Dict[str, Any]) -> AccuracyConfig:
    return AccuracyConfig(
        eps_f=float(cfg.get("eps_f", 1.0)),
        p_f=float(cfg.get("p_f", 0.9)),
        l_f=float(cfg.get("l_f", 1.0)),
        c0=float(cfg.get("c0", 2.0)),
        n_max=int(cfg.get("n_max", 1_000_000)),
    )


def build_pss(kind: str, dim: int, rng: RngStream):
    if kind == "orthonormal_pm":
        return make_orthonormal_pm(dim)
    if kind == "minimal_uniform":
        return make_minimal_uniform(dim)
    if kind == "rotated":
        return make_rotated(make_orthonormal_pm(dim), rng)
    if kind == "probabilistic_pair":
        return make_probabilistic_pair(dim, rng)
    raise ConfigError(f"unknown pss kind: {kind!r}")


def _feasibility_gate(config: Dict[str, Any]) -> Tuple[List[Dict[str, Any]], bool]:
    """Evaluate the theorem feasibility conditions for the configured run.

    Noiseless runs use eps_f = l_f = 0 (exact estimates satisfy any accuracy
    level).  When no Lyapunov constant v is supplied one is searched; an empty
    feasible interval refuses the run.
    """
    noise = build_noise(config.get("noise", {}))
    acc_cfg = config.get("accuracy", {})
    acc = build_accuracy(acc_cfg)
    eps_f = 0.0 if noise.noiseless else acc.eps_f
    l_f = 0.0 if noise.noiseless else acc.l_f
    algo = config["algorithm"]
    kind = algo.get("kind")
    entries: List[Dict[str, Any]] = []
    ok = True

    gamma = _gamma_of(config)

    def gate_one(c: float, label: str, pl: bool) -> None:
        nonlocal ok
        v = acc_cfg.get("v")
        if v is None:
            v = pick_feasible_v(c, eps_f, acc.p_f, gamma, l_f, pl=pl)
        if v is None:
            report = (check_pl_constants(c, eps_f, l_f, 0.5, acc.p_f, gamma)
                      if pl else check_nonconvex_constants(c, eps_f, 0.5, acc.p_f, gamma, l_f))
            for chk in report.checks:
                entries.append({"name": f"{label}: {chk.name}", "lhs": chk.lhs,
                                "rhs": chk.rhs, "satisfied": chk.satisfied})
            entries.append({"name": f"{label}: feasible v exists", "lhs": 0.0,
                            "rhs": 1.0, "satisfied": False})
            ok = False
            return
        report = (check_pl_constants(c, eps_f, l_f, v, acc.p_f, gamma)
                  if pl else check_nonconvex_constants(c, eps_f, v, acc.p_f, gamma, l_f))
        for chk in report.checks:
            entries.append({"name": f"{label}: {chk.name}", "lhs": chk.lhs,
                            "rhs": chk.rhs, "satisfied": chk.satisfied})
        if not report.satisfied:
            ok = False

    if kind == "ds":
        ds = algo.get("ds", {})
        gate_one(float(ds.get("c", 1.0)), "min loop", pl=False)
    elif kind == "minmax":
        mm = algo.get("minmax", {})
        gate_one(float(mm.get("c_x", 1.0)), "min player", pl=False)
        gate_one(float(mm.get("c_y", 1.0)), "max player (PL)", pl=True)
    return entries, ok


def _gamma_of(config: Dict[str, Any]) -> float:
    algo = config["algorithm"]
    kind = algo.get("kind")
    if kind == "ds":
        return float(algo.get("ds", {}).get("gamma", 2.0))
    if kind == "minmax":
        return float(algo.get("minmax", {}).get("gamma", 2.0))
    return 2.0


def _default_x0(problem_name: str, problem) -> np.ndarray:
    if problem_name == "rosenbrock":
        return np.array([-1.2, 1.0])
    if problem_name == "pl_nonconvex_min":
        return np.array([2.5])
    return np.ones(problem.oracle.dim)


def _run_ds_replicate(config, seed: int, out_dir: Path) -> Dict[str, Any]:
    problem = build_problem(config["problem"])
    if not isinstance(problem, MinProblem):
        raise ConfigError(f"algorithm 'ds' needs a minimization problem, got {problem.name}")
    noise = build_noise(config.get("noise", {}))
    acc = build_accuracy(config.get("accuracy", {}))
    ds_cfg_raw = config["algorithm"].get("ds", {})
    rng = RngStream(seed)
    pss = build_pss(ds_cfg_raw.get("pss", "orthonormal_pm"), problem.oracle.dim, rng.child(999))
    cfg = DsConfig(
        c=float(ds_cfg_raw.get("c", 1.0)),
        gamma=float(ds_cfg_raw.get("gamma", 2.0)),
        sigma0=float(ds_cfg_raw.get("sigma0", 1.0)),
        sigma_max=float(ds_cfg_raw.get("sigma_max", 1e6)),
        max_iterations=int(ds_cfg_raw.get("max_iterations", 100_000)),
        max_oracle_calls=int(ds_cfg_raw.get("max_oracle_calls", 50_000_000)),
        tie_break=ds_cfg_raw.get("tie_break", "lowest_index_among_min"),
        sigma_floor=float(ds_cfg_raw.get("sigma_floor", 1e-12)),
    )
    # noisy runs stop at the step size where the sample cap would start
    # degrading accuracy, unless the config pins its own threshold
    sigma_stop = ds_cfg_raw.get("sigma_stop")
    if sigma_stop is None and not noise.noiseless:
        sigma_stop = accuracy_floor_sigma(acc, noise)
    stop = StoppingRule(
        sigma_stop=sigma_stop,
        grad_target=ds_cfg_raw.get("grad_target"),
    )
    x0 = np.asarray(ds_cfg_raw.get("x0", _default_x0(config["problem"]["name"], problem)), dtype=float)
    state = minimize(x0, pss, problem.oracle, noise, acc, cfg, stop, rng)
    trace_file = out_dir / f"trace_seed{seed}.csv"
    write_trace(trace_file, state.history)
    final_f = float(problem.oracle.func(state.x))
    entry = {
        "seed": seed,
        "trace_file": trace_file.name,
        "iterations": state.iteration,
        "oracle_calls": state.oracle_calls,
        "budget_unit": "oracle calls (one averaged sample each)",
        "stop_reason": state.stop_reason,
        "final_f": final_f,
        "cap_hits": state.cap_hits,
        "budget_exhausted": state.stop_reason == "max_calls",
    }
    if problem.oracle.grad is not None:
        entry["final_grad_norm"] = float(np.linalg.norm(problem.oracle.gradient(state.x)))
        if state.stop_reason == "grad_target":
            entry["hit_iteration"] = state.iteration
    return entry


def _run_minmax_replicate(config, seed: int, out_dir: Path) -> Dict[str, Any]:
    problem = build_problem(config["problem"])
    if not isinstance(problem, MinMaxProblem):
        raise ConfigError(f"algorithm 'minmax' needs a two-player problem, got {problem.name}")
    noise = build_noise(config.get("noise", {}))
    acc = build_accuracy(config.get("accuracy", {}))
    mm = config["algorithm"].get("minmax", {})
    cfg = MinMaxConfig(
        c_x=float(mm.get("c_x", 1.0)),
        c_y=float(mm.get("c_y", 1.0)),
        gamma=float(mm.get("gamma", 2.0)),
        sigma0_x=float(mm.get("sigma0_x", 1.0)),
        sigma0_y=float(mm.get("sigma0_y", 1.0)),
        eps_target=float(mm.get("eps_target", 1e-2)),
        K=mm.get("K"),
        inner_tolerance_mode=mm.get("inner_tolerance_mode", "theory_driven"),
        eps_max_fixed=mm.get("eps_max_fixed"),
        T_outer_max=int(mm.get("T_outer_max", 1000)),
        inner_max_iterations=int(mm.get("inner_max_iterations", 100_000)),
        max_oracle_calls=int(mm.get("max_oracle_calls", 50_000_000)),
        sigma_max=float(mm.get("sigma_max", 1e6)),
        use_gradient_stopping=bool(mm.get("use_gradient_stopping", False)),
        delta_walk=float(mm.get("delta_walk", 0.9)),
    )
    rng = RngStream(seed)
    x0 = np.asarray(mm.get("x0", np.ones(problem.dim_x)), dtype=float)
    y0 = np.asarray(mm.get("y0", np.ones(problem.dim_y)), dtype=float)
    result: MinMaxResult = solve(problem, x0, y0, cfg, noise, acc, acc, rng)
    trace_file = out_dir / f"trace_seed{seed}.csv"
    with open(trace_file, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(minmax_trace_to_csv(result.trace))
    entry = {
        "seed": seed,
        "trace_file": trace_file.name,
        "outer_iterations": len(result.outer),
        "oracle_calls": result.oracle_calls,
        "budget_unit": "oracle calls (one averaged sample each)",
        "eps_max": result.eps_max,
        "cap_hits": result.cap_hits,
        "converged": result.converged,
        "budget_exhausted": result.budget_exhausted or not result.converged,
    }
    if problem.grad_x is not None and problem.grad_y is not None:
        rx, ry = fne_residual(problem, result.x, result.y)
        entry["final_residual_x"] = rx
        entry["final_residual_y"] = ry
    return entry


def _run_gda_replicate(config, seed: int, out_dir: Path) -> Dict[str, Any]:
    problem = build_problem(config["problem"])
    if not isinstance(problem, MinMaxProblem):
        raise ConfigError(f"algorithm 'gda' needs a two-player problem, got {problem.name}")
    g = config["algorithm"].get("gda", {})
    cfg = GdaConfig(
        eta_x=float(g.get("eta_x", 0.01)),
        eta_y=float(g.get("eta_y", 0.01)),
        mode=g.get("mode", "alternating"),
        inner_steps_y=int(g.get("inner_steps_y", 1)),
        max_epochs=int(g.get("max_epochs", 1000)),
    )
    x0 = np.asarray(g.get("x0", np.ones(problem.dim_x)), dtype=float)
    y0 = np.asarray(g.get("y0", np.ones(problem.dim_y)), dtype=float)
    result = gda_solve(problem, x0, y0, cfg)
    # shares the nested trace schema; phase fixed to gda, sigma column carries
    # eta_x, grad_norm the larger residual component
    lines = ["t,phase,k,sigma,f_est,f_best,success,calls,grad_norm"]
    for epoch, (rx, ry) in enumerate(result.residuals):
        lines.append(f"{epoch},gda,0,{cfg.eta_x!r},,,1,{epoch + 1},{max(rx, ry)!r}")
    trace_file = out_dir / f"trace_seed{seed}.csv"
    trace_file.write_text("\n".join(lines) + "\n", encoding="utf-8")
    rx, ry = result.residuals[-1] if result.residuals else (math.nan, math.nan)
    return {
        "seed": seed,
        "trace_file": trace_file.name,
        "epochs": result.epochs,
        "grad_calls": result.grad_calls,
        "budget_unit": "gradient evaluations (one epoch = inner_steps_y + 1 alternating, 2 simultaneous)",
        "final_residual_x": rx,
        "final_residual_y": ry,
        "diverged": result.diverged,
        "budget_exhausted": result.diverged,
    }


def cmd_run(config_path: str) -> int:
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    feasibility, feasible = _feasibility_gate(config)
    if not feasible:
        print("infeasible constants; refusing to run:")
        for entry in feasibility:
            if not entry["satisfied"]:
                print(f"  violated: {entry['name']} (lhs={entry['lhs']:g}, rhs={entry['rhs']:g})")
        return EXIT_INFEASIBLE

    run_cfg = config.get("run", {})
    seeds = list(run_cfg.get("seeds", [0]))
    replicates = int(run_cfg.get("replicates", len(seeds)))
    if replicates > len(seeds):
        print(f"config error: replicates={replicates} exceeds available seeds", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(run_cfg.get("output_dir", "dsmm_out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = int(os.environ.get("DSMM_JOBS", run_cfg.get("jobs", 1)))

    kind = config["algorithm"].get("kind")
    runner = {"ds": _run_ds_replicate, "minmax": _run_minmax_replicate, "gda": _run_gda_replicate}.get(kind)
    if runner is None:
        print(f"config error: unknown algorithm kind {kind!r}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        chosen = seeds[:replicates]
        if jobs > 1 and len(chosen) > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                entries = list(pool.map(lambda s: runner(config, int(s), out_dir), chosen))
        else:
            entries = [runner(config, int(s), out_dir) for s in chosen]
    except InfeasibleConstantsError as exc:
        print(f"infeasible constants: {exc}")
        return EXIT_INFEASIBLE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    exit_code = EXIT_OK
    if any(e.get("budget_exhausted") for e in entries):
        exit_code = EXIT_BUDGET

    summary = {
        "spec_version": SPEC_VERSION,
        "resolved_config": _resolved_config(config),
        "feasibility": feasibility,
        "runs": entries,
        "exit_code": exit_code,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(entries)} trace(s) and summary.json to {out_dir}")
    return exit_code


def _resolved_config(config: Dict[str, Any]) -> Dict[str, Any]:
    """The full parameter set including defaults, so results are reconstructible."""
    resolved = json.loads(json.dumps(config))  # deep copy of plain data
    noise = resolved.setdefault("noise", {})
    noise.setdefault("kind", "none")
    noise.setdefault("sigma_f", 0.0)
    acc = resolved.setdefault("accuracy", {})
    acc.setdefault("eps_f", 1.0)
    acc.setdefault("p_f", 0.9)
    acc.setdefault("l_f", 1.0)
    acc.setdefault("c0", 2.0)
    acc.setdefault("n_max", 1_000_000)
    run = resolved.setdefault("run", {})
    run.setdefault("seeds", [0])
    run.setdefault("replicates", len(run["seeds"]))
    run.setdefault("output_dir", "dsmm_out")
    run.setdefault("jobs", 1)
    kind = resolved["algorithm"].get("kind")
    if kind == "ds":
        block = resolved["algorithm"].setdefault("ds", {})
        defaults = dict(c=1.0, gamma=2.0, sigma0=1.0, sigma_max=1e6,
                        max_iterations=100_000, max_oracle_calls=50_000_000,
                        tie_break="lowest_index_among_min", sigma_floor=1e-12,
                        pss="orthonormal_pm")
    elif kind == "minmax":
        block = resolved["algorithm"].setdefault("minmax", {})
        defaults = dict(c_x=1.0, c_y=1.0, gamma=2.0, sigma0_x=1.0, sigma0_y=1.0,
                        eps_target=1e-2, inner_tolerance_mode="theory_driven",
                        T_outer_max=1000, inner_max_iterations=100_000,
                        max_oracle_calls=50_000_000, sigma_max=1e6,
                        use_gradient_stopping=False, delta_walk=0.9)
    else:
        block = resolved["algorithm"].setdefault("gda", {})
        defaults = dict(eta_x=0.01, eta_y=0.01, mode="alternating",
                        inner_steps_y=1, max_epochs=1000)
    for key, val in defaults.items():
        block.setdefault(key, val)
    return resolved


# ---------------------------------------------------------------------------
# validator suites


def _suite_walk() -> List[Tuple[str, bool, str]]:
    out = []
    replicates = 20_000
    for p_f, n, delta in [(0.7, 100, 0.9), (0.9, 1000, 0.5), (0.6, 100, 0.5), (0.7, 1000, 0.9)]:
        cfg = WalkConfig(p_f=p_f, n=n, delta=delta)
        k = walk_confinement_k(cfg)
        emp = simulate_reflected_walk(cfg, replicates, RngStream(2024, 7), k=k)
        stderr = math.sqrt(max(emp * (1 - emp), 1e-12) / replicates)
        ok = emp >= delta - 3 * stderr
        out.append((f"walk p_f={p_f} n={n} delta={delta} k={k}", ok,
                    f"empirical={emp:.4f} >= {delta} - 3*{stderr:.4f}"))
    return out


def _suite_lemma2() -> List[Tuple[str, bool, str]]:
    out = []
    noise = NoiseModel()
    acc = AccuracyConfig(eps_f=1.0, p_f=0.9, l_f=1.0)
    for problem, c, sigma0, x0 in [
        (quadratic_min(2), 0.5, 1.0, np.array([2.0, -1.0])),
        (rosenbrock(), 0.01, 0.5, np.array([-1.2, 1.0])),
    ]:
        pss = make_orthonormal_pm(problem.oracle.dim)
        C = step_size_bound_constant(pss.kappa_lower, problem.lipschitz_grad, c)
        violations = 0
        for seed in range(5):
            cfg = DsConfig(c=c, gamma=2.0, sigma0=sigma0, max_iterations=3000)
            state = minimize(x0, pss, problem.oracle, noise, acc, cfg,
                             StoppingRule(sigma_stop=1e-9), RngStream(seed))
            violations += len(audit_unsuccessful_bound(state.history, C))
        out.append((f"lemma2 {problem.name}", violations == 0,
                    f"violations={violations} (C={C:.3g})"))
    return out


def _suite_lyapunov() -> List[Tuple[str, bool, str]]:
    out = []
    problem = quadratic_min(2)
    noise = NoiseModel("gaussian", 1.0)
    acc = AccuracyConfig(eps_f=1.0, p_f=0.9, l_f=1.0, c0=2.0)
    v = 1.0 / 3.0
    cfg = DsConfig(c=10.0, gamma=2.0, sigma0=1.0, sigma_max=1e6)
    report = check_nonconvex_constants(cfg.c, acc.eps_f, v, acc.p_f, cfg.gamma, acc.l_f)
    out.append(("lyapunov constants feasible", report.satisfied,
                f"{sum(c.satisfied for c in report.checks)}/{len(report.checks)} inequalities hold"))
    pss = make_orthonormal_pm(2)
    for x, sigma in [(np.array([6.0, 0.0]), 1.0), (np.array([1.0, 1.0]), 0.5)]:
        mean, stderr, bound = lyapunov_mc(
            problem, x, sigma, pss, noise, acc, cfg, v, 1000, RngStream(77, int(sigma * 10))
        )
        ok = mean <= bound + 3 * stderr
        out.append((f"lyapunov decrease at x={x.tolist()} sigma={sigma}", ok,
                    f"mean={mean:.4f} bound={bound:.4f} stderr={stderr:.4f}"))
    return out


def _suite_pl_implications() -> List[Tuple[str, bool, str]]:
    out = []
    for problem in (quadratic_min(2), pl_nonconvex_min()):
        rep = check_pl_implications(problem, problem.mu, problem.lipschitz_grad, 500, RngStream(5))
        out.append((f"pl-implications {problem.name}", rep.passed,
                    f"worst margins: pl={rep.worst_pl:.2e} qg={rep.worst_qg:.2e} "
                    f"smooth={rep.worst_smooth:.2e}"))
    return out


def _suite_complexity_slope() -> List[Tuple[str, bool, str]]:
    problem = quadratic_min(2)
    pss = make_orthonormal_pm(2)
    cfg = DsConfig(c=0.5, gamma=2.0, sigma0=1.0, max_iterations=20_000)
    report = estimate_complexity_slope(
        problem, pss, NoiseModel(), AccuracyConfig(eps_f=1.0, p_f=0.9, l_f=1.0),
        cfg, [1e-1, 1e-2, 1e-3, 1e-4], 5, RngStream(11), family="pl",
        x0_sampler=lambda gen: 3.0 * _unit(gen, 2),
    )
    ok = (not report.inconclusive) and 0.7 <= report.slope <= 1.3
    return [("complexity-slope quadratic (pl)", ok,
             f"slope={report.slope:.3f} hits={[round(h, 1) for h in report.mean_hits]}")]


def _unit(gen: np.random.Generator, dim: int) -> np.ndarray:
    u = gen.standard_normal(dim)
    return u / np.linalg.norm(u)


SUITES = {
    "walk": _suite_walk,
    "lemma2": _suite_lemma2,
    "lyapunov": _suite_lyapunov,
    "pl-implications": _suite_pl_implications,
    "complexity-slope": _suite_complexity_slope,
}


def cmd_validate(suite: str, config_path: Optional[str] = None) -> int:
    if suite != "all" and suite not in SUITES:
        print(f"unknown suite: {suite!r} (choose from {', '.join(SUITES)} or all)",
              file=sys.stderr)
        return EXIT_CONFIG
    if config_path is not None:
        try:
            config = load_config(config_path)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        feasibility, feasible = _feasibility_gate(config)
        if not feasible:
            print("infeasible constants; failing fast:")
            for entry in feasibility:
                if not entry["satisfied"]:
                    print(f"  violated: {entry['name']}")
            return EXIT_INFEASIBLE
    names = list(SUITES) if suite == "all" else [suite]
    all_ok = True
    for name in names:
        for label, ok, detail in SUITES[name]():
            print(f"{'PASS' if ok else 'FAIL'}: {label} ({detail})")
            all_ok = all_ok and ok
    return EXIT_OK if all_ok else EXIT_VALIDATION


def cmd_pss_dump(kind: str, dim: int, seed: int) -> int:
    try:
        pss = build_pss(kind, dim, RngStream(seed))
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(dump_text(pss))
    return EXIT_OK


def cmd_dataset_gen(seed: int, n: int, d: int, out: Optional[str]) -> int:
    try:
        data = make_synthetic_dataset(seed, n, d)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = dataset_to_csv(data)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        print(f"wrote {n}x{d} dataset to {out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="dsmm", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config")
    p_run.add_argument("config")

    p_val = sub.add_parser("validate", help="run a theory-validator suite")
    p_val.add_argument("suite")
    p_val.add_argument("--config", default=None, help="constants file to gate first")

    p_pss = sub.add_parser("pss", help="spanning-set utilities")
    pss_sub = p_pss.add_subparsers(dest="pss_command", required=True)
    p_dump = pss_sub.add_parser("dump")
    p_dump.add_argument("--kind", default="orthonormal_pm")
    p_dump.add_argument("--dim", type=int, required=True)
    p_dump.add_argument("--seed", type=int, default=0)

    p_data = sub.add_parser("dataset", help="dataset utilities")
    data_sub = p_data.add_subparsers(dest="dataset_command", required=True)
    p_gen = data_sub.add_parser("gen")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--n", type=int, default=50)
    p_gen.add_argument("--d", type=int, default=5)
    p_gen.add_argument("--out", default=None)

    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config)
    if args.command == "validate":
        return cmd_validate(args.suite, args.config)
    if args.command == "pss":
        return cmd_pss_dump(args.kind, args.dim, args.seed)
    if args.command == "dataset":
        return cmd_dataset_gen(args.seed, args.n, args.d, args.out)
    return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
