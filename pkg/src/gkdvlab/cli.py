"""Command-line front end: verify / adiabatic / correction / simulate / analyze / sweep.

Every subcommand takes a scenario file (--config) and writes deterministic
files into the output directory; all numeric output is full precision and
embeds the scenario hash.  Sweeps parallelize across epsilon values only.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .adiabatic import first_integral_values, integrate_adiabatic, t_epsilon
from .analysis import (
    energy_budget,
    fit_series,
    l1_budget,
    monitor_bounds_ok,
    monotonicity_series,
    shelf_compare,
    virial_series,
    w_plus_field,
)
from .config import ConfigError, Scenario, parse_config
from .correction import ApproximateSolution, CorrectionProfiles, grid_norms, residual_scaling_fit
from .outputs import read_snapshot, write_csv, write_json, write_snapshot
from .solver import SimConfig, initialize_soliton, run
from .soliton import solve_c_infinity
from .verify import run_verify


def _thread_count(args) -> int:
    env = os.environ.get("GKDVLAB_THREADS")
    if env:
        return max(1, int(env))
    return max(1, args.threads)


def _out_dir(scenario: Scenario, args) -> Path:
    out = Path(args.out) if args.out else Path(scenario.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_verify(scenario: Scenario, args) -> int:
    report = run_verify(scenario.potential)
    out = _out_dir(scenario, args)
    write_json(out / "verify_report.json", report, scenario.config_hash())
    for check in report["checks"]:
        status = "ok " if check["passed"] else "FAIL"
        print(f"[{status}] {check['name']}: {check['value']:.3e} "
              f"(tol {check['tolerance']:.1e})")
    print(f"{report['n_checks']} checks, {report['n_failed']} failed")
    return 0 if report["passed"] else 1


def cmd_adiabatic(scenario: Scenario, args) -> int:
    traj = integrate_adiabatic(scenario.constants, scenario.potential, scenario.epsilon,
                               t_end=scenario.t_end)
    resid = first_integral_values(traj)
    rows = zip(traj.t, traj.c, traj.rho, np.abs(resid))
    out = _out_dir(scenario, args)
    write_csv(out / "adiabatic.csv", ["t", "c", "rho", "first_integral_residual"],
              rows, scenario.config_hash())
    print(f"adiabatic trajectory: {len(traj.t)} samples, "
          f"max first-integral residual {np.max(np.abs(resid)):.3e}")
    return 0


def cmd_correction(scenario: Scenario, args) -> int:
    mc = scenario.constants
    profiles = CorrectionProfiles.build(mc)
    approx = ApproximateSolution.build(mc, scenario.potential, scenario.epsilon,
                                       profiles=profiles)
    st = approx.trajectory.state(0.0)
    y = profiles.grid.nodes
    from .correction import assemble_ac, cutoff_asharp
    ac = assemble_ac(mc, scenario.potential, profiles, scenario.epsilon, st.c, st.rho, y)
    asharp = cutoff_asharp(ac, scenario.epsilon, y)
    out = _out_dir(scenario, args)
    write_csv(out / "shelf_profiles.csv",
              ["y", "A_tilde", "A_hat", "A_c_t0", "A_sharp_t0"],
              zip(y, profiles.a_tilde, profiles.a_hat, ac, asharp),
              scenario.config_hash())

    fits = {}
    approx_by_eps = {}
    for eps in scenario.sweep_epsilons:
        approx_by_eps[eps] = ApproximateSolution.build(mc, scenario.potential, eps,
                                                       profiles=profiles)
    if len(approx_by_eps) >= 2:
        fits["residual_scaling"] = residual_scaling_fit(approx_by_eps)
    grid0 = approx.default_grid(0.0)
    w0 = approx.correction_field(0.0, grid0.nodes)
    write_json(out / "shelf_summary.json", {
        "beta_tilde": profiles.beta_tilde,
        "beta_hat": profiles.beta_hat,
        "correction_norms_t0": grid_norms(w0, grid0),
        "residual_norms_t0": {k: v for k, v in approx.residual(0.0).items()
                              if k in ("l2", "h1", "h2", "linf")},
        "fits": fits,
    }, scenario.config_hash())
    print(f"shelf: beta_tilde={profiles.beta_tilde:.6g} beta_hat={profiles.beta_hat:.6g}")
    if "residual_scaling" in fits:
        print(f"residual scaling slope: {fits['residual_scaling']['slope']:.3f}")
    return 0


def _sim_config(scenario: Scenario) -> SimConfig:
    return SimConfig(constants=scenario.constants, potential=scenario.potential,
                     epsilon=scenario.epsilon, grid=scenario.grid, dt=scenario.dt,
                     t_start=scenario.t_start, t_end=scenario.t_end,
                     snapshot_dt=scenario.snapshot_dt,
                     boundary_tol=scenario.boundary_tol)


def cmd_simulate(scenario: Scenario, args) -> int:
    config = _sim_config(scenario)
    result = run(config, initialize_soliton(config))
    out = _out_dir(scenario, args)
    chash = scenario.config_hash()
    write_csv(out / "invariants.csv", ["t", "M", "Mhat", "Ea", "L1", "Mscript"],
              ((r.t, r.mass, r.mass_weighted, r.energy, r.l1, r.mass_backward)
               for r in result.records), chash)
    for t, u in zip(result.snapshot_times, result.snapshots):
        write_snapshot(out / f"u_{t:.6f}.f64", config.grid.n, config.grid.x_min,
                       config.grid.x_max, float(t), u, chash)
    write_json(out / "summary.json", {
        "scenario_name": scenario.name,
        "config_text": scenario.render(),
        "summary": result.summary,
        "n_snapshots": len(result.snapshots),
        "t_range": [float(result.snapshot_times[0]), float(result.snapshot_times[-1])],
    }, chash)
    print(f"simulated {result.summary['n_steps']} steps; "
          f"max boundary magnitude {result.summary['max_boundary']:.3e}")
    return 0


def cmd_analyze(scenario: Scenario, args) -> int:
    run_dir = Path(args.run_dir if args.run_dir else scenario.out_dir)
    summary_path = run_dir / "summary.json"
    if not summary_path.exists():
        print(f"no summary.json in {run_dir}", file=sys.stderr)
        return 1
    summary = json.loads(summary_path.read_text())
    from .config import parse_config_text
    scen = parse_config_text(summary["config_text"], allow_out_of_theory=True)
    mc = scen.constants

    snaps = sorted(run_dir.glob("u_*.f64"), key=lambda p: float(p.stem[2:]))
    fields = [read_snapshot(p) for p in snaps]
    if not fields:
        print(f"no snapshots in {run_dir}", file=sys.stderr)
        return 1

    class _Loaded:
        pass

    loaded = _Loaded()
    loaded.config = _sim_config(scen)
    loaded.snapshot_times = np.array([f["t"] for f in fields])
    loaded.snapshots = [f["u"] for f in fields]

    te = scen.t_eps()
    fits = fit_series(loaded, mc, scen.potential, scen.epsilon, t_interaction=te)
    if not any(f.valid for f in fits):
        print("no snapshot admits a soliton fit; nothing to analyze", file=sys.stderr)
        return 1
    c_inf = solve_c_infinity(mc, mc.lam)
    late = [f for f in fits if f.valid and f.t > te]
    c_plus = float(np.mean([f.c2 for f in late[-max(1, len(late) // 4):]])) if late \
        else c_inf

    rows = []
    for t, u, fit in zip(loaded.snapshot_times, loaded.snapshots, fits):
        if not fit.valid:
            continue
        if t > te:
            w = w_plus_field(u, scen.grid, mc, c_plus, fit.rho2)
        else:
            w = fit.residual_field(mc, u, scen.grid.nodes)
        rows.append((t, fit.c2, fit.rho2, fit.resid_q, fit.resid_yq,
                     grid_norms(w, scen.grid)["h1"]))
    chash = scen.config_hash()
    write_csv(run_dir / "modulation.csv",
              ["t", "c2", "rho2", "resid1", "resid2", "w_h1"], rows, chash)

    vir = virial_series(loaded, fits, a0=scen.a0)
    mon = monotonicity_series(loaded, fits, x0_values=scen.x0_values)
    mon_rows = []
    for i, t in enumerate(vir.times):
        mon_rows.append((t, vir.values["virial"][i], vir.values["localized"][i],
                         mon.values["mscript"][i] if i < len(mon.values["mscript"]) else np.nan))
    write_csv(run_dir / "monitors.csv", ["t", "virial", "localized_norm", "Mscript"],
              mon_rows, chash)

    last_fit = next(f for f in reversed(fits) if f.valid)
    last_u = loaded.snapshots[-1]
    budget = l1_budget(last_u, scen.grid, last_fit, mc, c_inf,
                       core_offset=scen.core_offset)
    ebudget = energy_budget(last_u, scen.grid, mc, scen.potential, scen.epsilon,
                            c_plus, last_fit.rho2)
    scale = float(np.max(np.abs(mon.values["mscript"]))) if len(mon.values["mscript"]) else 1.0
    write_json(run_dir / "budget.json", {
        "c_plus": c_plus,
        "c_infinity": c_inf,
        "l1_budget": budget,
        "energy_budget": {k: v for k, v in ebudget.items()},
        "monitor_bounds": monitor_bounds_ok(mon, scale),
        "mscript_violation": mon.values["mscript_violation"],
        "localized_time_integral": vir.values["localized_time_integral"],
    }, chash)
    print(f"analyzed {len(rows)} snapshots; c+ = {c_plus:.6g} (c_inf = {c_inf:.6g})")
    return 0


def _sweep_one(payload):
    """One epsilon of a sweep; runs in a worker process."""
    text, eps, run_pde = payload
    from .config import parse_config_text
    scen = parse_config_text(text, allow_out_of_theory=True)
    mc = scen.constants
    try:
        profiles = CorrectionProfiles.build(mc)
        te = t_epsilon(mc.lam, eps)
        approx = ApproximateSolution.build(mc, scen.potential, eps, profiles=profiles)
        times = np.linspace(-te, min(te, approx.trajectory.t_end), 21)
        max_l2 = max(approx.residual(t)["l2"] for t in times)
        max_l2_nc = max(approx.without_correction().residual(t)["l2"] for t in times)
        traj10 = integrate_adiabatic(mc, scen.potential, eps, t_end=10.0 * te)
        exit_err = abs(float(traj10.c_of_t(10.0 * te)) - solve_c_infinity(mc, mc.lam))
        row = {"epsilon": eps, "max_residual_l2": max_l2,
               "max_residual_l2_nocorr": max_l2_nc, "exit_scaling_error": exit_err,
               "shelf_rel_error": float("nan"), "tail_l1_error": float("nan"),
               "failed": 0.0}
        if run_pde:
            row.update(_sweep_pde_metrics(scen, eps, profiles))
        return row
    except Exception:
        return {"epsilon": eps, "max_residual_l2": float("nan"),
                "max_residual_l2_nocorr": float("nan"),
                "exit_scaling_error": float("nan"),
                "shelf_rel_error": float("nan"), "tail_l1_error": float("nan"),
                "failed": 1.0}


def _sweep_pde_metrics(scen: Scenario, eps: float, profiles) -> dict:
    """Full-simulation metrics for one sweep epsilon (opt-in: these are slow)."""
    from .analysis import fit_modulation
    from .soliton import Grid1D
    mc = scen.constants
    te = t_epsilon(mc.lam, eps)
    margin = 3.0 / eps + 60.0
    left = -(1.0 - mc.lam) * te - margin
    c_inf = solve_c_infinity(mc, mc.lam)
    right = (2.0 * c_inf - mc.lam - 1.0) * te + 60.0
    n = 1 << int(np.ceil(np.log2((right - left) / 0.04)))
    config = SimConfig(constants=mc, potential=scen.potential, epsilon=eps,
                       grid=Grid1D(left, right, n), dt=scen.dt, t_start=-te, t_end=te,
                       snapshot_dt=max(te / 8, 0.5), boundary_tol=scen.boundary_tol)
    result = run(config, initialize_soliton(config))
    mid = result.snapshot_at(0.0)
    fit_mid = fit_modulation(mid, config.grid, mc, scen.potential, eps,
                             phase="interaction")
    rep = shelf_compare(mid, config.grid, fit_mid, mc, scen.potential, profiles, eps)
    last = result.snapshots[-1]
    fit_last = fit_modulation(last, config.grid, mc, scen.potential, eps, phase="post")
    budget = l1_budget(last, config.grid, fit_last, mc, c_inf)
    return {"shelf_rel_error": rep["rel_error"],
            "tail_l1_error": abs(budget["tail_windowed"] - budget["tail_predicted"])}


def cmd_sweep(scenario: Scenario, args) -> int:
    eps_values = sorted(scenario.sweep_epsilons)
    if len(eps_values) < 2:
        print("sweep needs at least two epsilon values", file=sys.stderr)
        return 1
    text = scenario.render()
    payloads = [(text, eps, scenario.sweep_run_pde) for eps in eps_values]
    workers = _thread_count(args)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, payloads))
    else:
        rows = [_sweep_one(p) for p in payloads]
    rows.sort(key=lambda r: r["epsilon"])

    columns = ["epsilon", "max_residual_l2", "max_residual_l2_nocorr",
               "exit_scaling_error", "shelf_rel_error", "tail_l1_error", "failed"]
    out = _out_dir(scenario, args)
    chash = scenario.config_hash()

    fits = {}
    good = [r for r in rows if not r["failed"]]
    if len(good) >= 2:
        eps_arr = np.array([r["epsilon"] for r in good])
        for key in ("max_residual_l2", "max_residual_l2_nocorr", "exit_scaling_error",
                    "shelf_rel_error", "tail_l1_error"):
            vals = np.array([r[key] for r in good])
            ok = np.isfinite(vals) & (vals > 0)
            if np.sum(ok) >= 2:
                fits[key + "_slope"] = float(np.polyfit(np.log(eps_arr[ok]),
                                                        np.log(vals[ok]), 1)[0])
    footer = [f"# least_squares_loglog {k}={v:.6g}" for k, v in sorted(fits.items())]
    write_csv(out / "sweep.csv", columns,
              ([row[c] for c in columns] for row in rows), chash, footer=footer)
    write_json(out / "sweep_fits.json",
               {"fits": fits, "n_workers": workers, "rows": rows}, chash)
    if "max_residual_l2_slope" in fits:
        print(f"residual scaling slope: {fits['max_residual_l2_slope']:.3f}")
    print(f"sweep complete: {len(rows)} rows, {sum(r['failed'] for r in rows):.0f} failed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gkdvlab",
                                     description="soliton-in-a-varying-medium laboratory")
    parser.add_argument("--version", action="version", version=f"gkdvlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("verify", cmd_verify), ("adiabatic", cmd_adiabatic),
                     ("correction", cmd_correction), ("simulate", cmd_simulate),
                     ("analyze", cmd_analyze), ("sweep", cmd_sweep)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario file")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--threads", type=int, default=1,
                       help="worker count for sweeps (env GKDVLAB_THREADS overrides)")
        p.add_argument("--allow-out-of-theory", action="store_true",
                       help="accept lambda outside [0, lambda0] with a warning")
        if name == "analyze":
            p.add_argument("--run-dir", default=None,
                           help="directory with simulate outputs (default: scenario output dir)")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = parse_config(args.config,
                                allow_out_of_theory=args.allow_out_of_theory)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 2
    return args.func(scenario, args)


if __name__ == "__main__":
    sys.exit(main())
