"""Command-line front end.

Subcommands: solve, table, surface, loci, stability-map, plan, simulate.
Structured results go to stdout as JSON, arrays as CSV files, surfaces as
gnuplot-ready blocks; there are no plotting dependencies.  Exit codes:
0 success, 1 numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import configspace, lumped, planner, shape, shooting, stability
from .params import (ChainParams, ControlInput, ParamPoint, load_chain_config,
                     nondimensionalize)

DEFAULT_CHAIN = ChainParams(length=0.76, linear_density=0.1)


def _chain_params(args) -> ChainParams:
    if args.config:
        return load_chain_config(args.config)
    return DEFAULT_CHAIN


def _out_dir(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_common(sub):
    sub.add_argument("--config", help="chain parameter JSON file")
    sub.add_argument("--out", help="output directory (or file, where noted)")
    sub.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    sub.add_argument("--seed", type=int, default=0, help="seed for randomized options")


def cmd_solve(args) -> int:
    params = _chain_params(args)
    if args.omega <= 0:
        print("solve: --omega must be > 0 (no uniform rotation at rest)", file=sys.stderr)
        return 2
    if args.r < 0:
        print("solve: --r must be >= 0", file=sys.stderr)
        return 2
    bvp = nondimensionalize(params, ControlInput(radius=args.r, omega=args.omega))
    sols = shooting.enumerate_solutions(bvp, a_max=args.a_max, grid_n=args.grid_n)
    records = []
    for s in sols:
        rho0 = s.a * params.gravity / args.omega ** 2
        records.append({"a": round(s.a, 12), "mode": s.mode,
                        "residual": float(f"{s.residual:.3e}"),
                        "rho0_m": round(rho0, 12)})
    print(json.dumps(records, indent=2, sort_keys=True))
    if args.dump_shapes:
        out = Path(args.dump_shapes)
        out.mkdir(parents=True, exist_ok=True)
        for k, s in enumerate(sols):
            phys = shape.recover_physical(s.curve, params, args.omega)
            phys.to_csv(out / f"shape_{k:03d}.csv")
    return 0


def cmd_table(args) -> int:
    params = _chain_params(args)
    speeds = configspace.critical_speeds(params, args.n_speeds)
    print(f"critical speeds for L = {params.length} m (rad/s):")
    for i, w in enumerate(speeds, start=1):
        print(f"  omega_{i} = {w:.4f}")
    if args.lbar is not None:
        tab = shooting.build_counting_table(args.lbar)
        print(f"counting table at lbar = {args.lbar}: n = {tab.n}")
        for i in range(tab.n):
            print(f"  i={i + 1}  a_i = {tab.a_seq[i]:.6f}   rbar_i = {tab.rbar_seq[i]:.6f}")
        if not tab.rbar_decreasing:
            print("  warning: hump heights not strictly decreasing")
    return 0


def cmd_surface(args) -> int:
    surf = configspace.sample_surface(a_range=(args.a_min, args.a_max),
                                      lbar_max=args.lbar_max, na=args.na, ns=args.ns)
    if args.out:
        surf.to_gnuplot(args.out)
        print(f"surface written to {args.out}")
    else:
        surf.write_gnuplot(sys.stdout)
    return 0


def cmd_loci(args) -> int:
    a_samples = np.linspace(args.a_min, args.a_max, args.na)
    blocks = []
    for i in range(1, args.max_mode + 1):
        blocks.append(configspace.zero_radius_locus(i, a_samples, lbar_max=args.lbar_max))
    fh = open(args.out, "w") if args.out else sys.stdout
    try:
        for locus in blocks:
            locus.write_gnuplot(fh)
    finally:
        if args.out:
            fh.close()
            print(f"{args.max_mode} loci written to {args.out}")
    return 0


def cmd_stability_map(args) -> int:
    params = _chain_params(args)
    template = lumped.LumpedChain.from_params(
        params, n_masses=args.n_masses, stiffness=8e7 * args.stiffness_scale,
        aero=not args.no_aero)
    smap = stability.stability_map(params, template, a_max=args.a_max,
                                   lbar_max=args.lbar_max, na=args.na, nl=args.nl,
                                   threads=args.threads)
    out = _out_dir(args)
    csv_path = out / "stability.csv"
    smap.to_csv(csv_path)
    with open(out / "stability_pm3d.dat", "w") as fh:
        smap.write_pm3d(fh)
    print(json.dumps({"cells": int(smap.valid.size),
                      "invalid_fraction": round(smap.fraction_invalid, 6),
                      "lambda_min": float(f"{np.nanmin(np.where(smap.valid, smap.lam, np.nan)):.6g}"),
                      "lambda_max": float(f"{np.nanmax(np.where(smap.valid, smap.lam, np.nan)):.6g}"),
                      "csv": str(csv_path)}, sort_keys=True))
    if smap.fraction_invalid > 0.05:
        print("stability-map: more than 5% of cells invalid", file=sys.stderr)
        return 1
    return 0


def cmd_plan(args) -> int:
    params = _chain_params(args)
    if args.map:
        smap = stability.StabilityMap.from_csv(args.map)
    else:
        template = lumped.LumpedChain.from_params(params, n_masses=args.n_masses,
                                                  stiffness=8e7, aero=True)
        smap = stability.stability_map(params, template, na=args.map_na,
                                       nl=args.map_nl, threads=args.threads)
    try:
        if args.from_mode == "rest":
            goal = int(args.to_mode)
            targets = [(m, planner.mode_target(m, args.target_a, args.clearance))
                       for m in range(0, goal + 1)]
            plan = planner.plan_mode_sequence(targets, smap, params,
                                              from_rest=True, a_low=args.a_low,
                                              r_min=args.r_min,
                                              seconds_per_unit=args.seconds_per_unit,
                                              rate=args.plan_rate,
                                              tip_speed=args.tip_speed)
        else:
            i, j = int(args.from_mode), int(args.to_mode)
            start = planner.mode_target(i, args.target_a, args.clearance)
            goal = planner.mode_target(j, args.target_a, args.clearance)
            plan = planner.plan_transition(i, j, start, goal, smap, params,
                                           a_low=args.a_low,
                                           seconds_per_unit=args.seconds_per_unit,
                                           rate=args.plan_rate,
                                           tip_speed=args.tip_speed)
    except (planner.PlanInfeasibleError, ValueError) as exc:
        print(f"plan: {exc}", file=sys.stderr)
        return 1
    report = planner.validate_plan(plan, smap)
    rows = planner.emit_control_history(plan, rate=args.rate, r_min=args.r_min)
    out = _out_dir(args)
    csv_path = out / "control_history.csv"
    planner.write_control_csv(rows, csv_path)
    print(json.dumps({"duration_s": round(plan.duration, 3),
                      "samples": int(rows.shape[0]),
                      "violations": len(report.violations),
                      "margin_cells": round(plan.margin, 3),
                      "waypoints": [[round(w.a, 4), round(w.lbar, 4)]
                                    for w in plan.waypoints],
                      "csv": str(csv_path)}, sort_keys=True))
    return 0 if report.ok else 1


def cmd_simulate(args) -> int:
    params = _chain_params(args)
    schedule = lumped.ControlSchedule.from_csv(args.history)
    chain = lumped.LumpedChain.from_params(params, n_masses=args.n_masses,
                                           stiffness=8e7 * args.stiffness_scale,
                                           aero=not args.no_aero)
    r0 = schedule.radius[0]
    w0 = schedule.omega[0]
    lbar0 = params.length * w0 ** 2 / params.gravity
    if args.start_a is not None:
        a0 = args.start_a
    else:
        bvp = nondimensionalize(params, ControlInput(radius=r0, omega=w0))
        sols = shooting.enumerate_solutions(bvp)
        if not sols:
            print("simulate: no uniform rotation matches the first control row; "
                  "pass --start-a", file=sys.stderr)
            return 1
        a0 = min(s.a for s in sols)
    eq = lumped.equilibrium_shape(ParamPoint(a0, lbar0), params, chain)
    state = eq.state
    if args.perturb_cm:
        rng = np.random.default_rng(args.seed)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        state = state.copy()
        state.pos[0] += 0.01 * args.perturb_cm * direction
    try:
        traj = lumped.simulate(state, eq.chain, schedule,
                               duration=args.duration, dt=args.dt)
    except lumped.BlowUpError as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return 1
    out = _out_dir(args)
    traj_path = out / "trajectory.csv"
    traj.to_csv(traj_path)
    attach_x, w_end, _ = schedule.sample(np.array([traj.t[-1]]))
    period = 2 * np.pi / max(w_end[0], 1e-9)
    mask = traj.t >= traj.t[-1] - period
    mean_shape = traj.pos[mask].mean(axis=0)
    crossings = lumped.count_axis_crossings(mean_shape, (attach_x[0], 0.0, 0.0),
                                            dead_band=0.003 * params.length)
    print(json.dumps({"t_end": round(float(traj.t[-1]), 6),
                      "tip_end_m": [round(float(v), 6) for v in traj.pos[-1, 0]],
                      "mode_mean_shape": int(crossings),
                      "csv": str(traj_path)}, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rotochain",
                                 description="uniform rotations of a hanging chain: "
                                             "solutions, stability maps, transitions")
    subs = ap.add_subparsers(dest="command", required=True)

    s = subs.add_parser("solve", help="enumerate rotations for a control input")
    _add_common(s)
    s.add_argument("--r", type=float, required=True, help="attachment radius [m]")
    s.add_argument("--omega", type=float, required=True, help="angular speed [rad/s]")
    s.add_argument("--a-max", type=float, default=None)
    s.add_argument("--grid-n", type=int, default=2048)
    s.add_argument("--dump-shapes", help="directory for physical shape CSVs")
    s.set_defaults(func=cmd_solve)

    s = subs.add_parser("table", help="critical speeds and solution-count thresholds")
    _add_common(s)
    s.add_argument("--lbar", type=float, default=None)
    s.add_argument("--n-speeds", type=int, default=3)
    s.set_defaults(func=cmd_table)

    s = subs.add_parser("surface", help="configuration-space surface, gnuplot blocks")
    _add_common(s)
    s.add_argument("--a-min", type=float, default=0.05)
    s.add_argument("--a-max", type=float, default=5.0)
    s.add_argument("--lbar-max", type=float, default=40.0)
    s.add_argument("--na", type=int, default=200)
    s.add_argument("--ns", type=int, default=400)
    s.set_defaults(func=cmd_surface)

    s = subs.add_parser("loci", help="zero-radius loci, gnuplot blocks")
    _add_common(s)
    s.add_argument("--max-mode", type=int, required=True)
    s.add_argument("--a-min", type=float, default=0.02)
    s.add_argument("--a-max", type=float, default=5.0)
    s.add_argument("--na", type=int, default=60)
    s.add_argument("--lbar-max", type=float, default=40.0)
    s.set_defaults(func=cmd_loci)

    s = subs.add_parser("stability-map", help="lambda_max over the parameter box")
    _add_common(s)
    s.add_argument("--no-aero", action="store_true")
    s.add_argument("--a-max", type=float, default=5.0)
    s.add_argument("--lbar-max", type=float, default=40.0)
    s.add_argument("--na", type=int, default=100)
    s.add_argument("--nl", type=int, default=160)
    s.add_argument("--n-masses", type=int, default=10)
    s.add_argument("--stiffness-scale", type=float, default=1.0)
    s.set_defaults(func=cmd_stability_map)

    s = subs.add_parser("plan", help="stable transition between rotation modes")
    _add_common(s)
    s.add_argument("--from-mode", required=True, help="integer mode or 'rest'")
    s.add_argument("--to-mode", type=int, required=True)
    s.add_argument("--target-a", type=float, default=0.8)
    s.add_argument("--clearance", type=float, default=0.8)
    s.add_argument("--a-low", type=float, default=planner.DEFAULT_A_LOW)
    s.add_argument("--r-min", type=float, default=planner.DEFAULT_R_MIN)
    s.add_argument("--rate", type=float, default=20.0, help="emitted samples per second")
    s.add_argument("--plan-rate", type=float, default=planner.DEFAULT_SAMPLE_RATE)
    s.add_argument("--seconds-per-unit", type=float, default=planner.DEFAULT_SECONDS_PER_UNIT)
    s.add_argument("--tip-speed", type=float, default=planner.DEFAULT_TIP_SPEED)
    s.add_argument("--map", help="reuse a stability-map CSV")
    s.add_argument("--map-na", type=int, default=100)
    s.add_argument("--map-nl", type=int, default=160)
    s.add_argument("--n-masses", type=int, default=10)
    s.set_defaults(func=cmd_plan)

    s = subs.add_parser("simulate", help="drive the lumped chain with a control history")
    _add_common(s)
    s.add_argument("--history", required=True, help="control history CSV")
    s.add_argument("--duration", type=float, default=None)
    s.add_argument("--dt", type=float, default=None)
    s.add_argument("--n-masses", type=int, default=10)
    s.add_argument("--stiffness-scale", type=float, default=1.0)
    s.add_argument("--no-aero", action="store_true")
    s.add_argument("--start-a", type=float, default=None)
    s.add_argument("--perturb-cm", type=float, default=0.0)
    s.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (shooting.ConvergenceError, shooting.ZeroCountError,
            lumped.SingularConfigurationError, lumped.EquilibriumError,
            RuntimeError) as exc:
        print(f"rotochain: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"rotochain: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
