"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines as they complete.  The slow fixtures (the two full-resolution
stability maps) are shared across the session.
"""

import math
import time

import numpy as np

from rotochain import bessel, configspace, lumped, planner, shape, shooting, stability
from rotochain.params import ChainParams, DimensionlessBVP, ParamPoint

P = ChainParams(length=0.76, linear_density=0.1)

# Probe points for criteria 7(ii) and 8, read off the computed loci:
# (a, offset from locus i) with positive offsets to the unstable right side.
LEFT_PROBES = [(2.0, 1, -0.8), (2.5, 1, -0.8), (3.0, 1, -0.8),
               (2.0, 2, -0.8), (2.5, 2, -0.9)]
LOW_A_PROBES = [ParamPoint(0.3, 3.0), ParamPoint(0.3, 6.0), ParamPoint(0.3, 9.0),
                ParamPoint(0.3, 12.0), ParamPoint(0.5, 5.0)]
RIGHT_PROBES = [(2.0, 1, 0.8), (2.5, 1, 0.8), (3.0, 1, 0.8),
                (2.0, 2, 0.8), (2.5, 2, 0.8)]
SIM_STABLE = [(2.0, 1, -0.8), (2.5, 1, -0.8), (2.5, 2, -0.9)]
SIM_UNSTABLE = [(2.0, 1, 0.8), (2.0, 2, 0.8), (2.5, 1, 0.8)]


def report(num: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {num}: {detail}"


def locus_point(a: float, i: int, offset: float) -> ParamPoint:
    z = shooting.nth_zero(a, i, 25.0)
    return ParamPoint(a, z + offset)


def test_criterion_01_critical_speeds():
    t0 = time.monotonic()
    speeds = configspace.critical_speeds(P, 3)
    elapsed = time.monotonic() - t0
    reported = (4.34, 9.97, 15.64)
    rels = [abs(s - r) / r for s, r in zip(speeds, reported)]
    ok = max(rels) < 1.5e-2 and elapsed < 1.0
    report(1, ok, f"omega_i = {[float(round(s, 3)) for s in speeds]} vs {reported}, "
                  f"max rel err {max(rels):.2%}, {elapsed:.2f}s")


def test_criterion_02_low_amplitude_branch_points():
    rels = []
    for i in range(1, 5):
        z = shooting.nth_zero(1e-4, i, 36.0)
        lam = bessel.branch_length(i)
        rels.append(abs(z - lam) / lam)
    ok = max(rels) < 1e-2
    report(2, ok, f"z_i(1e-4) vs h_i^2/4 for i=1..4, max rel err {max(rels):.2e}")


def test_criterion_03_solution_census():
    t0 = time.monotonic()
    rng = np.random.default_rng(202608)
    lbar_pool = [float(rng.uniform(*win)) for win in
                 [(2.5, 7.0), (8.5, 18.0), (19.5, 30.0)] * 3][:8]
    tables = {lb: shooting.build_counting_table(lb) for lb in lbar_pool}
    case_counts = {k: 0 for k in range(1, 6)}
    checked = 0
    failures = []
    case_cycle = 0
    while checked < 50:
        lb = lbar_pool[checked % len(lbar_pool)]
        tab = tables[lb]
        case = case_cycle % 5 + 1
        case_cycle += 1
        if case == 3 and tab.n < 2:
            case = 2
        r_seq = tab.rbar_seq
        if case == 1:
            rmag = 0.0
        elif case == 2:
            rmag = float(rng.uniform(0.05, 0.95)) * r_seq[-1]
        elif case == 3:
            i = int(rng.integers(0, tab.n - 1))
            rmag = r_seq[i + 1] + float(rng.uniform(0.05, 0.95)) * (r_seq[i] - r_seq[i + 1])
        elif case == 4:
            i = int(rng.integers(0, tab.n))
            rmag = float(r_seq[i])
        else:
            rmag = r_seq[0] * (1.0 + float(rng.uniform(0.1, 1.0)))
        bvp = DimensionlessBVP(rbar=-rmag, lbar=lb)
        sols = shooting.enumerate_solutions(bvp, grid_n=1024)
        want_n = shooting.predicted_count(tab, -rmag)
        want_modes = shooting.predicted_modes(tab, -rmag)
        got_modes = [s.mode for s in sols]
        if len(sols) != want_n or got_modes != want_modes:
            failures.append((lb, rmag, case, want_n, len(sols), want_modes, got_modes))
        case_counts[case] += 1
        checked += 1
    elapsed = time.monotonic() - t0
    ok = not failures and all(v > 0 for v in case_counts.values()) and elapsed < 120
    report(3, ok, f"50 randomized inputs over cases {case_counts}, "
                  f"{len(failures)} mismatches, {elapsed:.0f}s"
                  + (f"; first failure {failures[0]}" if failures else ""))


def test_criterion_04_inextensibility_and_tension():
    worst_inext = 0.0
    min_tension = math.inf
    worst_f0 = 0.0
    a_grid = (np.arange(20) + 0.5) * 5.0 / 20
    lbar_grid = (np.arange(20) + 0.5) * 40.0 / 20
    for lbar in lbar_grid:
        omega = math.sqrt(lbar * P.gravity / P.length)
        sgrid, U, UP = shape.integrate_dense(a_grid, float(lbar))
        for k, a in enumerate(a_grid):
            curve = shape.ShapeCurve(sbar=sgrid, u=U[k], uprime=UP[k],
                                     a=float(a), lbar=float(lbar))
            phys = shape.recover_physical(curve, P, omega)
            worst_inext = max(worst_inext, float(np.max(np.abs(
                phys.rho_prime ** 2 + phys.z_prime ** 2 - 1.0))))
            min_tension = min(min_tension, float(phys.tension.min()))
            worst_f0 = max(worst_f0, abs(phys.tension[0]))
    ok = worst_inext <= 1e-8 and min_tension >= 0.0 and worst_f0 == 0.0
    report(4, ok, f"20x20 grid: max|rho'^2+z'^2-1| = {worst_inext:.2e}, "
                  f"min F = {min_tension:.2e}, max |F(0)| = {worst_f0:.2e}")


def test_criterion_05_tip_mass_reduction():
    rng = np.random.default_rng(11)
    exact = True
    for _ in range(10):
        a = float(rng.uniform(0.2, 4.0))
        lbar = float(rng.uniform(1.0, 30.0))
        base = shape.integrate_shape(a, lbar)
        tipped = shape.integrate_shape(a, lbar, tip_offset=0.0)
        if abs(base.uprime[-1] - tipped.uprime[-1]) > 1e-12:
            exact = False
    heavy = ChainParams(length=0.76, linear_density=0.1, tip_mass=0.03)
    omega = 9.0
    t0 = heavy.tip_mass * omega ** 2 / (heavy.linear_density * heavy.gravity)
    lbar = heavy.length * omega ** 2 / heavy.gravity
    curve = shape.integrate_shape(1.4, lbar, tip_offset=t0)
    bc_exact = curve.u[0] == 1.4 * t0 and curve.uprime[0] == 1.4
    phys = shape.recover_physical(curve, heavy, omega)
    f0z0 = phys.tension[0] * phys.z_prime[0]
    rel = abs(f0z0 - heavy.tip_mass * heavy.gravity) / (heavy.tip_mass * heavy.gravity)
    ok = exact and bc_exact and rel < 1e-6
    report(5, ok, f"M=0 path bit-identical: {exact}; u(0)=a*M*w^2/(mu*g) exact: "
                  f"{bc_exact}; F(0)z'(0) vs Mg rel err {rel:.2e}")


def test_criterion_06_aero_equilibrium_shift():
    t0 = time.monotonic()
    point = ParamPoint(2.0, 10.0)
    still = lumped.equilibrium_shape(point, P,
                                     lumped.LumpedChain.from_params(P, n_masses=10))
    windy = lumped.equilibrium_shape(point, P,
                                     lumped.LumpedChain.from_params(P, n_masses=10,
                                                                    aero=True))
    shift = np.linalg.norm(windy.state.pos - still.state.pos, axis=1)
    elapsed = time.monotonic() - t0
    ok = shift.max() < 1e-3 and elapsed < 10.0
    report(6, ok, f"max per-mass equilibrium shift {shift.max() * 1e3:.3f} mm "
                  f"({shift.max() / P.length:.2%} of L), {elapsed:.1f}s")


def test_criterion_07_stability_map_signs(noaero_map, aero_template):
    t0 = time.monotonic()
    lam_valid = noaero_map.lam[noaero_map.valid]
    min_noaero = float(lam_valid.min())
    part_i = min_noaero >= -1e-4

    probes_ok = True
    details = []
    for a, i, off in LEFT_PROBES:
        lam = stability.stability_point(locus_point(a, i, off), P, aero_template).lambda_max
        probes_ok &= lam < 0
        details.append(f"L{a},{i}:{lam:+.1e}")
    for pt in LOW_A_PROBES:
        lam = stability.stability_point(pt, P, aero_template).lambda_max
        probes_ok &= lam < 0
        details.append(f"low{pt.a},{pt.lbar}:{lam:+.1e}")
    for a, i, off in RIGHT_PROBES:
        lam = stability.stability_point(locus_point(a, i, off), P, aero_template).lambda_max
        probes_ok &= lam > 0
        details.append(f"R{a},{i}:{lam:+.1e}")
    probe_time = time.monotonic() - t0
    ok = part_i and probes_ok and probe_time < 60.0
    report(7, ok, f"aero-off min lambda over valid cells {min_noaero:.2e} >= -1e-4; "
                  f"15 aero probes signed correctly in {probe_time:.0f}s")


def _perturbed_envelope_ratio(point: ParamPoint, chain: lumped.LumpedChain):
    eq = lumped.equilibrium_shape(point, P, chain)
    lam = stability.lambda_max(stability.jacobian(eq.chain, eq.state))
    state = eq.state.copy()
    state.pos[0] += np.array([0.0, 0.01, 0.0])
    sched = lumped.ControlSchedule.constant(eq.attach_radius, eq.chain.omega, 3.2)
    try:
        traj = lumped.simulate(state, eq.chain, sched)
    except lumped.BlowUpError:
        return lam, math.inf
    dev = np.linalg.norm(traj.pos[:, 0, :] - eq.state.pos[0], axis=1)
    period = 2 * math.pi / eq.chain.omega
    def env(tc):
        m = (traj.t > tc - period) & (traj.t <= tc)
        return float(dev[m].max())
    return lam, env(3.0) / env(0.5)


def test_criterion_08_linearization_vs_simulation():
    t0 = time.monotonic()
    smoke = lumped.LumpedChain.from_params(P, n_masses=10, stiffness=8e7 * 1e-2,
                                           aero=True)
    rows = []
    ok = True
    for a, i, off in SIM_STABLE:
        lam, ratio = _perturbed_envelope_ratio(locus_point(a, i, off), smoke)
        ok &= lam < 0 and ratio < 1.0
        rows.append(f"stable({a},{i}): lam={lam:+.1e} env ratio={ratio:.2f}")
    for a, i, off in SIM_UNSTABLE:
        lam, ratio = _perturbed_envelope_ratio(locus_point(a, i, off), smoke)
        ok &= lam > 0 and ratio > 1.0
        rows.append(f"unstable({a},{i}): lam={lam:+.1e} env ratio={ratio:.2f}")
    smoke_time = time.monotonic() - t0
    ok &= smoke_time < 300.0

    # full-stiffness spot check on one stable/unstable pair
    full = lumped.LumpedChain.from_params(P, n_masses=10, stiffness=8e7, aero=True)
    lam_s, ratio_s = _perturbed_envelope_ratio(locus_point(3.0, 1, -0.8), full)
    lam_u, ratio_u = _perturbed_envelope_ratio(locus_point(2.0, 1, 0.8), full)
    ok &= lam_s < 0 and ratio_s < 1.0 and lam_u > 0 and ratio_u > 1.0
    rows.append(f"full-k pair: stable ratio={ratio_s:.2f}, unstable ratio={ratio_u:.2f}")
    report(8, ok, f"{'; '.join(rows)}; smoke {smoke_time:.0f}s")


def test_criterion_09_end_to_end_transition(aero_map):
    targets = [(0, ParamPoint(0.5, shooting.nth_zero(0.5, 1, 10.0) - 0.35)),
               (1, ParamPoint(0.8, shooting.nth_zero(0.8, 2, 20.0) - 0.5)),
               (2, ParamPoint(1.2, shooting.nth_zero(1.2, 3, 30.0) - 0.8))]
    plan = planner.plan_mode_sequence(targets, aero_map, P, from_rest=True,
                                      seconds_per_unit=2.5, tip_speed=0.004)
    validation = planner.validate_plan(plan, aero_map)

    # the forbidden shortcut: direct mode-1 -> mode-2 at a = 3
    p1 = planner.mode_target(1, 3.0, clearance=0.8)
    p2 = planner.mode_target(2, 3.0, clearance=0.8)
    direct = planner.straight_line_plan(p1, p2, P, aero_map)
    direct_report = planner.validate_plan(direct, aero_map)

    rows = planner.emit_control_history(plan, rate=20.0)
    chain = lumped.LumpedChain.from_params(P, n_masses=10, stiffness=8e7 * 1e-3,
                                           aero=True)
    sched = lumped.ControlSchedule.from_rows(rows)
    eq0 = lumped.equilibrium_shape(ParamPoint(max(plan.path[0, 1], 1e-9),
                                              plan.path[0, 2]), P, chain)
    traj = lumped.simulate(eq0.state, chain, sched)

    # tip deviation from the quasi-static prediction, modulo the mirror
    # identification of configurations
    mirror = np.diag([-1.0, -1.0, 1.0])
    path = plan.path
    dev = np.empty(traj.t.size)
    for k, t in enumerate(traj.t):
        a = float(np.interp(t, path[:, 0], path[:, 1]))
        lb = float(np.interp(t, path[:, 0], path[:, 2]))
        eq = lumped.equilibrium_shape(ParamPoint(max(a, 1e-9), lb), P, chain)
        tip = eq.state.pos[0]
        dev[k] = min(np.linalg.norm(traj.pos[k, 0] - tip),
                     np.linalg.norm(traj.pos[k, 0] - mirror @ tip))
    max_dev = float(dev.max())

    # final mode: crossings of the shape averaged over one rotation period
    omega_end = rows[-1, 2]
    period = 2 * math.pi / omega_end
    mask = traj.t >= traj.t[-1] - period
    mean_shape = traj.pos[mask].mean(axis=0)
    attach_x = rows[-1, 3] * rows[-1, 1] if rows.shape[1] > 3 else rows[-1, 1]
    final_mode = lumped.count_axis_crossings(mean_shape, (attach_x, 0.0, 0.0),
                                             dead_band=0.003 * P.length)

    ok = (validation.ok and len(direct_report.violations) >= 1
          and max_dev <= 0.15 * P.length and final_mode == 2)
    report(9, ok, f"plan {plan.duration:.0f}s validates with "
                  f"{len(validation.violations)} violations; direct a=3 path has "
                  f"{len(direct_report.violations)} violations; closed loop max tip "
                  f"deviation {max_dev / P.length:.1%} of L; final mode {final_mode}")


def test_criterion_10_numerical_hygiene():
    vals = {}
    for k in (256, 512, 1024, 2048):
        _, w = shape.integrate_endpoints([2.0], 10.0, step=10.0 / k)
        vals[k] = w[0]
    e1 = abs(vals[256] - vals[512])
    e2 = abs(vals[512] - vals[1024])
    e3 = abs(vals[1024] - vals[2048])
    rk4_orders = (math.log2(e1 / e2), math.log2(e2 / e3))
    rk4_ok = all(3.7 < o < 4.3 for o in rk4_orders)

    tpl = lumped.LumpedChain.from_params(P, n_masses=4, aero=True)
    eq = lumped.equilibrium_shape(ParamPoint(1.5, 8.0), P, tpl)
    length = tpl.total_length
    js = {s: stability.jacobian(eq.chain, eq.state, h_pos=s * length,
                                h_vel=s * math.sqrt(9.81 * length))
          for s in (4e-3, 2e-3, 1e-3)}
    j1 = np.linalg.norm(js[4e-3] - js[2e-3])
    j2 = np.linalg.norm(js[2e-3] - js[1e-3])
    fd_order = math.log2(j1 / j2)
    fd_ok = 1.7 < fd_order < 2.3

    plus = shape.integrate_shape(1.7, 12.0)
    minus = shape.integrate_shape(-1.7, 12.0)
    mirror_err = max(float(np.max(np.abs(plus.u + minus.u))),
                     float(np.max(np.abs(plus.uprime + minus.uprime))))
    mirror_ok = mirror_err <= 1e-12

    ok = rk4_ok and fd_ok and mirror_ok
    report(10, ok, f"RK4 orders {tuple(round(o, 2) for o in rk4_orders)}; "
                   f"Jacobian FD order {fd_order:.2f}; mirror max err {mirror_err:.1e}")
