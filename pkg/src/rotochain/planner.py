"""Quasi-static transition planning between rotation modes.

Crossing from mode i to mode j means crossing zero-radius loci, and away
from the low-amplitude regime the neighborhoods of the loci are unstable.
The only reliable passage is the low-amplitude corridor, so a transition
runs in three phases:

    1. descend from the start point to the corridor (a = a_low), threading
       the stable region of the map;
    2. traverse the corridor to below the goal's home region, crossing the
       intervening loci where they are harmless;
    3. ascend from the corridor to the goal point, again through stable
       cells only.

The descent and ascent are routed on the aerodynamic stability map itself:
Dijkstra over the stable cells (eroded by one cell so that the bilinear
interpolation used for validation never touches an unstable cell), then
line-of-sight shortcutting where the straightened segment still passes the
exact per-sample check.  The corridor leg slides along a = a_low and is
exempt from map checks: down there the configuration is effectively unique
and the loci are crossed the way the physical strategy crosses them.

Control samples follow from the path by construction: omega =
sqrt(lbar g / L), and the attachment radius is read off the shape
integration, r = |u'_a(lbar)| g / omega^2, so the emitted controls realize
exactly the intended branch.  The radius is clamped to r_min on the
corridor: exactly zero cannot impose the rotation speed on the chain.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .bessel import branch_length
from .configspace import classify_mode
from .params import ChainParams, ParamPoint
from .shape import integrate_dense, uprime_at_each
from .stability import StabilityMap

DEFAULT_A_LOW = 0.15
DEFAULT_R_MIN = 1e-3  # m
DEFAULT_SECONDS_PER_UNIT = 8.0
DEFAULT_SAMPLE_RATE = 10.0  # Hz
DEFAULT_TIP_SPEED = 0.01  # m/s of free-end radius sweep on climb legs


class PlanInfeasibleError(RuntimeError):
    """No stable path; carries the blocking sample or cell when known."""

    def __init__(self, message, blocking=None):
        super().__init__(message)
        self.blocking = blocking


@dataclass(frozen=True)
class TransitionPlan:
    """Waypoint path in (a, lbar) plus the sampled control history.

    ``path`` columns are (t, a, lbar); ``control_history`` columns are
    (t, r, omega); ``corridor`` flags samples riding the low-amplitude
    corridor (their stability is granted by the corridor, not the map);
    ``margin`` is the minimum distance from non-corridor samples to an
    unstable map cell, in cell units (inf when none are near)."""

    waypoints: tuple
    path: np.ndarray
    control_history: np.ndarray
    corridor: np.ndarray
    margin: float
    a_low: float
    params: ChainParams

    @property
    def duration(self) -> float:
        return float(self.control_history[-1, 0]) if self.control_history.size else 0.0


@dataclass(frozen=True)
class PlanReport:
    """validate_plan output: per-sample looked-up lambda_max and violations
    (samples outside the corridor with lambda_max >= 0 or off the map)."""

    n_samples: int
    violations: list
    min_margin: float
    lambda_values: np.ndarray

    @property
    def ok(self) -> bool:
        return not self.violations


def locus_lbar(i: int, a_arr, lbar_hi: float, step: float | None = None) -> np.ndarray:
    """z_i(a) for a batch of slopes: the i-th zero of u', linearly
    interpolated from a dense sweep (plenty for planning geometry)."""
    a_arr = np.atleast_1d(np.asarray(a_arr, dtype=float))
    sgrid, U, UP = integrate_dense(a_arr, lbar_hi, step=step or lbar_hi / 2048)
    flips = (UP[:, :-1] * UP[:, 1:] < 0).astype(int)
    counts = np.cumsum(flips, axis=1)
    if np.any(counts[:, -1] < i):
        raise ValueError(f"zero {i} of u' lies beyond lbar = {lbar_hi:.6g} for some slopes")
    k = np.argmax(counts == i, axis=1)
    rows = np.arange(a_arr.size)
    up0 = UP[rows, k]
    up1 = UP[rows, k + 1]
    return sgrid[k] + (sgrid[k + 1] - sgrid[k]) * up0 / (up0 - up1)


def mode_target(mode: int, a_target: float, clearance: float = 0.8) -> ParamPoint:
    """A comfortable point of rotation mode ``mode`` at amplitude a_target:
    ``clearance`` left of the next zero-radius locus, where the
    aerodynamically damped chain is stable."""
    z_next = float(locus_lbar(mode + 1, [a_target],
                              lbar_hi=branch_length(mode + 1) * 3.0 + 4.0 * a_target)[0])
    return ParamPoint(a_target, z_next - clearance)


def _radii_for(a_arr, lbar_arr, params: ChainParams, step=None):
    """Attachment radii realizing (a, lbar) samples, via one batched sweep."""
    a_arr = np.asarray(a_arr, dtype=float)
    lbar_arr = np.asarray(lbar_arr, dtype=float)
    lbar_max = float(np.max(lbar_arr))
    sgrid, U, UP = integrate_dense(a_arr, lbar_max, step=step)
    up_end = uprime_at_each(sgrid, U, UP, a_arr, 0.0, lbar_arr)
    omega = np.sqrt(lbar_arr * params.gravity / params.length)
    return np.abs(up_end) * params.gravity / omega ** 2, omega


# ----------------------------------------------------------------------
# Routing over the stability map.
# ----------------------------------------------------------------------

def _stable_cells(smap: StabilityMap) -> np.ndarray:
    return smap.valid & (smap.lam < 0)


def _eroded(ok: np.ndarray) -> np.ndarray:
    """Cells whose full 3x3 neighborhood is stable (borders drop out)."""
    padded = np.zeros((ok.shape[0] + 2, ok.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = ok
    safe = np.ones_like(ok)
    for di in (0, 1, 2):
        for dj in (0, 1, 2):
            safe &= padded[di:di + ok.shape[0], dj:dj + ok.shape[1]]
    return safe


def _segment_ok(smap: StabilityMap, p0, p1, a_low: float) -> bool:
    """True when every quarter-cell sample of the segment passes the same
    bilinear criterion the validator applies (corridor samples exempt)."""
    da = smap.a_values[1] - smap.a_values[0]
    dl = smap.lbar_values[1] - smap.lbar_values[0]
    n = max(int(4 * math.hypot((p1[0] - p0[0]) / da, (p1[1] - p0[1]) / dl)), 2)
    for f in np.linspace(0.0, 1.0, n):
        a = p0[0] + f * (p1[0] - p0[0])
        lb = p0[1] + f * (p1[1] - p0[1])
        if a <= a_low * (1 + 1e-9):
            continue
        if not smap.lookup(ParamPoint(a, lb)) < 0:
            return False
    return True


def _route_to_corridor(smap: StabilityMap, point: ParamPoint, a_low: float):
    """Polyline of (a, lbar) vertices from ``point`` down to the corridor.

    Dijkstra over eroded stable cells from the point's cell to any cell of
    the lowest non-corridor row whose bilinear support column is stable, then
    line-of-sight shortcutting.  Returns vertices ending at (a_low, lbar_td).
    """
    av, lv = smap.a_values, smap.lbar_values
    da, dl = av[1] - av[0], lv[1] - lv[0]
    ok = _stable_cells(smap)
    safe = _eroded(ok)

    i0 = int(np.clip(round((point.a - av[0]) / da), 0, av.size - 1))
    j0 = int(np.clip(round((point.lbar - lv[0]) / dl), 0, lv.size - 1))
    if not ok[i0, j0]:
        raise PlanInfeasibleError(
            f"point (a={point.a:.3f}, lbar={point.lbar:.3f}) sits in an unstable "
            f"map cell", blocking=(point.a, point.lbar, float(smap.lam[i0, j0])))
    safe[i0, j0] = True  # the endpoint cell itself was vetted above

    r_low = int(np.searchsorted(av, a_low))  # first row above the corridor
    # touchdown columns: dropping from this row to a_low keeps the bilinear
    # support stable (rows r_low-1..r_low, columns j..j+1)
    r_lo0 = max(r_low - 1, 0)
    goal_cols = np.nonzero(ok[r_lo0] & ok[r_low]
                           & np.append(ok[r_lo0, 1:] & ok[r_low, 1:], False))[0]
    if goal_cols.size == 0:
        raise PlanInfeasibleError("no stable touchdown column next to the corridor")
    goals = {(r_low, int(j)) for j in goal_cols}

    moves = [(di, dj, math.hypot(di * da, dj * dl))
             for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)]
    dist = {(i0, j0): 0.0}
    prev = {}
    heap = [(0.0, (i0, j0))]
    found = None
    while heap:
        d, node = heapq.heappop(heap)
        if d > dist.get(node, math.inf):
            continue
        if node in goals:
            found = node
            break
        i, j = node
        for di, dj, cost in moves:
            ni, nj = i + di, j + dj
            if not (0 <= ni < av.size and 0 <= nj < lv.size):
                continue
            if not (safe[ni, nj] or (ni, nj) in goals):
                continue
            nd = d + cost
            if nd < dist.get((ni, nj), math.inf):
                dist[(ni, nj)] = nd
                prev[(ni, nj)] = node
                heapq.heappush(heap, (nd, (ni, nj)))
    if found is None:
        raise PlanInfeasibleError(
            f"no stable route from (a={point.a:.3f}, lbar={point.lbar:.3f}) "
            f"to the corridor")

    cells = [found]
    while cells[-1] != (i0, j0):
        cells.append(prev[cells[-1]])
    cells.reverse()  # point cell ... touchdown cell
    verts = [(point.a, point.lbar)]
    verts += [(av[i], lv[j]) for i, j in cells[1:]]
    # shortcut: greedily jump to the furthest vertex whose straight segment
    # still passes the exact validation criterion
    out = [verts[0]]
    k = 0
    while k < len(verts) - 1:
        nxt = k + 1
        for cand in range(len(verts) - 1, k, -1):
            if _segment_ok(smap, verts[k], verts[cand], a_low):
                nxt = cand
                break
        out.append(verts[nxt])
        k = nxt
    td_lbar = out[-1][1]
    out.append((a_low, td_lbar))
    return out


def _polyline_samples(verts, rate: float, t0: float, duration: float):
    """Time-parameterized samples along a polyline (uniform path speed)."""
    verts = np.asarray(verts, dtype=float)
    seg = np.hypot(np.diff(verts[:, 0]), np.diff(verts[:, 1]))
    s_cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(s_cum[-1])
    n = max(int(round(duration * rate)), 2)
    frac = np.linspace(0.0, 1.0, n)
    s = frac * total
    a = np.interp(s, s_cum, verts[:, 0])
    lbar = np.interp(s, s_cum, verts[:, 1])
    return t0 + frac * duration, a, lbar


def _path_length(verts) -> float:
    verts = np.asarray(verts, dtype=float)
    return float(np.sum(np.hypot(np.diff(verts[:, 0]), np.diff(verts[:, 1]))))


def _climb_duration(verts, params: ChainParams, seconds_per_unit: float,
                    tip_speed: float) -> float:
    """Quasi-static duration of a climb leg.

    Parameter-path pacing alone badly under-paces climbs whose free-end
    radius rho0 = a L / lbar sweeps a long arc (the chain's angular momentum
    can only be pumped through the small attachment offset), so climbs are
    paced by tip excursion at ``tip_speed`` with the per-unit rule as a
    floor."""
    verts = np.asarray(verts, dtype=float)
    rho0 = verts[:, 0] * params.length / verts[:, 1]
    excursion = float(np.sum(np.abs(np.diff(rho0))))
    return max(seconds_per_unit * _path_length(verts), excursion / tip_speed, 4.0)


def _assemble_plan(waypoints, seg_t, seg_a, seg_lbar, seg_corridor,
                   params: ChainParams, smap: StabilityMap | None,
                   a_low: float, check: bool) -> TransitionPlan:
    t = np.concatenate(seg_t)
    a = np.concatenate(seg_a)
    lbar = np.concatenate(seg_lbar)
    corridor = np.concatenate(seg_corridor)
    keep = np.concatenate([[True], np.diff(t) > 1e-12])
    t, a, lbar, corridor = t[keep], a[keep], lbar[keep], corridor[keep]

    radii, omega = _radii_for(a, lbar, params)
    path = np.column_stack([t, a, lbar])
    history = np.column_stack([t, radii, omega])

    margin = float("inf")
    if smap is not None:
        lam = np.array([smap.lookup(ParamPoint(ai, li)) for ai, li in zip(a, lbar)])
        outside = ~corridor
        if check:
            bad = outside & ~(lam < 0)
            if np.any(bad):
                k = int(np.nonzero(bad)[0][0])
                raise PlanInfeasibleError(
                    f"sample at t={t[k]:.2f}s, (a, lbar)=({a[k]:.3f}, {lbar[k]:.3f}) "
                    f"sits in an unstable cell (lambda_max={lam[k]:.3g})",
                    blocking=(a[k], lbar[k], lam[k]))
        cells = smap.unstable_cells()
        if cells.size and np.any(outside):
            da = smap.a_values[1] - smap.a_values[0]
            dl = smap.lbar_values[1] - smap.lbar_values[0]
            d = np.hypot((a[outside, None] - cells[None, :, 0]) / da,
                         (lbar[outside, None] - cells[None, :, 1]) / dl)
            margin = float(d.min())
    return TransitionPlan(waypoints=tuple(waypoints), path=path,
                          control_history=history, corridor=corridor,
                          margin=margin, a_low=a_low, params=params)


def plan_transition(start_mode: int, goal_mode: int, start_point: ParamPoint,
                    goal_point: ParamPoint, smap: StabilityMap,
                    params: ChainParams, a_low: float = DEFAULT_A_LOW,
                    seconds_per_unit: float = DEFAULT_SECONDS_PER_UNIT,
                    rate: float = DEFAULT_SAMPLE_RATE,
                    tip_speed: float = DEFAULT_TIP_SPEED) -> TransitionPlan:
    """Stable three-phase transition from one rotation mode to another.

    Both endpoints must classify to their declared modes and sit in stable
    map cells.  Identical start and goal collapse to a single constant
    waypoint.
    """
    if classify_mode(start_point) != start_mode:
        raise ValueError(f"start point does not classify to mode {start_mode}")
    if classify_mode(goal_point) != goal_mode:
        raise ValueError(f"goal point does not classify to mode {goal_mode}")
    for name, pt in (("start", start_point), ("goal", goal_point)):
        lam = smap.lookup(pt)
        if not lam < 0:
            raise PlanInfeasibleError(
                f"{name} point (a={pt.a:.3f}, lbar={pt.lbar:.3f}) is not stable "
                f"on the map (lambda_max={lam:.3g})", blocking=(pt.a, pt.lbar, lam))

    same_point = (abs(start_point.a - goal_point.a) < 1e-12
                  and abs(start_point.lbar - goal_point.lbar) < 1e-12)
    if same_point:
        t = np.arange(0.0, 2.0 + 1e-9, 1.0 / rate)
        ones = np.ones_like(t)
        return _assemble_plan([start_point], [t], [start_point.a * ones],
                              [start_point.lbar * ones],
                              [np.zeros_like(t, dtype=bool)],
                              params, smap, a_low, check=True)

    down = _route_to_corridor(smap, start_point, a_low)
    up = _route_to_corridor(smap, goal_point, a_low)
    td_in, td_out = down[-1][1], up[-1][1]

    seg_t, seg_a, seg_lbar, seg_cor = [], [], [], []
    t, a, lb = _polyline_samples(down, rate, 0.0,
                                 _climb_duration(down, params, seconds_per_unit, tip_speed))
    seg_t.append(t); seg_a.append(a); seg_lbar.append(lb)
    seg_cor.append(a <= a_low * (1 + 1e-9))

    corridor_verts = [(a_low, td_in), (a_low, td_out)]
    t, a, lb = _polyline_samples(corridor_verts, rate, t[-1],
                                 max(seconds_per_unit * abs(td_out - td_in), 2.0))
    seg_t.append(t); seg_a.append(a); seg_lbar.append(lb)
    seg_cor.append(np.ones(t.size, dtype=bool))

    t, a, lb = _polyline_samples(up[::-1], rate, t[-1],
                                 _climb_duration(up, params, seconds_per_unit, tip_speed))
    seg_t.append(t); seg_a.append(a); seg_lbar.append(lb)
    seg_cor.append(a <= a_low * (1 + 1e-9))

    waypoints = [start_point, ParamPoint(a_low, td_in), ParamPoint(a_low, td_out),
                 goal_point]
    return _assemble_plan(waypoints, seg_t, seg_a, seg_lbar, seg_cor,
                          params, smap, a_low, check=True)


def straight_line_plan(start_point: ParamPoint, goal_point: ParamPoint,
                       params: ChainParams, smap: StabilityMap | None = None,
                       a_low: float = DEFAULT_A_LOW,
                       seconds_per_unit: float = DEFAULT_SECONDS_PER_UNIT,
                       rate: float = DEFAULT_SAMPLE_RATE) -> TransitionPlan:
    """Single-leg direct path, built WITHOUT stability checks.

    Useful as a counterexample: run validate_plan on it to see where it
    breaks."""
    verts = [(start_point.a, start_point.lbar), (goal_point.a, goal_point.lbar)]
    t, a, lb = _polyline_samples(verts, rate, 0.0,
                                 max(seconds_per_unit * _path_length(verts), 2.0))
    corridor = a <= a_low * (1 + 1e-9)
    return _assemble_plan([start_point, goal_point], [t], [a], [lb], [corridor],
                          params, smap, a_low, check=False)


def plan_mode_sequence(targets: list[tuple[int, ParamPoint]], smap: StabilityMap,
                       params: ChainParams, from_rest: bool = True,
                       a_low: float = DEFAULT_A_LOW, r_min: float = DEFAULT_R_MIN,
                       seconds_per_unit: float = DEFAULT_SECONDS_PER_UNIT,
                       rate: float = DEFAULT_SAMPLE_RATE,
                       tip_speed: float = DEFAULT_TIP_SPEED,
                       spinup_lbar0: float = 0.05) -> TransitionPlan:
    """Chain transitions through a list of (mode, point) targets.

    With from_rest, a spin-up ramp at constant r = r_min raises lbar from
    near zero to the first corridor touchdown; the realized slope a(t) on
    the unique low-amplitude branch is solved per sample, so the recorded
    path matches what the physical chain tracks.  Spin-up samples stay at
    tiny amplitude and are corridor-exempt by construction.
    """
    if not targets:
        raise ValueError("need at least one target")
    for mode, pt in targets:
        if classify_mode(pt) != mode:
            raise ValueError(f"target point (a={pt.a}, lbar={pt.lbar}) "
                             f"does not classify to mode {mode}")

    first_mode, first_pt = targets[0]
    up = _route_to_corridor(smap, first_pt, a_low)
    td = up[-1][1]

    seg_t, seg_a, seg_lbar, seg_cor = [], [], [], []
    waypoints = []
    t0 = 0.0
    if from_rest:
        # phase one: raise the rotation speed at r = r_min; the chain rides
        # the unique low-amplitude branch, whose slope is solved per sample
        duration = max(seconds_per_unit * (td - spinup_lbar0), 6.0)
        n = max(int(round(duration * rate)), 2)
        frac = np.linspace(0.0, 1.0, n)
        lb = spinup_lbar0 + frac * (td - spinup_lbar0)
        a = _solve_low_branch(r_min, lb, params)
        seg_t.append(t0 + frac * duration)
        seg_a.append(a)
        seg_lbar.append(lb)
        seg_cor.append(np.ones(n, dtype=bool))
        t0 += duration
        waypoints.append(ParamPoint(max(float(a[0]), 1e-9), spinup_lbar0))
        # phase two: build the amplitude up onto the corridor, keeping the
        # control history continuous at the joint
        a_start = max(float(a[-1]), 1e-9)
        buildup = [(a_start, td), (a_low, td)]
        dur2 = max((a_low - a_start) * params.length / td / tip_speed, 4.0)
        t2, a2, lb2 = _polyline_samples(buildup, rate, t0, dur2)
        seg_t.append(t2)
        seg_a.append(a2)
        seg_lbar.append(lb2)
        seg_cor.append(np.ones(t2.size, dtype=bool))
        t0 = t2[-1]
    waypoints.append(ParamPoint(a_low, td))

    t, a, lb = _polyline_samples(up[::-1], rate, t0,
                                 _climb_duration(up, params, seconds_per_unit, tip_speed))
    seg_t.append(t); seg_a.append(a); seg_lbar.append(lb)
    seg_cor.append(a <= a_low * (1 + 1e-9))
    waypoints.append(first_pt)
    t0 = t[-1]

    prev_mode, prev_pt = first_mode, first_pt
    for mode, pt in targets[1:]:
        sub = plan_transition(prev_mode, mode, prev_pt, pt, smap, params,
                              a_low=a_low, seconds_per_unit=seconds_per_unit,
                              rate=rate, tip_speed=tip_speed)
        seg_t.append(sub.path[1:, 0] + t0)
        seg_a.append(sub.path[1:, 1])
        seg_lbar.append(sub.path[1:, 2])
        seg_cor.append(sub.corridor[1:])
        waypoints.extend(sub.waypoints[1:])
        t0 = float(seg_t[-1][-1])
        prev_mode, prev_pt = mode, pt

    return _assemble_plan(waypoints, seg_t, seg_a, seg_lbar, seg_cor,
                          params, smap, a_low, check=True)


def _solve_low_branch(r_min: float, lbar_arr: np.ndarray, params: ChainParams,
                      iters: int = 48) -> np.ndarray:
    """Initial slopes of the unique low-amplitude branch at r = r_min for a
    batch of lbar values (all at or below the first branch length)."""
    g = params.gravity
    omega2 = lbar_arr * g / params.length
    target = r_min * omega2 / g  # |rbar|
    lbar_max = float(np.max(lbar_arr))
    lo = np.full(lbar_arr.shape, 1e-9)
    hi = np.full(lbar_arr.shape, 5.0)

    def end_slope(a_arr):
        sgrid, U, UP = integrate_dense(a_arr, lbar_max, step=lbar_max / 1024)
        return uprime_at_each(sgrid, U, UP, a_arr, 0.0, lbar_arr)

    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        low = end_slope(mid) < target
        lo = np.where(low, mid, lo)
        hi = np.where(low, hi, mid)
    return 0.5 * (lo + hi)


def validate_plan(plan: TransitionPlan, smap: StabilityMap) -> PlanReport:
    """Check every plan sample against the map.

    A violation is a non-corridor sample whose bilinear lambda_max is >= 0
    (or which falls outside the map).  An empty plan is trivially valid.
    """
    if plan.path.size == 0:
        return PlanReport(n_samples=0, violations=[], min_margin=float("inf"),
                          lambda_values=np.empty(0))
    a = plan.path[:, 1]
    lbar = plan.path[:, 2]
    lam = np.array([smap.lookup(ParamPoint(ai, li)) for ai, li in zip(a, lbar)])
    violations = []
    for k in np.nonzero(~plan.corridor & ~(lam < 0))[0]:
        violations.append((float(plan.path[k, 0]), float(a[k]), float(lbar[k]),
                           float(lam[k])))
    margin = float("inf")
    cells = smap.unstable_cells()
    outside = ~plan.corridor
    if cells.size and np.any(outside):
        da = smap.a_values[1] - smap.a_values[0]
        dl = smap.lbar_values[1] - smap.lbar_values[0]
        d = np.hypot((a[outside, None] - cells[None, :, 0]) / da,
                     (lbar[outside, None] - cells[None, :, 1]) / dl)
        margin = float(d.min())
    return PlanReport(n_samples=a.size, violations=violations,
                      min_margin=margin, lambda_values=lam)


def corridor_crossing_times(plan: TransitionPlan) -> list[float]:
    """Times at which the corridor legs cross zero-radius loci.

    At each crossing the attachment sweeps through the rotation axis: in the
    non-negative-radius convention this is a sign flip of the attachment
    coordinate at minimum radius."""
    t = plan.path[:, 0]
    lb = plan.path[:, 2]
    corr = plan.corridor
    if not np.any(corr):
        return []
    lbar_hi = float(lb[corr].max()) + 1.0
    crossings = []
    for i in range(1, 12):
        try:
            z = float(locus_lbar(i, [plan.a_low], lbar_hi)[0])
        except ValueError:
            break
        d = lb - z
        hit = corr[:-1] & corr[1:] & (d[:-1] * d[1:] < 0)
        for k in np.nonzero(hit)[0]:
            crossings.append(float(t[k] + (t[k + 1] - t[k]) * d[k] / (d[k] - d[k + 1])))
    return sorted(crossings)


def emit_control_history(plan: TransitionPlan, rate: float,
                         leg_duration: float | None = None,
                         r_min: float = DEFAULT_R_MIN) -> np.ndarray:
    """Uniform control rows at the given rate: (t, r, omega) columns, plus an
    attachment-sign column when the plan crosses zero-radius loci.

    Corridor samples never ask for a radius below r_min: exactly zero cannot
    impose the rotation, so the radius is clamped there.  The sign column
    flips at each corridor locus crossing, so the signed attachment sweep
    stays continuous through the axis.  leg_duration rescales the whole
    history to leg_duration * (number of legs).
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    t_src = plan.control_history[:, 0]
    total = t_src[-1] if t_src.size else 0.0
    crossings = corridor_crossing_times(plan)
    if leg_duration is not None:
        n_legs = max(len(plan.waypoints) - 1, 1)
        scale = (leg_duration * n_legs) / total if total > 0 else 1.0
        t_src = t_src * scale
        total = t_src[-1]
        crossings = [tc * scale for tc in crossings]
    n = max(int(round(total * rate)) + 1, 2)
    t = np.linspace(0.0, total, n)
    r = np.interp(t, t_src, plan.control_history[:, 1])
    w = np.interp(t, t_src, plan.control_history[:, 2])
    corr = np.interp(t, t_src, plan.corridor.astype(float)) > 0.0
    r = np.where(corr, np.maximum(r, r_min), r)
    if not crossings:
        return np.column_stack([t, r, w])
    sign = (-1.0) ** np.searchsorted(np.asarray(crossings), t, side="right")
    return np.column_stack([t, r, w, sign])


def write_control_csv(rows: np.ndarray, path) -> None:
    header = "t,r_m,omega_rad_s" + (",attach_sign" if rows.shape[1] > 3 else "")
    np.savetxt(path, rows, delimiter=",", header=header, comments="", fmt="%.9g")
