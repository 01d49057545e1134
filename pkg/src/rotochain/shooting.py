"""Shooting solver: all uniform rotations compatible with one control input.

Solving the two-point problem means finding initial slopes ``a > 0`` whose
integrated end slope matches the prescribed one.  Because a configuration and
its mirror image are identified, the full solution set for a control with
|rbar| = rmag is

    { a > 0 : |u'_a(lbar)| = rmag },

i.e. intersections of the |end slope| curve with the horizontal level rmag.
That curve is zero at the critical slopes a_1 > a_2 > ... (where the i-th
zero of u' lands exactly on lbar), rises to a single hump of height
rbar_i between consecutive critical slopes, and grows without bound past
a_1.  Counting intersections gives the census law implemented by
``predicted_count``: one solution above all humps, 2i+1 when rmag sits
between hump heights rbar_{i+1} and rbar_i, 2i at an exact tangency, n at
rmag = 0.

Enumeration scans the end slope over an ``a`` grid, brackets every sign
change, and polishes each bracket with a guarded secant (Illinois) iteration,
all batched through the vectorized integrator.  Near-tangent humps are
detected by refining the hump maximum; an exact tangency is reported as a
single flagged solution rather than resolved into an unresolvable pair.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .bessel import branch_length
from .params import DEFAULT_A_MAX, DimensionlessBVP
from .shape import (ShapeCurve, count_mode, integrate_dense, integrate_endpoints,
                    integrate_shape, uprime_zeros)

# Solutions closer than this in a are considered duplicates.
DISTINCT_TOL = 1e-6

# |hump max - rmag| below this is reported as a tangent pair.
TANGENT_TOL = 1e-6

# Lower cutoff of the a scan, as a fraction of a_max (excludes the trivial
# family hugging a = 0 when rmag = 0).
_EPS_A_FACTOR = 1e-6


class ConvergenceError(RuntimeError):
    """Newton refinement failed; carries the last iterate and residual."""

    def __init__(self, message, last_a=None, last_residual=None):
        super().__init__(message)
        self.last_a = last_a
        self.last_residual = last_residual


class ZeroCountError(RuntimeError):
    """u' has fewer zeros than requested before sbar_max."""

    def __init__(self, message, found: int):
        super().__init__(message)
        self.found = found


@dataclass(frozen=True)
class ShootingSolution:
    """One root of the end condition.

    ``mirrored`` marks roots whose end slope matches -rbar: the stored curve
    is the mirror representative of the configuration, and ``residual`` is
    that of the representative satisfying the direct boundary condition.
    ``tangent`` marks an unresolved double root at a hump maximum.
    """

    a: float
    residual: float
    mode: int
    curve: ShapeCurve
    mirrored: bool = False
    tangent: bool = False


@dataclass(frozen=True)
class CountingTable:
    """Census thresholds at a fixed lbar: the largest n with branch length
    lambda_n <= lbar, the critical slopes a_1 > ... > a_n, and the hump
    heights rbar_1, ..., rbar_n of |u'_a(lbar)| between them.

    Hump heights are expected to decrease with i; this is verified
    numerically and only reported through ``rbar_decreasing``."""

    lbar: float
    n: int
    a_seq: np.ndarray
    rbar_seq: np.ndarray
    rbar_decreasing: bool


def residual(a: float, bvp: DimensionlessBVP, tip_offset: float = 0.0,
             step: float | None = None) -> float:
    """Signed end-condition defect u'_a(lbar) - rbar."""
    if not (a > 0):
        raise ValueError(f"a must be > 0, got {a}")
    _, w = integrate_endpoints([a], bvp.lbar, tip_offset, step)
    return float(w[0]) - bvp.rbar


def _endpoint_slopes(a_batch, bvp: DimensionlessBVP, tip_offset, step) -> np.ndarray:
    _, w = integrate_endpoints(a_batch, bvp.lbar, tip_offset, step)
    return w


def _make_solution(a: float, bvp: DimensionlessBVP, tip_offset, step,
                   mirrored: bool, tangent: bool = False,
                   mode: int | None = None) -> ShootingSolution:
    curve = integrate_shape(a, bvp.lbar, tip_offset, step)
    end = curve.uprime[-1]
    res = (-end if mirrored else end) - bvp.rbar
    return ShootingSolution(a=float(a), residual=float(res),
                            mode=count_mode(curve) if mode is None else int(mode),
                            curve=curve, mirrored=mirrored, tangent=tangent)


def solve_single(a_guess: float, bvp: DimensionlessBVP, tol: float = 1e-9,
                 tip_offset: float = 0.0, step: float | None = None,
                 max_iter: int = 50) -> ShootingSolution:
    """Refine one root of u'_a(lbar) = rbar by Newton iteration.

    The derivative is a central finite difference with h = 1e-6*max(1, a).
    Raises ConvergenceError (with the last iterate) instead of silently
    returning an unconverged value.
    """
    if not (a_guess > 0):
        raise ValueError(f"a_guess must be > 0, got {a_guess}")
    a = float(a_guess)
    a_cap = max(10.0 * a_guess, a_guess + 2.0 * bvp.lbar + 10.0)
    f = math.nan
    for _ in range(max_iter):
        h = 1e-6 * max(1.0, a)
        w = _endpoint_slopes([a, a + h, max(a - h, 1e-300)], bvp, tip_offset, step)
        f = w[0] - bvp.rbar
        if abs(f) < tol:
            return _make_solution(a, bvp, tip_offset, step, mirrored=False)
        deriv = (w[1] - w[2]) / (2.0 * h)
        if deriv == 0 or not np.isfinite(deriv):
            raise ConvergenceError("derivative vanished during Newton refinement",
                                   last_a=a, last_residual=f)
        a_next = a - f / deriv
        if not np.isfinite(a_next) or a_next <= 0 or a_next > a_cap:
            raise ConvergenceError(
                f"Newton iterate left the admissible slope range (a -> {a_next:.6g})",
                last_a=a, last_residual=f)
        a = a_next
    raise ConvergenceError(f"no convergence after {max_iter} iterations",
                           last_a=a, last_residual=f)


def _bracketed_root(fn, lo, hi, flo, fhi, ftol, atol=1e-13, max_iter=90):
    """Vectorized bracketed root finder: secant steps with bisection fallback.

    fn maps an array of abscissae to function values; (lo, hi) bracket roots
    row-wise with flo*fhi < 0.  Returns (root, f(root)).
    """
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    flo = np.asarray(flo, dtype=float).copy()
    fhi = np.asarray(fhi, dtype=float).copy()
    x = 0.5 * (lo + hi)
    fx = np.full_like(x, np.inf)
    for it in range(max_iter):
        fx = fn(x)
        left = flo * fx <= 0  # root now in [lo, x]
        hi = np.where(left, x, hi)
        fhi = np.where(left, fx, fhi)
        lo = np.where(left, lo, x)
        flo = np.where(left, flo, fx)
        width = hi - lo
        if np.all((np.abs(fx) <= ftol) | (width <= atol * np.maximum(1.0, np.abs(x)))):
            break
        if it % 3 == 2:
            x = 0.5 * (lo + hi)
        else:
            denom = fhi - flo
            secant = np.where(denom != 0.0,
                              (lo * fhi - hi * flo) / np.where(denom == 0.0, 1.0, denom),
                              0.5 * (lo + hi))
            inside = (secant > lo + 1e-3 * width) & (secant < hi - 1e-3 * width)
            x = np.where(inside, secant, 0.5 * (lo + hi))
    return x, fx


def _golden_max(fn, lo, hi, tol=1e-8, max_iter=80):
    """Vectorized golden-section maximizer of fn on [lo, hi] row-wise."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1 = fn(x1)
    f2 = fn(x2)
    for _ in range(max_iter):
        if np.all(hi - lo <= tol * np.maximum(1.0, np.abs(hi))):
            break
        pick1 = f1 >= f2  # maximum trapped in [lo, x2]
        f1_old, f2_old = f1, f2
        hi = np.where(pick1, x2, hi)
        lo = np.where(pick1, lo, x1)
        span = hi - lo
        x1 = hi - invphi * span
        x2 = lo + invphi * span
        fresh = np.where(pick1, x1, x2)
        ffresh = fn(fresh)
        f1 = np.where(pick1, ffresh, f2_old)
        f2 = np.where(pick1, f1_old, ffresh)
    xm = np.where(f1 >= f2, x1, x2)
    fm = np.maximum(f1, f2)
    return xm, fm


def enumerate_solutions(bvp: DimensionlessBVP, a_max: float | None = None,
                        grid_n: int = 2048, tol: float = 1e-9,
                        tip_offset: float = 0.0, step: float | None = None,
                        distinct_tol: float = DISTINCT_TOL,
                        tangent_tol: float = TANGENT_TOL) -> list[ShootingSolution]:
    """Every solution with initial slope in (0, a_max], sorted by descending a.

    The default a_max = |rbar| + lbar + 1 provably covers the whole solution
    set: |u''| < 1 forces |u'_a(lbar)| >= a - lbar, so no root can sit above
    |rbar| + lbar.

    Scans |u'_a(lbar)| - |rbar| over a uniform grid, brackets each sign
    change, and refines.  Humps whose maximum grazes the level are refined by
    golden section: a graze within ``tangent_tol`` becomes one solution
    flagged ``tangent``; a resolved graze that the grid stepped over is
    bracketed and added, so close pairs are not silently missed.
    """
    if grid_n < 256:
        raise ValueError(f"grid_n must be >= 256, got {grid_n}")
    rmag = -bvp.rbar
    if a_max is None:
        a_max = rmag + bvp.lbar + 1.0
    eps_a = _EPS_A_FACTOR * a_max
    grid = np.linspace(eps_a, a_max, grid_n)

    coarse_step = bvp.lbar / 1024 if step is None else step
    w = _endpoint_slopes(grid, bvp, tip_offset, coarse_step)

    def gfun(a_arr):
        vals = _endpoint_slopes(a_arr, bvp, tip_offset, step)
        return vals if rmag == 0 else np.abs(vals) - rmag

    def gfun_coarse(a_arr):
        vals = _endpoint_slopes(a_arr, bvp, tip_offset, coarse_step)
        return vals if rmag == 0 else np.abs(vals) - rmag

    g = w if rmag == 0 else np.abs(w) - rmag

    roots: list[float] = []
    tangents: list[float] = []

    flips = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
    if flips.size:
        # coarse pass narrows the brackets, the fine pass lands on the
        # default-step residual so stored defects satisfy the tolerance
        lo, hi = grid[flips], grid[flips + 1]
        flo, fhi = g[flips], g[flips + 1]
        mid, _ = _bracketed_root(gfun_coarse, lo, hi, flo, fhi, ftol=0.0, atol=1e-9, max_iter=60)
        half = np.maximum(3e-8 * np.maximum(1.0, np.abs(mid)), 1e-8)
        lo2, hi2 = np.maximum(lo, mid - half), np.minimum(hi, mid + half)
        fboth = gfun(np.concatenate([lo2, hi2]))
        flo2, fhi2 = fboth[:lo2.size], fboth[lo2.size:]
        keep = flo2 * fhi2 <= 0
        lo = np.where(keep, lo2, lo)
        hi = np.where(keep, hi2, hi)
        flo = np.where(keep, flo2, flo)
        fhi = np.where(keep, fhi2, fhi)
        r, fr = _bracketed_root(gfun, lo, hi, flo, fhi, ftol=tol, max_iter=24)
        for rv, fv in zip(np.atleast_1d(r), np.atleast_1d(fr)):
            if abs(fv) <= tol:
                roots.append(float(rv))

    if rmag > 0:
        # humps of |w| between consecutive sign changes of the signed slope
        wflips = np.nonzero(np.sign(w[:-1]) * np.sign(w[1:]) < 0)[0]
        bounds = np.concatenate([[0], wflips + 1, [grid_n - 1]])
        da = grid[1] - grid[0]
        band = max(1e-3 * max(1.0, rmag), 50.0 * da * da)
        for b0, b1 in zip(bounds[:-1], bounds[1:]):
            if b1 - b0 < 2:
                continue
            seg = np.abs(w[b0:b1 + 1])
            kmax = b0 + int(np.argmax(seg))
            vmax = np.abs(w[kmax])
            if abs(vmax - rmag) > band:
                continue
            lo = grid[max(kmax - 1, b0)]
            hi = grid[min(kmax + 1, b1)]
            astar, _ = _golden_max(
                lambda x: np.abs(_endpoint_slopes(x, bvp, tip_offset, coarse_step)),
                np.array([lo]), np.array([hi]))
            astar = float(astar[0])
            vstar = float(np.abs(_endpoint_slopes([astar], bvp, tip_offset, step))[0])
            inside = [rv for rv in roots if lo - 2 * da <= rv <= hi + 2 * da]
            if abs(vstar - rmag) <= tangent_tol:
                for rv in inside:
                    roots.remove(rv)
                tangents.append(astar)
            elif vstar > rmag and not inside:
                # the grid stepped over a resolved close pair
                gl = float(gfun(np.array([lo]))[0])
                gh = float(gfun(np.array([hi]))[0])
                gs = vstar - rmag
                for blo, bhi, flo, fhi in ((lo, astar, gl, gs), (astar, hi, gs, gh)):
                    if flo * fhi < 0:
                        r, fr = _bracketed_root(gfun, [blo], [bhi], [flo], [fhi], ftol=tol)
                        if abs(fr[0]) <= tol:
                            roots.append(float(r[0]))

    # deduplicate and order by descending initial slope
    merged: list[tuple[float, bool]] = []
    for rv in sorted(roots):
        if merged and abs(rv - merged[-1][0]) <= distinct_tol:
            continue
        merged.append((rv, False))
    for tv in tangents:
        if not any(abs(tv - mv) <= distinct_tol for mv, _ in merged):
            merged.append((tv, True))
    merged.sort(key=lambda item: -item[0])
    if not merged:
        return []

    a_final = np.array([mv for mv, _ in merged])
    sgrid, U, UP = integrate_dense(a_final, bvp.lbar, tip_offset, step)
    solutions = []
    for rank, (a_root, is_tangent) in enumerate(merged):
        curve = ShapeCurve(sbar=sgrid, u=U[rank], uprime=UP[rank], a=float(a_root),
                           lbar=float(bvp.lbar), tip_offset=float(tip_offset))
        end = float(UP[rank, -1])
        mirrored = bool(rmag > 0 and end > 0)
        res = (-end if mirrored else end) - bvp.rbar
        mode = rank + 1 if rmag == 0 else count_mode(curve)
        solutions.append(ShootingSolution(a=float(a_root), residual=float(res), mode=mode,
                                          curve=curve, mirrored=mirrored, tangent=is_tangent))
    return solutions


def nth_zero(a: float, i: int, sbar_max: float, tip_offset: float = 0.0,
             step: float | None = None) -> float:
    """Position of the i-th zero of u'_a on (0, sbar_max), refined to 1e-10.

    Raises ZeroCountError when fewer than i zeros exist before sbar_max,
    which is distinct from any integration failure.
    """
    if not (a > 0):
        raise ValueError(f"a must be > 0, got {a}")
    if i < 1:
        raise ValueError(f"zero index must be >= 1, got {i}")
    curve = integrate_shape(a, sbar_max, tip_offset, step)
    zeros = uprime_zeros(curve, include_boundary=True)
    zeros = zeros[zeros > 0]
    if zeros.size < i:
        raise ZeroCountError(
            f"u' has only {zeros.size} zeros before sbar = {sbar_max:.6g}, needed {i}",
            found=int(zeros.size))
    return float(zeros[i - 1])


def _interior_zero_count(sgrid, u_row, up_row, a, tip_offset, lbar) -> int:
    curve = ShapeCurve(sbar=sgrid, u=u_row, uprime=up_row, a=float(a),
                       lbar=float(lbar), tip_offset=tip_offset)
    return count_mode(curve)


def build_counting_table(lbar: float, a_max: float = DEFAULT_A_MAX,
                         tip_offset: float = 0.0, step: float | None = None,
                         hump_scan: int = 33) -> CountingTable:
    """Critical slopes and hump heights governing the solution census at lbar.

    Each a_i is the unique slope whose i-th zero lands on lbar, obtained by
    bisection on the (monotone) interior-zero count.  Each hump height is the
    maximum of |u'_a(lbar)| over the bracket between neighboring critical
    slopes, located by golden section seeded from a coarse scan of the hump
    (the scan also guards against a non-unimodal surprise)."""
    n = 0
    while n < 20 and branch_length(n + 1) <= lbar:
        n += 1
    if n == 0:
        return CountingTable(lbar=float(lbar), n=0, a_seq=np.empty(0),
                             rbar_seq=np.empty(0), rbar_decreasing=True)

    idx = np.arange(1, n + 1)
    lo = np.full(n, 1e-8)
    # a_i < lbar always: |u''| < 1 keeps u' positive up to sbar = a, so a
    # slope of lbar has no zero before lbar and brackets every a_i from above.
    hi = np.full(n, float(lbar))
    coarse_step = lbar / 1024 if step is None else step

    def zero_counts(a_arr):
        sgrid, U, UP = integrate_dense(a_arr, lbar, tip_offset, coarse_step)
        return np.array([_interior_zero_count(sgrid, U[r], UP[r], a_arr[r], tip_offset, lbar)
                         for r in range(len(a_arr))])

    for _ in range(48):
        if np.all(hi - lo <= 1e-10 * np.maximum(1.0, hi)):
            break
        mid = 0.5 * (lo + hi)
        counts = zero_counts(mid)
        inside = counts >= idx  # i-th zero still before lbar: a_i is above mid
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    a_seq = 0.5 * (lo + hi)

    # hump maxima of |u'_a(lbar)| between consecutive critical slopes
    eps_a = _EPS_A_FACTOR * a_max
    hump_lo = np.append(a_seq[1:], eps_a)
    hump_hi = a_seq

    def abs_end(a_arr):
        _, w = integrate_endpoints(a_arr, lbar, tip_offset, step)
        return np.abs(w)

    def abs_end_coarse(a_arr):
        _, w = integrate_endpoints(a_arr, lbar, tip_offset, coarse_step)
        return np.abs(w)

    ts = np.linspace(0.0, 1.0, hump_scan)
    scan_pts = hump_lo[:, None] + (hump_hi - hump_lo)[:, None] * ts[None, :]
    scan_vals = abs_end_coarse(scan_pts.ravel()).reshape(n, hump_scan)
    karg = np.argmax(scan_vals, axis=1)
    glo = scan_pts[np.arange(n), np.maximum(karg - 1, 0)]
    ghi = scan_pts[np.arange(n), np.minimum(karg + 1, hump_scan - 1)]
    amax_pos, _ = _golden_max(abs_end_coarse, glo, ghi)
    rbar_seq = abs_end(amax_pos)
    coarse_best = scan_vals[np.arange(n), karg]
    if np.any(rbar_seq < coarse_best - 1e-7):
        warnings.warn("hump maximum refinement fell below its coarse scan; "
                      "the hump may not be unimodal", RuntimeWarning)
        rbar_seq = np.maximum(rbar_seq, coarse_best)

    decreasing = bool(np.all(np.diff(rbar_seq) < 0))
    if not decreasing:
        warnings.warn(f"hump heights are not strictly decreasing at lbar = {lbar:.6g}",
                      RuntimeWarning)
    return CountingTable(lbar=float(lbar), n=n, a_seq=a_seq, rbar_seq=rbar_seq,
                         rbar_decreasing=decreasing)


def predicted_count(table: CountingTable, rbar: float, match_rtol: float = 1e-9) -> int:
    """Number of solutions the census law predicts for |rbar| at table.lbar."""
    rmag = abs(rbar)
    if table.n == 0:
        return 0 if rmag == 0 else 1
    if rmag == 0:
        return table.n
    for i in range(table.n):
        if abs(rmag - table.rbar_seq[i]) <= match_rtol * max(1.0, table.rbar_seq[i]):
            return 2 * (i + 1)
    if rmag > table.rbar_seq[0]:
        return 1
    if rmag < table.rbar_seq[-1]:
        return 2 * table.n + 1
    for i in range(table.n - 1):
        if table.rbar_seq[i + 1] < rmag < table.rbar_seq[i]:
            return 2 * (i + 1) + 1
    raise RuntimeError("census classification failed; hump heights may not be sorted")


def predicted_modes(table: CountingTable, rbar: float, match_rtol: float = 1e-9) -> list[int]:
    """Mode labels, ordered by descending a, matching ``predicted_count``."""
    count = predicted_count(table, rbar, match_rtol)
    rmag = abs(rbar)
    if rmag == 0:
        return list(range(1, count + 1))
    if count == 1:
        return [0]
    if count % 2 == 1:
        i = (count - 1) // 2
        return [0] + [k for k in range(1, i + 1) for _ in (0, 1)]
    i = count // 2
    return [0] + [k for k in range(1, i) for _ in (0, 1)] + [i]
