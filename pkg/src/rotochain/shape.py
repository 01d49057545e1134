"""Dimensionless shape equation and recovery of the physical curve.

The shape of a uniformly rotating chain is governed, after scaling arc
length by omega^2/g, by the second-order equation

    u'' = -u / sqrt((sbar + t0)^2 + u^2),        t0 = M*omega^2/(mu*g),

integrated from the free end with u(0) = a*t0, u'(0) = a.  For a bare chain
t0 = 0 and the right-hand side has a removable singularity at the origin:
along the solution u ~ a*sbar, so the field tends to -a/sqrt(1+a^2) there.

The physical curve follows from the dimensionless record via

    s    = sbar * g / omega^2
    rho  = -u' * g / omega^2          (radial coordinate, sign folded so the
                                       attached end sits at rho >= 0)
    rho' = u / sqrt((sbar+t0)^2+u^2)
    z'   = +sqrt(1 - rho'^2),  z(L) = 0
    F    = g*(mu*s + M) / z'          (tension, F(0) = 0 for a bare chain)

The integrator is a fixed-step classical Runge-Kutta scheme: the field is
smooth, bounded (|u''| < 1) and Lipschitz on the domain, so adaptive stepping
buys nothing and fixed steps keep zero detection reproducible.  All routines
are pure functions over immutable inputs and vectorize over batches of
initial slopes, which is what makes the grid sweeps elsewhere affordable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import ChainParams

# Fixed-step count implied by step=None: step = lbar / DEFAULT_STEPS.
DEFAULT_STEPS = 4096

# Guard below which the removable singularity branch of the field is taken.
_SINGULAR_EPS = 1e-12

# Zeros refined to this tolerance in sbar (bisection on the dense output).
ZERO_TOL = 1e-10

# Refined zeros closer than end_tol * lbar to either endpoint are treated as
# boundary zeros and excluded from mode counts.
_END_TOL = 1e-9


class ShapeRecoveryError(RuntimeError):
    """Raised when |rho'| >= 1 at a sample, violating inextensibility."""


@dataclass(frozen=True)
class ShapeCurve:
    """Dense record (sbar, u, u') of one integration from the free end."""

    sbar: np.ndarray
    u: np.ndarray
    uprime: np.ndarray
    a: float
    lbar: float
    tip_offset: float = 0.0

    def __len__(self):
        return self.sbar.size

    def to_csv(self, path) -> None:
        """Write the samples as CSV with columns sbar,u,uprime."""
        data = np.column_stack([self.sbar, self.u, self.uprime])
        np.savetxt(path, data, delimiter=",", header="sbar,u,uprime", comments="", fmt="%.12g")


@dataclass(frozen=True)
class PhysicalShape:
    """Recovered physical curve: arc length s [m], radial coordinate rho [m],
    height z [m] (z = 0 at the attached end), tension F [N], and the rotation
    mode (number of interior axis crossings).  rho_prime and z_prime are the
    construction-level derivatives, satisfying rho'^2 + z'^2 = 1."""

    s: np.ndarray
    rho: np.ndarray
    z: np.ndarray
    tension: np.ndarray
    mode: int
    rho_prime: np.ndarray
    z_prime: np.ndarray

    def to_csv(self, path) -> None:
        """Write the samples as CSV with columns s,rho,z,F."""
        data = np.column_stack([self.s, self.rho, self.z, self.tension])
        np.savetxt(path, data, delimiter=",", header="s,rho,z,F", comments="", fmt="%.12g")

    def arc_length(self) -> float:
        """Polyline length of the recovered (rho, z) curve."""
        return float(np.sum(np.hypot(np.diff(self.rho), np.diff(self.z))))


def ode_rhs(u, sbar, a, tip_offset: float = 0.0):
    """Right-hand side u'' of the shape equation; array-safe.

    Returns -u / sqrt((sbar + tip_offset)^2 + u^2), with the analytic limit
    -a / sqrt(1 + a^2) substituted where both sbar + tip_offset and u vanish.
    """
    u = np.asarray(u, dtype=float)
    shifted = np.asarray(sbar, dtype=float) + tip_offset
    denom = np.hypot(shifted, u)
    singular = denom < _SINGULAR_EPS
    safe = np.where(singular, 1.0, denom)
    value = -u / safe
    if np.any(singular):
        a_arr = np.broadcast_to(np.asarray(a, dtype=float), value.shape)
        limit = -a_arr / np.sqrt(1.0 + a_arr ** 2)
        value = np.where(singular, limit, value)
    if value.ndim == 0:
        return float(value)
    return value


# Graded start mesh.  The field is smooth along solutions but its partial
# derivatives grow like 1/(sbar + tip_offset) toward the origin, which drags
# a uniform-step sweep down to third order.  A fixed geometric mesh over
# [0, _START_REGION] absorbs that neighborhood with an h-independent error
# near the roundoff floor, so the uniform sweep beyond it shows clean fourth
# order.  Interior zeros of u' cannot occur this close to the free end for a
# bare chain, and with a tip mass the graded samples are stored like any
# others, so zero detection is unaffected.
_START_REGION = 0.25
_START_RATIO = 1.05
_START_SUBSTEPS = 290


def _node_schedule(lbar: float, step: float | None, tip_offset: float) -> np.ndarray:
    """Integration nodes: graded start mesh, then uniform steps to lbar
    (the last one shortened to land exactly on lbar)."""
    if step is None:
        step = lbar / DEFAULT_STEPS
    if not (step > 0 and np.isfinite(step)):
        raise ValueError(f"step must be positive and finite, got {step}")
    s_reg = min(_START_REGION, lbar / 8.0)
    if tip_offset >= s_reg:
        graded = np.empty(0)
        start = 0.0
    else:
        graded = s_reg * _START_RATIO ** (-np.arange(_START_SUBSTEPS, -1.0, -1.0))
        start = s_reg
    m = max(int(np.ceil((lbar - start) / step - 1e-9)), 1)
    uniform = start + np.arange(1, m + 1) * step
    uniform[-1] = lbar
    nodes = np.concatenate([[0.0], graded, uniform])
    return nodes[np.concatenate([[True], np.diff(nodes) > 0])]


def _rk4_step(u, w, s, h, a, tip_offset):
    """One classical Runge-Kutta step of (u, u') from s to s + h."""
    k1u = w
    k1w = ode_rhs(u, s, a, tip_offset)
    k2u = w + 0.5 * h * k1w
    k2w = ode_rhs(u + 0.5 * h * k1u, s + 0.5 * h, a, tip_offset)
    k3u = w + 0.5 * h * k2w
    k3w = ode_rhs(u + 0.5 * h * k2u, s + 0.5 * h, a, tip_offset)
    k4u = w + h * k3w
    k4w = ode_rhs(u + h * k3u, s + h, a, tip_offset)
    u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    w = w + (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    return u, w


def _rk4_step_smooth(u, w, s, h, t0):
    """RK4 step on the smooth region s + t0 > 0 (no singular branch checks)."""
    sp = s + t0
    k1u = w
    k1w = -u / np.sqrt(sp * sp + u * u)
    u2 = u + 0.5 * h * k1u
    sp2 = sp + 0.5 * h
    k2w = -u2 / np.sqrt(sp2 * sp2 + u2 * u2)
    k2u = w + 0.5 * h * k1w
    u3 = u + 0.5 * h * k2u
    k3w = -u3 / np.sqrt(sp2 * sp2 + u3 * u3)
    k3u = w + 0.5 * h * k2w
    u4 = u + h * k3u
    sp4 = sp + h
    k4w = -u4 / np.sqrt(sp4 * sp4 + u4 * u4)
    k4u = w + h * k3w
    u = u + (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    w = w + (h / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
    return u, w


def _rk4_sweep(a_values, lbar, tip_offset, step, keep_dense):
    """Runge-Kutta sweep of (u, u') for a batch of initial slopes.

    Returns (sbar_grid, U, UP) with dense history when keep_dense, otherwise
    (sbar_end, u_end, uprime_end) with only the final state.
    """
    a = np.atleast_1d(np.asarray(a_values, dtype=float))
    if not np.all(np.isfinite(a)):
        raise ValueError("initial slopes must be finite")
    if not (np.isfinite(lbar) and lbar > 0):
        raise ValueError(f"lbar must be positive and finite, got {lbar}")
    nodes = _node_schedule(lbar, step, tip_offset)
    m = nodes.size - 1

    u = np.full(a.shape, a * tip_offset, dtype=float)
    w = a.astype(float).copy()
    if keep_dense:
        U = np.empty((a.size, m + 1))
        UP = np.empty((a.size, m + 1))
        U[:, 0] = u
        UP[:, 0] = w

    for k in range(m):
        s = nodes[k]
        h = nodes[k + 1] - nodes[k]
        if s == 0.0 and tip_offset < _SINGULAR_EPS:
            u, w = _rk4_step(u, w, s, h, a, tip_offset)
        else:
            u, w = _rk4_step_smooth(u, w, s, h, tip_offset)
        if keep_dense:
            U[:, k + 1] = u
            UP[:, k + 1] = w

    if keep_dense:
        return nodes, U, UP
    return lbar, u, w


def integrate_endpoints(a_values, lbar, tip_offset: float = 0.0, step: float | None = None):
    """End values (u(lbar), u'(lbar)) for a batch of initial slopes."""
    _, u, w = _rk4_sweep(a_values, lbar, tip_offset, step, keep_dense=False)
    return u, w


def integrate_dense(a_values, lbar, tip_offset: float = 0.0, step: float | None = None):
    """Dense history (sbar, U, UP) for a batch of initial slopes; rows index a."""
    return _rk4_sweep(a_values, lbar, tip_offset, step, keep_dense=True)


def integrate_shape(a: float, lbar: float, tip_offset: float = 0.0,
                    step: float | None = None) -> ShapeCurve:
    """Integrate the shape equation from (u, u')(0) = (a*tip_offset, a)."""
    sgrid, U, UP = integrate_dense([a], lbar, tip_offset, step)
    return ShapeCurve(sbar=sgrid, u=U[0], uprime=UP[0], a=float(a), lbar=float(lbar),
                      tip_offset=float(tip_offset))


# ----------------------------------------------------------------------
# Dense output: cubic Hermite interpolation between stored samples.
# ----------------------------------------------------------------------

def _hermite(t, h, p0, p1, m0, m1):
    """Cubic Hermite value at normalized position t in a cell of width h."""
    t2 = t * t
    t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * h * m0
            + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * h * m1)


def _curve_upp(curve: ShapeCurve) -> np.ndarray:
    return np.asarray(ode_rhs(curve.u, curve.sbar, curve.a, curve.tip_offset))


def uprime_at(curve: ShapeCurve, s) -> np.ndarray | float:
    """u'(s) anywhere on [0, lbar] via Hermite interpolation of the samples."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    upp = _curve_upp(curve)
    idx = np.clip(np.searchsorted(curve.sbar, s_arr, side="right") - 1, 0, len(curve.sbar) - 2)
    h = curve.sbar[idx + 1] - curve.sbar[idx]
    t = (s_arr - curve.sbar[idx]) / h
    out = _hermite(t, h, curve.uprime[idx], curve.uprime[idx + 1], upp[idx], upp[idx + 1])
    return float(out[0]) if np.isscalar(s) else out


def u_at(curve: ShapeCurve, s) -> np.ndarray | float:
    """u(s) anywhere on [0, lbar] via Hermite interpolation (u' as slope)."""
    s_arr = np.atleast_1d(np.asarray(s, dtype=float))
    idx = np.clip(np.searchsorted(curve.sbar, s_arr, side="right") - 1, 0, len(curve.sbar) - 2)
    h = curve.sbar[idx + 1] - curve.sbar[idx]
    t = (s_arr - curve.sbar[idx]) / h
    out = _hermite(t, h, curve.u[idx], curve.u[idx + 1], curve.uprime[idx], curve.uprime[idx + 1])
    return float(out[0]) if np.isscalar(s) else out


def interpolate_rows(sgrid, U, UP, a_values, tip_offset, targets):
    """Hermite-interpolate a batch of dense rows at shared target abscissae.

    Returns (u, uprime) arrays of shape (n_rows, n_targets)."""
    targets = np.asarray(targets, dtype=float)
    a_col = np.asarray(a_values, dtype=float)[:, None]
    UPP = np.asarray(ode_rhs(U, sgrid, a_col, tip_offset))
    idx = np.clip(np.searchsorted(sgrid, targets, side="right") - 1, 0, sgrid.size - 2)
    h = sgrid[idx + 1] - sgrid[idx]
    t = (targets - sgrid[idx]) / h
    ut = _hermite(t, h, U[:, idx], U[:, idx + 1], UP[:, idx], UP[:, idx + 1])
    upt = _hermite(t, h, UP[:, idx], UP[:, idx + 1], UPP[:, idx], UPP[:, idx + 1])
    return ut, upt


def uprime_at_each(sgrid, U, UP, a_values, tip_offset, s_per_row):
    """u' of each dense row at its own abscissa: row k read at s_per_row[k]."""
    s_per_row = np.asarray(s_per_row, dtype=float)
    a_arr = np.asarray(a_values, dtype=float)
    UPP = np.asarray(ode_rhs(U, sgrid, a_arr[:, None], tip_offset))
    idx = np.clip(np.searchsorted(sgrid, s_per_row, side="right") - 1, 0, sgrid.size - 2)
    rows = np.arange(s_per_row.size)
    h = sgrid[idx + 1] - sgrid[idx]
    t = (s_per_row - sgrid[idx]) / h
    return _hermite(t, h, UP[rows, idx], UP[rows, idx + 1], UPP[rows, idx], UPP[rows, idx + 1])


def uprime_zeros(curve: ShapeCurve, include_boundary: bool = False) -> np.ndarray:
    """Zeros of u' on (0, lbar), bisection-refined on the dense output.

    Zeros landing within a relative _END_TOL of either endpoint are dropped
    unless include_boundary is set.
    """
    up = curve.uprime
    upp = _curve_upp(curve)
    sgrid = curve.sbar
    sign = np.sign(up)
    flips = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    zeros = []
    for k in flips:
        lo, hi = 0.0, 1.0
        h = sgrid[k + 1] - sgrid[k]
        flo = up[k]
        while (hi - lo) * h > ZERO_TOL:
            mid = 0.5 * (lo + hi)
            fm = _hermite(mid, h, up[k], up[k + 1], upp[k], upp[k + 1])
            if flo * fm <= 0:
                hi = mid
            else:
                lo = mid
                flo = fm
        zeros.append(sgrid[k] + 0.5 * (lo + hi) * h)
    # Samples that are exactly zero (measure-zero but cheap to honor).
    exact = sgrid[1:-1][up[1:-1] == 0.0]
    if exact.size:
        zeros = sorted(set(zeros) | set(exact.tolist()))
    zeros = np.asarray(zeros, dtype=float)
    if not include_boundary:
        edge = _END_TOL * curve.lbar
        zeros = zeros[(zeros > edge) & (zeros < curve.lbar - edge)]
    return zeros


def count_mode(curve: ShapeCurve) -> int:
    """Number of strict sign changes of u' on the open span (0, lbar).

    This is the rotation mode: each interior zero of u' is one crossing of
    the rotation axis.  Zeros within tolerance of either endpoint do not
    count.
    """
    return int(uprime_zeros(curve).size)


def recover_physical(curve: ShapeCurve, params: ChainParams, omega: float) -> PhysicalShape:
    """Undo the scaling and rebuild (s, rho, z, F) from a dimensionless curve.

    The radial coordinate keeps its sign (crossings stay visible) but the
    overall mirror is chosen so the attached end has rho >= 0.
    """
    if not (omega > 0):
        raise ValueError("omega must be > 0")
    g = params.gravity
    scale = g / omega ** 2
    s = curve.sbar * scale
    rho = -curve.uprime * scale

    shifted = curve.sbar + curve.tip_offset
    denom = np.hypot(shifted, curve.u)
    singular = denom < _SINGULAR_EPS
    safe = np.where(singular, 1.0, denom)
    rho_prime = np.where(singular, curve.a / np.sqrt(1.0 + curve.a ** 2), curve.u / safe)
    if rho[-1] < 0:  # fold the mirror so the attached end sits at rho >= 0
        rho = -rho
        rho_prime = -rho_prime
    bad = np.abs(rho_prime) >= 1.0
    if np.any(bad):
        raise ShapeRecoveryError(
            f"|rho'| >= 1 at sbar = {curve.sbar[bad][0]:.6g}: inextensibility violated")
    z_prime = np.sqrt(1.0 - rho_prime ** 2)

    # z(L) = 0, z' >= 0: integrate z' backwards by the trapezoid rule.
    dz = 0.5 * (z_prime[1:] + z_prime[:-1]) * np.diff(s)
    z = np.empty_like(s)
    z[-1] = 0.0
    z[:-1] = -np.cumsum(dz[::-1])[::-1]

    tension = g * (params.linear_density * s + params.tip_mass) / z_prime
    return PhysicalShape(s=s, rho=rho, z=z, tension=tension, mode=count_mode(curve),
                         rho_prime=rho_prime, z_prime=z_prime)
