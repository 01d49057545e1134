"""Configuration-space surface, zero-radius loci, and critical speeds.

Every uniform rotation is a point on a 2D surface embedded in (sbar, u, u')
space: integrating the shape equation from initial slope ``a`` traces one
curve on the surface, and sweeping ``a`` sweeps the surface.  The curves
where the end slope u' vanishes are the zero-radius loci; locus i branches
off the sbar-axis at lbar = lambda_i = h_i^2/4 (h_i the i-th zero of J0) and
separates rotation mode i-1 from mode i.  The same Bessel zeros give the
discrete speeds at which low-amplitude rotations with zero attachment radius
exist:

    omega_i = (h_i / 2) * sqrt(g / L).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j0, bessel_j0_zero, branch_length
from .params import DEFAULT_A_MAX, DEFAULT_LBAR_MAX, ChainParams, ParamPoint
from .shape import (count_mode, integrate_dense, integrate_shape, interpolate_rows,
                    u_at)
from .shooting import ZeroCountError, nth_zero

__all__ = [
    "bessel_j0", "bessel_j0_zero", "branch_length", "critical_speeds",
    "SurfaceSample", "sample_surface", "ZeroRadiusLocus", "zero_radius_locus",
    "classify_mode",
]


def critical_speeds(params: ChainParams, n: int) -> list[float]:
    """The first n angular speeds omega_i = (h_i/2) sqrt(g/L) at which
    zero-radius low-amplitude rotations exist."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    scale = np.sqrt(params.gravity / params.length)
    return [0.5 * bessel_j0_zero(i) * scale for i in range(1, n + 1)]


@dataclass(frozen=True)
class SurfaceSample:
    """Rows of the configuration surface: row k is the curve integrated from
    a_values[k], sampled at the shared sbar_values grid."""

    a_values: np.ndarray
    sbar_values: np.ndarray
    u: np.ndarray        # (na, ns)
    uprime: np.ndarray   # (na, ns)

    def to_gnuplot(self, path) -> None:
        """splot-ready data: blank-line-separated blocks, columns sbar u uprime."""
        with open(path, "w") as fh:
            self.write_gnuplot(fh)

    def write_gnuplot(self, fh) -> None:
        for k in range(self.a_values.size):
            fh.write(f"# a = {self.a_values[k]:.12g}\n")
            for j in range(self.sbar_values.size):
                fh.write(f"{self.sbar_values[j]:.9g} {self.u[k, j]:.9g} {self.uprime[k, j]:.9g}\n")
            fh.write("\n")


def sample_surface(a_range: tuple[float, float] = (0.05, DEFAULT_A_MAX),
                   lbar_max: float = DEFAULT_LBAR_MAX,
                   na: int = 200, ns: int = 400) -> SurfaceSample:
    """Sample the surface on an (a, sbar) grid: na curves, ns samples each."""
    if na < 2 or ns < 2:
        raise ValueError("na and ns must both be >= 2")
    a_values = np.linspace(a_range[0], a_range[1], na)
    sgrid, U, UP = integrate_dense(a_values, lbar_max)
    sbar_values = np.linspace(0.0, lbar_max, ns)
    u, uprime = interpolate_rows(sgrid, U, UP, a_values, 0.0, sbar_values)
    return SurfaceSample(a_values=a_values, sbar_values=sbar_values, u=u, uprime=uprime)


@dataclass(frozen=True)
class ZeroRadiusLocus:
    """Points (lbar, u, 0) of the i-th zero-radius locus, parameterized by a."""

    index: int
    a_values: np.ndarray
    lbar_values: np.ndarray  # z_i(a)
    u_values: np.ndarray     # u at the zero of u'

    def write_gnuplot(self, fh) -> None:
        fh.write(f"# locus {self.index}\n")
        for lb, uu in zip(self.lbar_values, self.u_values):
            fh.write(f"{lb:.9g} {uu:.9g} 0\n")
        fh.write("\n")


def zero_radius_locus(i: int, a_samples, lbar_max: float = DEFAULT_LBAR_MAX,
                      step: float | None = None) -> ZeroRadiusLocus:
    """Trace locus i over the given a samples.

    Rows whose i-th zero does not exist before lbar_max are skipped with a
    warning; the locus starts at (lambda_i, 0, 0) as a -> 0.
    """
    if i < 1:
        raise ValueError(f"locus index must be >= 1, got {i}")
    kept_a, kept_l, kept_u = [], [], []
    skipped = 0
    for a in np.asarray(a_samples, dtype=float):
        try:
            z = nth_zero(a, i, lbar_max, step=step)
        except ZeroCountError:
            skipped += 1
            continue
        curve = integrate_shape(a, lbar_max, step=step)
        kept_a.append(a)
        kept_l.append(z)
        kept_u.append(float(u_at(curve, z)))
    if skipped:
        warnings.warn(f"locus {i}: skipped {skipped} a-samples whose zero lies "
                      f"beyond lbar = {lbar_max:.6g}", RuntimeWarning)
    return ZeroRadiusLocus(index=i, a_values=np.array(kept_a),
                           lbar_values=np.array(kept_l), u_values=np.array(kept_u))


def classify_mode(point: ParamPoint, step: float | None = None) -> int:
    """Rotation mode at a parameter point: interior zeros of u' before lbar."""
    curve = integrate_shape(point.a, point.lbar, step=step)
    return count_mode(curve)
