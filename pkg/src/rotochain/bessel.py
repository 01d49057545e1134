"""Zeroth-order Bessel function, its zeros, and the branch lengths built on them.

The low-amplitude rotations of the chain follow a J0 profile, so the package
needs J0 and its first zeros h_1, h_2, ... to high accuracy without pulling
in a special-function dependency.  Two classical representations cover the
axis:

 * power series  J0(x) = sum_k (-1)^k (x^2/4)^k / (k!)^2   for x <= 12,
 * Hankel asymptotic expansion for x > 12,

      J0(x) = sqrt(2/(pi x)) * (P(x) cos(x - pi/4) - Q(x) sin(x - pi/4)),

   summed to optimal truncation (terms are added while they still shrink).

The series suffers cancellation that grows like e^x * eps, and the
asymptotic truncation floor is about e^(-2x), so the crossover sits near
x ~ 12 and both halves are evaluated in extended precision; on x86 this
keeps the absolute error near 1e-13 over the whole range of interest, and
the zeros are then bisected to 1e-10 comfortably.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

_LD = np.longdouble
_SERIES_CUT = 12.0
_MAX_ZERO_INDEX = 20


def _j0_series(x: float) -> float:
    xl = _LD(x)
    q = xl * xl / 4
    term = _LD(1.0)
    total = _LD(1.0)
    for k in range(1, 200):
        term = -term * q / _LD(k * k)
        total += term
        if abs(term) < _LD(1e-24) * max(abs(total), _LD(1.0)):
            break
    return float(total)


def _j0_asymptotic(x: float) -> float:
    xl = _LD(x)
    d = _LD(1.0)  # running Hankel term (0,k) / x^k, signed
    p_sum = _LD(0.0)
    q_sum = _LD(0.0)
    last = abs(d)
    for k in range(0, 80):
        sign = _LD(1.0) if (k // 2) % 2 == 0 else _LD(-1.0)
        if k % 2 == 0:
            p_sum += sign * d
        else:
            q_sum += sign * d
        d_next = d * (-(_LD(2 * k + 1) ** 2)) / (_LD(8 * (k + 1)) * xl)
        if abs(d_next) >= last or abs(d_next) < _LD(1e-26):
            break
        last = abs(d_next)
        d = d_next
    chi = xl - _LD(math.pi) / 4
    amp = np.sqrt(_LD(2.0) / (_LD(math.pi) * xl))
    return float(amp * (p_sum * np.cos(chi) - q_sum * np.sin(chi)))


def bessel_j0(x) -> float | np.ndarray:
    """J0(x), accurate to about 1e-13 absolute on [0, 70]."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        xv = abs(float(arr))
        return _j0_series(xv) if xv <= _SERIES_CUT else _j0_asymptotic(xv)
    flat = arr.ravel()
    out = np.array([bessel_j0(float(v)) for v in flat])
    return out.reshape(arr.shape)


@lru_cache(maxsize=None)
def bessel_j0_zero(i: int) -> float:
    """The i-th positive zero h_i of J0, 1 <= i <= 20, to 1e-10."""
    if not (1 <= i <= _MAX_ZERO_INDEX):
        raise ValueError(f"zero index must be in [1, {_MAX_ZERO_INDEX}], got {i}")
    beta = (i - 0.25) * math.pi
    guess = beta + 1.0 / (8.0 * beta) - 124.0 / (3.0 * (8.0 * beta) ** 3)
    lo, hi = guess - 0.5, guess + 0.5
    flo, fhi = bessel_j0(lo), bessel_j0(hi)
    if flo * fhi > 0:
        raise RuntimeError(f"failed to bracket J0 zero {i} near {guess:.6f}")
    while hi - lo > 1e-13 * hi:
        mid = 0.5 * (lo + hi)
        fm = bessel_j0(mid)
        if flo * fm <= 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def branch_length(i: int) -> float:
    """Dimensionless length lambda_i = h_i^2 / 4 at which the i-th zero-radius
    branch meets the axis of the configuration surface."""
    h = bessel_j0_zero(i)
    return h * h / 4.0
