"""Chain description, control inputs, and the dimensionless scalings.

All quantities are SI.  The dimensionless boundary value problem solved by
the rest of the package sees only two numbers,

    lbar = L * omega**2 / g      (dimensionless chain length, > 0)
    rbar = -r * omega**2 / g     (dimensionless attachment radius, <= 0)

while an individual uniform rotation is pinned down by the free-end pair

    a    = u'(0)                 (initial slope of the dimensionless shape)
    lbar

Only non-negative ``a`` is kept: integrating from ``-a`` yields the mirror
image of the same configuration, so nothing is lost by folding the sign away.
The free-end radius is recovered as ``rho0 = a * g / omega**2`` (a magnitude,
same folding).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

DEFAULT_GRAVITY = 9.81  # m/s^2

# Default bounds of the (a, lbar) parameter box explored by maps and planners.
DEFAULT_A_MAX = 5.0
DEFAULT_LBAR_MAX = 40.0


@dataclass(frozen=True)
class ChainParams:
    """Physical chain: length [m], linear density [kg/m], gravity [m/s^2],
    optional tip mass [kg] and wire diameter [m] (the diameter only matters
    for aerodynamics)."""

    length: float
    linear_density: float
    gravity: float = DEFAULT_GRAVITY
    tip_mass: float = 0.0
    diameter: float = 0.001

    def __post_init__(self):
        if not (self.length > 0):
            raise ValueError(f"chain length must be > 0, got {self.length}")
        if not (self.linear_density > 0):
            raise ValueError(f"linear density must be > 0, got {self.linear_density}")
        if not (self.gravity > 0):
            raise ValueError(f"gravity must be > 0, got {self.gravity}")
        if not (self.tip_mass >= 0):
            raise ValueError(f"tip mass must be >= 0, got {self.tip_mass}")
        if not (self.diameter > 0):
            raise ValueError(f"diameter must be > 0, got {self.diameter}")


@dataclass(frozen=True)
class ControlInput:
    """Held-end control: attachment radius r [m] and angular speed omega
    [rad/s], both non-negative (the mirrored duplicates are folded away)."""

    radius: float
    omega: float

    def __post_init__(self):
        if not (self.radius >= 0):
            raise ValueError(f"attachment radius must be >= 0, got {self.radius}")
        if not (self.omega >= 0):
            raise ValueError(f"angular speed must be >= 0, got {self.omega}")


@dataclass(frozen=True)
class DimensionlessBVP:
    """Dimensionless two-point boundary data: end slope target ``rbar <= 0``
    and integration span ``lbar > 0``."""

    rbar: float
    lbar: float

    def __post_init__(self):
        if not (self.rbar <= 0):
            raise ValueError(f"rbar must be <= 0, got {self.rbar}")
        if not (self.lbar > 0):
            raise ValueError(f"lbar must be > 0, got {self.lbar}")


@dataclass(frozen=True)
class ParamPoint:
    """A point (a, lbar) of the 2D parameter box that indexes configurations."""

    a: float
    lbar: float

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise ValueError(f"a must be positive and finite, got {self.a}")
        if not (self.lbar > 0 and math.isfinite(self.lbar)):
            raise ValueError(f"lbar must be positive and finite, got {self.lbar}")


def nondimensionalize(params: ChainParams, control: ControlInput) -> DimensionlessBVP:
    """Map a physical control (r, omega) to the dimensionless pair (rbar, lbar).

    omega must be strictly positive: at omega = 0 there is no uniform
    rotation and the scaling degenerates.
    """
    if control.omega <= 0:
        raise ValueError("omega must be > 0 to nondimensionalize (no rotation at omega = 0)")
    scale = control.omega ** 2 / params.gravity
    return DimensionlessBVP(rbar=-control.radius * scale, lbar=params.length * scale)


def dimensionalize(params: ChainParams, point: ParamPoint) -> tuple[float, float]:
    """Invert the scaling on a parameter point: returns (omega, rho0).

    omega = sqrt(lbar * g / L) is the rotation speed realizing ``lbar`` and
    rho0 = a * g / omega**2 the free-end radius magnitude.
    """
    omega = math.sqrt(point.lbar * params.gravity / params.length)
    rho0 = point.a * params.gravity / omega ** 2
    return omega, rho0


def tip_offset(params: ChainParams, omega: float) -> float:
    """Dimensionless shift M*omega^2/(mu*g) produced by a tip mass (0 if none)."""
    if omega <= 0:
        raise ValueError("omega must be > 0")
    return params.tip_mass * omega ** 2 / (params.linear_density * params.gravity)


def load_chain_config(path) -> ChainParams:
    """Read chain parameters from a JSON file.

    Expected keys: length_m, linear_density_kg_per_m, gravity_m_per_s2,
    tip_mass_kg, diameter_m.  tip_mass_kg defaults to 0, diameter_m to 0.001
    and gravity_m_per_s2 to 9.81 when absent; the first two keys are required.
    """
    with open(path) as fh:
        raw = json.load(fh)
    try:
        length = raw["length_m"]
        density = raw["linear_density_kg_per_m"]
    except KeyError as exc:
        raise ValueError(f"chain config {path} is missing required key {exc}") from exc
    return ChainParams(
        length=float(length),
        linear_density=float(density),
        gravity=float(raw.get("gravity_m_per_s2", DEFAULT_GRAVITY)),
        tip_mass=float(raw.get("tip_mass_kg", 0.0)),
        diameter=float(raw.get("diameter_m", 0.001)),
    )
