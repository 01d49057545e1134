"""Linearized stability of rotational equilibria and the (a, lbar) map.

At an equilibrium y_eq of the autonomous rotating-frame dynamics
ydot = f(y), the sign of

    lambda_max = max_i Re(eig_i(df/dy |_{y_eq}))

decides stability: positive means unstable, negative asymptotically stable.
Without aerodynamic damping the system is conservative-plus-gyroscopic, so
its spectrum is symmetric about the imaginary axis and lambda_max can never
be negative; only the aerodynamic model can certify asymptotic stability.
Values inside MARGINAL_BAND of zero are classified "marginal": that is the
scale at which finite-difference noise and genuinely neutral modes blur.

The Jacobian is assembled column by column from central differences of the
batched dynamics, and the eigenvalue extraction is delegated to LAPACK's
dense nonsymmetric solver via numpy.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lumped import (EquilibriumError, LumpedChain, LumpedState,
                     SingularConfigurationError, dynamics_vector, equilibrium_shape)
from .params import ChainParams, ParamPoint

# |lambda_max| below this is reported as "marginal" in exports.
MARGINAL_BAND = 1e-3


@dataclass(frozen=True)
class StabilityResult:
    """lambda_max at one parameter point; ``valid`` is False when the
    equilibrium residual exceeded its tolerance or the cell failed."""

    point: ParamPoint
    lambda_max: float
    aero_enabled: bool
    equilibrium_residual: float
    valid: bool


def jacobian(chain: LumpedChain, state: LumpedState,
             h_pos: float | None = None, h_vel: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of the dynamics at a state.

    Position columns are perturbed by h_pos (default 1e-7 chain lengths),
    velocity columns by h_vel (default 1e-7 * sqrt(g L)).
    """
    length = chain.total_length
    if h_pos is None:
        h_pos = 1e-7 * length
    if h_vel is None:
        h_vel = 1e-7 * math.sqrt(chain.gravity * length)
    y0 = state.to_vector()
    n = y0.size
    steps = np.empty(n)
    blocks = steps.reshape(chain.n_masses, 6)
    blocks[:, :3] = h_pos
    blocks[:, 3:] = h_vel
    batch = np.vstack([np.tile(y0, (n, 1)) + np.diag(steps),
                       np.tile(y0, (n, 1)) - np.diag(steps)])
    f = dynamics_vector(batch, chain)
    return (f[:n] - f[n:]).T / (2.0 * steps)


def lambda_max(matrix: np.ndarray) -> float:
    """Largest real part among the eigenvalues of a dense square matrix."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"need a square matrix, got shape {matrix.shape}")
    try:
        eig = np.linalg.eigvals(matrix)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigenvalue iteration failed: {exc}") from exc
    return float(np.max(eig.real))


def classify(lam: float) -> str:
    """stable / marginal / unstable, with the marginal band around zero."""
    if abs(lam) < MARGINAL_BAND:
        return "marginal"
    return "stable" if lam < 0 else "unstable"


def stability_point(point: ParamPoint, params: ChainParams,
                    template: LumpedChain,
                    residual_tol_scale: float = 1e-6) -> StabilityResult:
    """Equilibrium, Jacobian and lambda_max at one parameter point."""
    aero = template.aero is not None
    try:
        eq = equilibrium_shape(point, params, template)
        lam = lambda_max(jacobian(eq.chain, eq.state))
    except (EquilibriumError, SingularConfigurationError, RuntimeError):
        return StabilityResult(point=point, lambda_max=float("nan"),
                               aero_enabled=aero, equilibrium_residual=float("nan"),
                               valid=False)
    tol = residual_tol_scale * template.mass_each * template.gravity
    return StabilityResult(point=point, lambda_max=lam, aero_enabled=aero,
                           equilibrium_residual=eq.residual,
                           valid=bool(np.isfinite(lam) and eq.residual <= tol))


@dataclass(frozen=True)
class StabilityMap:
    """lambda_max sampled on a cell-centered (a, lbar) grid."""

    a_values: np.ndarray
    lbar_values: np.ndarray
    lam: np.ndarray       # (na, nl)
    valid: np.ndarray     # (na, nl) bool
    residual: np.ndarray  # (na, nl)
    aero_enabled: bool

    @property
    def fraction_invalid(self) -> float:
        return 1.0 - float(np.count_nonzero(self.valid)) / self.valid.size

    def lookup(self, point: ParamPoint) -> float:
        """Bilinear lambda_max at a point; +inf outside the grid or when a
        supporting cell is invalid (treated as not certified stable)."""
        a, lb = point.a, point.lbar
        av, lv = self.a_values, self.lbar_values
        if not (av[0] <= a <= av[-1] and lv[0] <= lb <= lv[-1]):
            return float("inf")
        i = min(np.searchsorted(av, a) - 1, av.size - 2) if a > av[0] else 0
        j = min(np.searchsorted(lv, lb) - 1, lv.size - 2) if lb > lv[0] else 0
        if not (self.valid[i, j] and self.valid[i + 1, j]
                and self.valid[i, j + 1] and self.valid[i + 1, j + 1]):
            return float("inf")
        ta = (a - av[i]) / (av[i + 1] - av[i])
        tl = (lb - lv[j]) / (lv[j + 1] - lv[j])
        row0 = self.lam[i, j] * (1 - tl) + self.lam[i, j + 1] * tl
        row1 = self.lam[i + 1, j] * (1 - tl) + self.lam[i + 1, j + 1] * tl
        return float(row0 * (1 - ta) + row1 * ta)

    def unstable_cells(self) -> np.ndarray:
        """(k, 2) array of (a, lbar) centers of cells with lambda_max >= 0
        or no valid result."""
        bad = (~self.valid) | (self.lam >= 0)
        ii, jj = np.nonzero(bad)
        return np.column_stack([self.a_values[ii], self.lbar_values[jj]])

    def to_csv(self, path) -> None:
        """Columns a,lbar,lambda_max,valid,class; grid meta in the header."""
        with open(path, "w") as fh:
            fh.write(f"# aero={int(self.aero_enabled)} na={self.a_values.size} "
                     f"nl={self.lbar_values.size}\n")
            fh.write("a,lbar,lambda_max,valid,class\n")
            for i, a in enumerate(self.a_values):
                for j, lb in enumerate(self.lbar_values):
                    lam = self.lam[i, j]
                    fh.write(f"{a:.9g},{lb:.9g},{lam:.9g},{int(self.valid[i, j])},"
                             f"{classify(lam) if self.valid[i, j] else 'invalid'}\n")

    @classmethod
    def from_csv(cls, path) -> "StabilityMap":
        with open(path) as fh:
            meta = fh.readline()
        parts = dict(kv.split("=") for kv in meta.lstrip("# ").split())
        na, nl = int(parts["na"]), int(parts["nl"])
        raw = np.genfromtxt(path, delimiter=",", skip_header=2,
                            usecols=(0, 1, 2, 3))
        a_values = raw[::nl, 0]
        lbar_values = raw[:nl, 1]
        lam = raw[:, 2].reshape(na, nl)
        valid = raw[:, 3].reshape(na, nl).astype(bool)
        return cls(a_values=a_values, lbar_values=lbar_values, lam=lam,
                   valid=valid, residual=np.full((na, nl), np.nan),
                   aero_enabled=bool(int(parts["aero"])))

    def write_pm3d(self, fh) -> None:
        """gnuplot pm3d block: lbar a lambda_max, blank line between a-rows."""
        for i, a in enumerate(self.a_values):
            for j, lb in enumerate(self.lbar_values):
                fh.write(f"{lb:.9g} {a:.9g} {self.lam[i, j]:.9g}\n")
            fh.write("\n")


def _map_row(args):
    a, lbar_values, params, template = args
    lams = np.empty(lbar_values.size)
    valids = np.empty(lbar_values.size, dtype=bool)
    residuals = np.empty(lbar_values.size)
    for j, lb in enumerate(lbar_values):
        res = stability_point(ParamPoint(a, lb), params, template)
        lams[j] = res.lambda_max
        valids[j] = res.valid
        residuals[j] = res.equilibrium_residual
    return lams, valids, residuals


def stability_map(params: ChainParams, template: LumpedChain,
                  a_max: float = 5.0, lbar_max: float = 40.0,
                  na: int = 100, nl: int = 160, threads: int = 1) -> StabilityMap:
    """Sweep lambda_max over the cell-centered grid (0, a_max) x (0, lbar_max).

    Cells whose equilibrium fails are marked invalid, never interpolated.
    ``threads`` > 1 distributes rows over worker processes; the assembled map
    is identical either way.
    """
    a_values = (np.arange(na) + 0.5) * (a_max / na)
    lbar_values = (np.arange(nl) + 0.5) * (lbar_max / nl)
    jobs = [(a, lbar_values, params, template) for a in a_values]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_map_row, jobs, chunksize=max(1, na // (4 * threads))))
    else:
        rows = [_map_row(job) for job in jobs]
    lam = np.vstack([r[0] for r in rows])
    valid = np.vstack([r[1] for r in rows])
    residual = np.vstack([r[2] for r in rows])
    return StabilityMap(a_values=a_values, lbar_values=lbar_values, lam=lam,
                        valid=valid, residual=residual,
                        aero_enabled=template.aero is not None)
