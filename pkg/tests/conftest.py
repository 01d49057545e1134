import numpy as np
import pytest

from rotochain import lumped, stability
from rotochain.params import ChainParams

# The reference chain used throughout: 0.76 m, 76 g, standard gravity.
REFERENCE_CHAIN = ChainParams(length=0.76, linear_density=0.1)


@pytest.fixture(scope="session")
def chain_params() -> ChainParams:
    return REFERENCE_CHAIN


@pytest.fixture(scope="session")
def aero_template(chain_params):
    return lumped.LumpedChain.from_params(chain_params, n_masses=10, aero=True)


@pytest.fixture(scope="session")
def noaero_template(chain_params):
    return lumped.LumpedChain.from_params(chain_params, n_masses=10, aero=False)


@pytest.fixture(scope="session")
def aero_map(chain_params, aero_template) -> stability.StabilityMap:
    """Full-resolution aerodynamic stability map, shared across the session
    (about a minute to build)."""
    return stability.stability_map(chain_params, aero_template)


@pytest.fixture(scope="session")
def noaero_map(chain_params, noaero_template) -> stability.StabilityMap:
    return stability.stability_map(chain_params, noaero_template)


def envelope(t: np.ndarray, values: np.ndarray, t_center: float, window: float) -> float:
    """Max of |values| over (t_center - window, t_center]."""
    mask = (t > t_center - window) & (t <= t_center)
    return float(values[mask].max())
