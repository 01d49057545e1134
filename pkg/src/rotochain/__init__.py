"""Uniform rotations of a hanging chain: every rotation compatible with a
control input, the 2D configuration space behind them, linearized stability
of the discretized chain, and quasi-static transition plans between rotation
modes."""

from .bessel import bessel_j0, bessel_j0_zero, branch_length
from .configspace import (classify_mode, critical_speeds, sample_surface,
                          zero_radius_locus)
from .lumped import (AeroParams, ControlSchedule, Equilibrium, LumpedChain,
                     LumpedState, Trajectory, equilibrium_shape, simulate)
from .params import (ChainParams, ControlInput, DimensionlessBVP, ParamPoint,
                     dimensionalize, load_chain_config, nondimensionalize)
from .planner import (TransitionPlan, emit_control_history, mode_target,
                      plan_mode_sequence, plan_transition, straight_line_plan,
                      validate_plan)
from .shape import (PhysicalShape, ShapeCurve, count_mode, integrate_shape,
                    ode_rhs, recover_physical)
from .shooting import (CountingTable, ShootingSolution, build_counting_table,
                       enumerate_solutions, nth_zero, predicted_count,
                       predicted_modes, residual, solve_single)
from .stability import (StabilityMap, StabilityResult, jacobian, lambda_max,
                        stability_map, stability_point)

__version__ = "0.1.0"
