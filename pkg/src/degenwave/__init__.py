"""Semi-finite traveling waves of a chemotaxis model with porous-medium diffusion."""

__version__ = "0.1.0"

from ._backend import name as backend_name
from .bessel import (SignalTriple, bessel_apply, bessel_quadrature, characteristic_roots,
                     check_bounds)
from .classifier import EdgeFit, WaveClass, classify, consistency_check, edge_exponent
from .errors import *  # noqa: F401,F403
from .fixed_point import (FixedPointConfig, WaveResult, apply_T, convergence_norm, in_phi,
                          solve_wave, weak_residual)
from .model import (Grid1D, ModelParams, Profile, chi_admissible, reaction, speed_scaling)
from .shooter import (Outcome, ShooterConfig, critical_speed, integrate_profile,
                      local_expansion, psi_of_phi, reconstruct_profile)
from .simulator import (FrontSeries, SimState, empirical_speed, initial_state, run, step)
from .variational import (WeightFunction, chemo_speed_bounds, extremal_weight, functional_J,
                          sigma_from_trajectory, solve_rho)
