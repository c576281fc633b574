"""wavelab: solitary waves of a Hamiltonian Boussinesq-type system.

Numerical toolkit for the coupled BBM-type system with b = d > 0, a < 0,
c < 0: spectral solitary-wave solvers with small-amplitude (KdV) seeding,
the action curve d(omega) and its convexity diagnostics, Hamiltonian time
evolution with conservation monitors, and orbital-stability experiments.
"""

from .model import (LEVEL_EXISTENCE, LEVEL_STABILITY, REFERENCE_PARAMS,
                    ModelParams, SpeedPoint, ValidationReport, eps_from_omega,
                    omega_from_eps, omega_window, pow_signed, sigma_from_abc,
                    validate)
from .spectral import (Grid, RealField, StatePair, default_domain_length,
                       deriv, helmholtz_inv, inner_h1, inner_l2, make_grid,
                       norm_h1, norm_l2, norm_x, shift)
from .functionals import (FunctionalReport, charge, coercivity_bounds,
                          functional_report, gfun, hamiltonian, i1, i2w, iw,
                          jw, kw)
from .kdv import (P0_REPORTED, critical_fn, critical_p0, j0_closed,
                  kdv_profile, kdv_residual, rescaled_functionals,
                  scale_from_zw, scale_to_zw, sech_moment, w0_l2)
from .solver import (SolitaryWave, SolverDiverged, SolverError,
                     continuation_branch, default_grid, newton_refine,
                     normalize_to_constraint, residual, seed_from_kdv,
                     solve_petviashvili, solve_wave, symbol_det)
from .dcurve import (Branch, convexity_report, d_of_wave, dprime, dsecond_fd,
                     dsecond_via_deri2, omega_of_state)
from .evolution import (BlowupError, EvolutionConfig, EvolutionTrace,
                        cfl_max_dt, conservation_check, dispersion_omega,
                        evolve, rhs, small_data_bound)
from .stability import (ShatahResult, StabilityExperiment, StabilityReport,
                        orbit_distance, perturb, shatah_inequality,
                        shatah_sweep, stability_experiment)

__version__ = "0.1.0"
