"""Fourier-space laboratory for the homogeneous Boltzmann equation with a
Debye-Yukawa angular kernel: measure-valued initial data evolve through the
spherical collision integral acting on characteristic functions, and every
quantitative estimate of the underlying analysis is checkable at desk scale.
"""

__version__ = "0.1.0"

from .charfn import (AnalyticCharFn, CharGrid, KAlphaReport, MeasureSpec,
                     catalog, dirac_at_origin, example_initial_datum,
                     evaluate_state, fourier_of_measure, interpolate,
                     k_alpha_distance, k_alpha_norm, maxwellian,
                     perturbed_example_datum, sample_to_grid,
                     verify_characteristic)
from .collision import (SphereQuadrature, collision_rhs, remainder_r_eps,
                        rhs_on_grid, split_components, xi_plus_minus)
from .diagnostics import (CoercivityReport, SmoothingWeight, coercivity_margin,
                          decay_profile, m_delta, smoothing_trace, weighted_l2)
from .errors import (CharacteristicViolation, DomainError, InstabilityError,
                     NonConvergenceError)
from .evolve import (EvolveConfig, QuadratureSpec, StabilityReport,
                     TrajectoryRecord, cutoff_continuation, evolve,
                     stability_experiment, step)
from .kernel import (AngularKernel, CutoffKernel, MomentTable, a_eps,
                     analytic_moment, angular_moment, coercive_weight,
                     cutoff_mass, lambda_alpha, lambda_eps_alpha,
                     model_moment_integral, moment_table,
                     remainder_tail_bound)
from .specfun import gamma_fn, upper_gamma

__all__ = [name for name in dir() if not name.startswith("_")]
