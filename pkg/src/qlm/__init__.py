"""Quasi-local mass functionals on graphical manifolds."""

from ._validation import (ConfigError, DomainError, FillError, HorizonProximityError, NearCriticalError,
                          PreconditionError, QLMError)
from .domain import Ball, Box, Domain, GridSpec, ImplicitRegion, ScalarField, gradient, hessian, volume_integral
from .estimators import FlatDistance, QuasiLocalMass, StabilityAnalyzer
from .families import FamilySpec, instantiate
from .flat import convergence_run, decompose, fill_graph, flat_bound
from .geometry import (ball_criterion, check_admissibility, graph_mean_curvature, mean_curvature_sign_check,
                       scalar_curvature, second_fundamental_form)
from .level_sets import LevelSet, area_profile, extract_level_set, first_variation
from .mass import (adm_limit_check, brown_york_mass, lam_functional, lam_identity_check, mass_report,
                   minkowski_check, monotonicity_and_bulk_identity, penrose_check)
from .radial import RadialGraph
from .stability import (compute_h_o, height_estimate_check, ode_comparison, stability_report, threshold,
                        volume_estimate_check, vprime_lower_bound_check, vprime_optimized_bound_check)

__version__ = "0.1.0"
