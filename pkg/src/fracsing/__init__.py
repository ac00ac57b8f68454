"""Positive solutions of ``(-Laplacian)^s u = u^-p`` with zero Dirichlet data.

The spectral operator acts on the Dirichlet eigenbasis of an interval or a
rectangle.  Solutions of the regularized problems ``(eps + u)^-p`` are
bracketed by monotone iteration, continued to ``eps -> 0`` with certified
ordering, and cross-checked through the weighted half-cylinder extension.
"""

from .continuation import (ContinuationReport, EpsSchedule, estimate_limit, limit_residual,
                           run_continuation, uniqueness_probe)
from .extension import (bessel_profile, calibrate_cs, closed_form_constant, cylinder_energy,
                        extend_field, extract_flux, extension_profile)
from .geometry import Domain, EigenBasis, analyze, build_basis, default_basis, make_grid, synthesize
from .monotone import (Certificate, SolveOptions, build_supersolution, compare_order,
                       monotone_iterate, solve_regularized)
from .nonlinearity import GeneralRHS, SingularRHS, verify_g1_g2
from .spectral import FracExponent, apply_fractional, hs_norm, solve_shifted, weak_residual

__version__ = "0.1.0"

__all__ = [
    "Certificate", "ContinuationReport", "Domain", "EigenBasis", "EpsSchedule", "FracExponent",
    "GeneralRHS", "SingularRHS", "SolveOptions", "analyze", "apply_fractional", "bessel_profile",
    "build_basis", "build_supersolution", "calibrate_cs", "closed_form_constant", "compare_order",
    "cylinder_energy", "default_basis", "estimate_limit", "extend_field", "extension_profile",
    "extract_flux", "hs_norm", "limit_residual", "make_grid", "monotone_iterate", "run_continuation",
    "solve_regularized", "solve_shifted", "synthesize", "uniqueness_probe", "verify_g1_g2",
    "weak_residual",
]
