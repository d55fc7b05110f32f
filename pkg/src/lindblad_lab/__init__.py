"""Numerics for finite-dimensional Lindblad generators: gradient-form
comparison, conditional-expectation generators, order norms and
stability of functional inequalities and photon statistics."""

from .errors import *  # noqa: F401,F403
from .generator import (
    GKSForm,
    LindbladGenerator,
    StandardForm,
    check_detailed_balance,
    db_spectral_data,
    fixed_point_algebra,
    superoperator_matrix,
    to_standard_form,
    validate_lindblad,
)
from .gradient import compare, derivation_matrix, gradient_form, gradient_matrix, sandwich_check
from .inequalities import (
    bkm_variance,
    cmlsi_probe,
    dirichlet_data,
    dirichlet_form,
    entropy_production,
    mlsi_ratio,
    relative_entropy,
    spectral_gap,
    stability_check_cmlsi,
    stability_check_pi,
)
from .optics import choi, compare_jump_maps, emission_rate, g2, jump_map
from .order import in_cone, order_norm
from .scans import g2_stability_scan, stability_scan
from .subalgebra import (
    SubalgebraSpec,
    conditional_expectation,
    depolarizer_generator,
    upper_bound_unit,
)

__version__ = "0.1.0"
