"""Semigroups, fractional integrals, commutators and maximal operators on a lattice."""

from .commutator import CommutatorSpec, kernel_weights, multilinear_commutator, sigma_expansion, subsets
from .fractional import (
    AccuracyError,
    FractionalKernel,
    QuadratureDiagnostics,
    TimeQuadrature,
    difference_kernel,
    fractional_kernel,
    generalized_fractional,
    riesz_constant,
    riesz_potential,
    riesz_potential_at,
    riesz_weights,
)
from .maximal import MAXIMAL_KINDS, maximal_function, semigroup_mean_functional, sharp_maximal
from .semigroup import (
    GaussianAudit,
    ResolutionWarning,
    SemigroupSpec,
    annulus_bound_ratio,
    audit_gaussian_bound,
    cell_kernel,
    convolve_offsets,
    semigroup_apply,
)

__all__ = [
    "AccuracyError",
    "CommutatorSpec",
    "FractionalKernel",
    "GaussianAudit",
    "MAXIMAL_KINDS",
    "QuadratureDiagnostics",
    "ResolutionWarning",
    "SemigroupSpec",
    "TimeQuadrature",
    "annulus_bound_ratio",
    "audit_gaussian_bound",
    "cell_kernel",
    "convolve_offsets",
    "difference_kernel",
    "fractional_kernel",
    "generalized_fractional",
    "kernel_weights",
    "maximal_function",
    "multilinear_commutator",
    "riesz_constant",
    "riesz_potential",
    "riesz_potential_at",
    "riesz_weights",
    "semigroup_apply",
    "semigroup_mean_functional",
    "sharp_maximal",
    "sigma_expansion",
    "subsets",
]
