"""Least-squares rational approximation.

AAA, Sanathanan-Koerner iteration, Vector Fitting and a variable-projection
Gauss-Newton method in polynomial-ratio and partial-fraction forms, with
optional real-coefficient constraints and dense sample weights.
"""
from .aaa import aaa_fit, barycentric_poles, barycentric_residues, build_loewner
from .bases import Basis, coefficients_from_roots, make_basis, vandermonde
from .core import (
    BarycentricRational,
    ConversionError,
    DomainError,
    FitReport,
    PartialFraction,
    PolyRatio,
    SampleSet,
    evaluate,
    residual_norm,
    to_partial_fraction,
)
from .optimizer import GnOptions, OptResult, aaa_init_poles, fit_rational, gauss_newton
from .sk import sk_fit
from .varpro import VarproProblem, poles_to_quadratic, quad_to_partial_fraction
from .vecfit import vf_fit, vf_pole_update
from .weights import Weight, cauchy_mass, cauchy_weight, inverse_sqrt_weight

__all__ = [
    "BarycentricRational",
    "Basis",
    "ConversionError",
    "DomainError",
    "FitReport",
    "GnOptions",
    "OptResult",
    "PartialFraction",
    "PolyRatio",
    "SampleSet",
    "VarproProblem",
    "Weight",
    "aaa_fit",
    "aaa_init_poles",
    "barycentric_poles",
    "barycentric_residues",
    "build_loewner",
    "cauchy_mass",
    "cauchy_weight",
    "coefficients_from_roots",
    "evaluate",
    "fit_rational",
    "gauss_newton",
    "inverse_sqrt_weight",
    "make_basis",
    "poles_to_quadratic",
    "quad_to_partial_fraction",
    "residual_norm",
    "sk_fit",
    "to_partial_fraction",
    "vandermonde",
    "vf_fit",
    "vf_pole_update",
]
