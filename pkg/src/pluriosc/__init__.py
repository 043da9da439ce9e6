"""Oscillation analytics and weighted Bergman kernels for psh test functions."""

from .catalog import FactoredPolynomial, PshFunction, PshMetadata, catalog_lookup
from .quadrature import IntegralResult, QuadratureSpec
from .regions import (
    AnisotropicBox,
    ConvexPolytope,
    Polydisc,
    Segment,
    finite_type_check,
    region_membership,
)

__version__ = "0.1.0"

__all__ = [
    "AnisotropicBox",
    "ConvexPolytope",
    "FactoredPolynomial",
    "IntegralResult",
    "Polydisc",
    "PshFunction",
    "PshMetadata",
    "QuadratureSpec",
    "Segment",
    "catalog_lookup",
    "finite_type_check",
    "region_membership",
    "__version__",
]
