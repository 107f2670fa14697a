"""laxforge: explicit Lax pairs and Darboux charts for rank-2 rational connections.

The package builds the companion-gauge and geometric-gauge Lax pairs of a
traceless 2x2 rational connection from several coordinate charts, computes
the associated Hamiltonians and spectral invariants, solves the triangular
differential systems giving isospectral coordinates, and ships a seeded
verification harness (`laxforge verify`) exercising every identity at desk
scale.
"""

from .ratcalc import (INF, LaurentSlice, Poly, PoleSum, RationalFunction,
                      laurent_slice, partial_fractions,
                      polynomial_part_at_infinity, singular_part)
from .model import (DeformationVector, FinitePole, PoleProfile, TimeChart,
                    genus, normalize, validate_chart_constraints)

__all__ = [
    "INF", "LaurentSlice", "Poly", "PoleSum", "RationalFunction",
    "laurent_slice", "partial_fractions", "polynomial_part_at_infinity",
    "singular_part", "DeformationVector", "FinitePole", "PoleProfile",
    "TimeChart", "genus", "normalize", "validate_chart_constraints",
]
