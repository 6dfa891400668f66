"""Consistency checks for classical and quantum field Lagrangian densities in
natural units: Euler-Lagrange variation, dimensional analysis, gauge and
Noether-current audits, stress-energy construction and numeric scenarios."""

__version__ = "0.1.0"

from .expr import (  # noqa: E402
    Conjugate, Const, Expr, Field, FormalGamma, I, Index, Metric, Partial, Power, Product,
    Rational, SpinorSandwich, Sum, lo, metric, up,
)
from .canonical import (  # noqa: E402
    canonicalize, conjugate, differentiate, equivalent, free_indices, is_zero, poly_degree,
    substitute,
)
