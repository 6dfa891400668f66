"""Natural-units dimensional analysis (hbar = c = 1, everything a power of L).

Every term of a Lagrangian density must be a Lorentz scalar of dimension
[L^-4]. Field dimensions left undeclared are solved for from that condition,
one linear equation per canonical monomial.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Mapping, Optional

from . import canonical as C
from .errors import DimensionConflictError, UnderdeterminedDimensionError
from .report import Check, Report

if TYPE_CHECKING:
    from .dsl import LagrangianModel

DENSITY_EXPONENT = Fraction(-4)
PROBABILITY_EXPONENT = Fraction(-3)


@dataclass(frozen=True, order=True)
class Dimension:
    """[L^exponent]; rational so that spinors ([L^-3/2]) fit."""

    exponent: Fraction

    def __post_init__(self):
        object.__setattr__(self, "exponent", Fraction(self.exponent))

    def __add__(self, other: "Dimension") -> "Dimension":
        return Dimension(self.exponent + other.exponent)

    def __mul__(self, k: int) -> "Dimension":
        return Dimension(self.exponent * k)

    __rmul__ = __mul__

    def __str__(self) -> str:
        q = self.exponent
        s = str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"
        return f"[L^{s}]"


DERIVATIVE = Dimension(Fraction(-1))


def _field_counts(m: C.Mono) -> dict:
    counts: dict = {}
    nderiv = 0
    for a in m.atoms:
        for f in C.atom_fields(a):
            counts[f.name] = counts.get(f.name, 0) + 1
            nderiv += len(f.derivs)
    return counts, nderiv


def _has_free_parameter(m: C.Mono, constants: Mapping) -> bool:
    return any(constants.get(n) is None and n != "pi" for n, _ in m.consts)


def _const_dimension(m: C.Mono, constants: Mapping) -> Fraction:
    total = Fraction(0)
    for n, p in m.consts:
        if n == "pi":
            continue
        total += constants[n].exponent * p
    return total


def mono_dimension(m: C.Mono, fields: Mapping, constants: Mapping) -> Optional[Dimension]:
    """Dimension of one monomial, or None when a free parameter is involved."""
    if _has_free_parameter(m, constants):
        return None
    counts, nderiv = _field_counts(m)
    total = _const_dimension(m, constants) - nderiv
    for name, k in counts.items():
        d = fields.get(name)
        if d is None:
            raise UnderdeterminedDimensionError(f"field {name!r} has no dimension", [name])
        total += d.exponent * k
    return Dimension(total)


def dimension_of(e, fields: Mapping, constants: Mapping) -> Dimension:
    """Dimension of an expression; all summands must agree."""
    from .dsl import render

    seen: dict = {}
    for m in C.canonical_monos(e):
        d = mono_dimension(m, fields, constants)
        if d is None:
            raise DimensionConflictError("expression contains a dimension-free parameter",
                                         [render(C.mono_expr(m))])
        seen.setdefault(d, C.mono_expr(m))
    if not seen:
        return Dimension(0)
    if len(seen) > 1:
        items = sorted(seen.items())
        pairs = [f"{render(a)} {da} vs {render(b)} {db}"
                 for (da, a), (db, b) in zip(items, items[1:])]
        raise DimensionConflictError("summands have different dimensions: " + "; ".join(pairs), pairs)
    return next(iter(seen))


def infer_dimensions(model: "LagrangianModel") -> dict:
    """Solve 'every term is [L^-4]' for undeclared field dimensions.

    Terms with a dimension-free parameter (a constant declared without
    ``dim``) are left out of the system.
    """
    from .dsl import render

    known = {n: f.dimension for n, f in model.fields.items() if f.dimension is not None}
    unknown = [n for n, f in model.fields.items() if f.dimension is None]
    col = {n: k for k, n in enumerate(unknown)}
    rows: list = []  # (coefficients, rhs, term text)
    for m in C.canonical_monos(model.density):
        if _has_free_parameter(m, model.constants):
            continue
        counts, nderiv = _field_counts(m)
        rhs = DENSITY_EXPONENT - _const_dimension(m, model.constants) + nderiv
        coeffs = [Fraction(0)] * len(unknown)
        for name, k in counts.items():
            if name in known:
                rhs -= known[name].exponent * k
            else:
                coeffs[col[name]] += k
        rows.append((coeffs, rhs, render(C.mono_expr(m))))

    # incremental Gauss-Jordan elimination over the rationals
    pivots: list = []  # (pivot column, coefficients, rhs, term)
    for coeffs, rhs, term in rows:
        coeffs = list(coeffs)
        for pc, pco, prhs, _ in pivots:
            f = coeffs[pc]
            if f:
                coeffs = [a - f * b for a, b in zip(coeffs, pco)]
                rhs -= f * prhs
        lead = next((k for k, a in enumerate(coeffs) if a), None)
        if lead is None:
            if rhs != 0:
                involved = [t for _, _, _, t in pivots]
                raise DimensionConflictError(
                    f"term {term} cannot have dimension [L^-4] given "
                    + (", ".join(involved) if involved else "the declared dimensions"),
                    [term] + involved)
            continue
        a = coeffs[lead]
        coeffs = [x / a for x in coeffs]
        rhs /= a
        new_pivots = []
        for pc, pco, prhs, t in pivots:
            f = pco[lead]
            if f:
                pco = [x - f * y for x, y in zip(pco, coeffs)]
                prhs -= f * rhs
            new_pivots.append((pc, pco, prhs, t))
        pivots = new_pivots + [(lead, coeffs, rhs, term)]

    solved = dict(known)
    loose = set(unknown)
    for pc, pco, prhs, _ in pivots:
        if all(x == 0 for k, x in enumerate(pco) if k != pc):
            solved[unknown[pc]] = Dimension(prhs)
            loose.discard(unknown[pc])
    if loose:
        names = sorted(loose)
        raise UnderdeterminedDimensionError(
            "dimensions not fixed by the density: " + ", ".join(names), names)
    return {n: solved[n] for n in model.fields}


def check_scalar(e) -> Check:
    """Requirement A: no free Lorentz indices."""
    free = C.free_indices(e)
    if not free:
        return Check("lorentz-scalar", "pass", "no free indices")
    names = ", ".join(sorted(f"{'^' if i.up else '_'}{i.name}" for i in free))
    return Check("lorentz-scalar", "fail", f"free indices: {names}")


def probability_density_check(e, fields: Mapping, constants: Mapping, label: str) -> Check:
    """Dimension of a proposed probability density; flagged unless [L^-3]."""
    d = dimension_of(e, fields, constants)
    if d.exponent == PROBABILITY_EXPONENT:
        return Check(f"probability-density {label}", "info", f"{d}; admissible")
    return Check(f"probability-density {label}", "info",
                 f"{d}; cannot represent probability density [L^-3]")


def check_requirements(model: "LagrangianModel") -> Report:
    """Per-term requirement A (Lorentz scalar) and B ([L^-4]) verdicts plus
    the dimension of each matter field's bilinear density."""
    from .dsl import render
    from .expr import Field

    report = Report(f"requirements:{model.name or 'model'}")
    try:
        dims = infer_dimensions(model)
    except (DimensionConflictError, UnderdeterminedDimensionError) as exc:
        report.add(Check("dimension-inference", "fail", str(exc)))
        return report
    for name, d in dims.items():
        report.add(Check(f"dimension {name}", "info", str(d)))
    for m in C.canonical_monos(model.density):
        e = C.mono_expr(m)
        text = render(e)
        a = check_scalar(e)
        report.add(Check(f"A scalar: {text}", a.verdict, a.witness))
        d = mono_dimension(m, dims, model.constants)
        if d is None:
            report.add(Check(f"B dimension: {text}", "info", "free parameter; excluded"))
        else:
            report.add(Check.expect(f"B dimension: {text}", d.exponent == DENSITY_EXPONENT, str(d)))
    for f in model.fields.values():
        if f.kind == "scalar":
            dens = f.atom(conj=not f.real) * f.atom()
            label = f"{f.name}*{f.name}" if f.real else f"conj({f.name})*{f.name}"
        elif f.kind == "spinor":
            dens = f.atom(conj=True) * f.atom()
            label = f"{f.name}bar*{f.name}"
        else:
            continue
        report.add(probability_density_check(dens, dims, model.constants, label))
    return report
