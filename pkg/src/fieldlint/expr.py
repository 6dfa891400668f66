"""Immutable tensor-expression nodes.

Expressions are plain frozen dataclasses; every rewrite builds new values.
Arithmetic operators are overloaded so that models can be assembled in
Python as well as through the DSL::

    phi = Field("phi")
    L = Rational(1, 2) * (phi.d(lo("mu")) * phi.d(up("mu")) - Const("m") ** 2 * phi ** 2)
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

# Index names starting with these characters never come out of the DSL lexer,
# so canonical dummies and temporaries can't capture user indices.
CANONICAL_PREFIX = "ι"  # iota
FRESH_PREFIX = "ϰ"  # kappa symbol


@dataclass(frozen=True, order=True)
class Index:
    name: str
    up: bool

    def flipped(self) -> "Index":
        return Index(self.name, not self.up)

    def renamed(self, name: str) -> "Index":
        return Index(name, self.up)

    def __repr__(self) -> str:
        return f"{'^' if self.up else '_'}{self.name}"


def up(name: str) -> Index:
    return Index(name, True)


def lo(name: str) -> Index:
    return Index(name, False)


def is_reserved(name: str) -> bool:
    return name.startswith((CANONICAL_PREFIX, FRESH_PREFIX))


@dataclass(frozen=True)
class Coeff:
    """Exact Gaussian rational ``re + im*i``."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    @staticmethod
    def of(value) -> "Coeff":
        if isinstance(value, Coeff):
            return value
        if isinstance(value, complex):
            return Coeff(Fraction(value.real), Fraction(value.imag))
        return Coeff(Fraction(value))

    def __add__(self, other: "Coeff") -> "Coeff":
        return Coeff(self.re + other.re, self.im + other.im)

    def __neg__(self) -> "Coeff":
        return Coeff(-self.re, -self.im)

    def __sub__(self, other: "Coeff") -> "Coeff":
        return self + (-other)

    def __mul__(self, other: "Coeff") -> "Coeff":
        return Coeff(self.re * other.re - self.im * other.im,
                     self.re * other.im + self.im * other.re)

    def inverse(self) -> "Coeff":
        den = self.re * self.re + self.im * self.im
        if den == 0:
            raise ZeroDivisionError("inverse of zero coefficient")
        return Coeff(self.re / den, -self.im / den)

    def conj(self) -> "Coeff":
        return Coeff(self.re, -self.im)

    def __bool__(self) -> bool:
        return bool(self.re) or bool(self.im)

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    @property
    def is_real(self) -> bool:
        return self.im == 0

    def sort_key(self):
        return (self.re, self.im)


ONE = Coeff(Fraction(1))
ZERO = Coeff()
IMAG = Coeff(Fraction(0), Fraction(1))


class Expr:
    """Base class; only provides operator sugar."""

    def __add__(self, other) -> "Expr":
        return Sum((self, as_expr(other)))

    def __radd__(self, other) -> "Expr":
        return Sum((as_expr(other), self))

    def __sub__(self, other) -> "Expr":
        return Sum((self, Product((Rational(-1), as_expr(other)))))

    def __rsub__(self, other) -> "Expr":
        return Sum((as_expr(other), Product((Rational(-1), self))))

    def __mul__(self, other) -> "Expr":
        return Product((self, as_expr(other)))

    def __rmul__(self, other) -> "Expr":
        return Product((as_expr(other), self))

    def __neg__(self) -> "Expr":
        return Product((Rational(-1), self))

    def __pow__(self, n: int) -> "Expr":
        return Power(self, n)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, complex):
        return Sum((Rational(Fraction(value.real)),
                    Product((Rational(Fraction(value.imag)), I))))
    if isinstance(value, (int, Fraction)):
        return Rational(value)
    raise TypeError(f"cannot convert {value!r} to an expression")


@dataclass(frozen=True, eq=True)
class Sum(Expr):
    terms: tuple

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))


@dataclass(frozen=True, eq=True)
class Product(Expr):
    factors: tuple

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True, eq=True)
class Power(Expr):
    base: Expr
    exp: int


@dataclass(frozen=True, eq=True, init=False)
class Rational(Expr):
    value: Fraction

    def __init__(self, numerator=0, denominator=1):
        object.__setattr__(self, "value", Fraction(numerator) / Fraction(denominator))


@dataclass(frozen=True, eq=True)
class ImaginaryUnit(Expr):
    pass


I = ImaginaryUnit()


@dataclass(frozen=True, eq=True)
class Const(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Field(Expr):
    """A field with its own tensor indices and a multiset of derivative indices.

    ``conj`` means complex conjugate for bosonic fields and Dirac adjoint for
    spinors. ``symmetry`` tags the first two tensor slots of rank-2 fields.
    """

    name: str
    indices: tuple = ()
    derivs: tuple = ()
    conj: bool = False
    kind: str = "scalar"
    real: bool = True
    symmetry: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(self.indices))
        object.__setattr__(self, "derivs", tuple(sorted(self.derivs)))
        if self.conj and self.real and self.kind != "spinor":
            raise ValueError(f"conjugate of real field {self.name!r}")

    @property
    def is_spinor(self) -> bool:
        return self.kind == "spinor"

    def d(self, *idx: Index) -> "Field":
        return Field(self.name, self.indices, self.derivs + tuple(idx), self.conj,
                     self.kind, self.real, self.symmetry)

    def with_(self, **changes) -> "Field":
        values = dict(name=self.name, indices=self.indices, derivs=self.derivs,
                      conj=self.conj, kind=self.kind, real=self.real, symmetry=self.symmetry)
        values.update(changes)
        return Field(**values)

    def base(self) -> "Field":
        """The same field with no indices, derivatives or conjugation."""
        return self.with_(indices=(), derivs=(), conj=False)


@dataclass(frozen=True, eq=True)
class Metric(Expr):
    a: Index
    b: Index

    def __post_init__(self):
        if self.b < self.a:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)


@dataclass(frozen=True, eq=True)
class Conjugate(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class FormalGamma(Expr):
    index: Index


@dataclass(frozen=True, eq=True)
class Partial(Expr):
    """Derivative operator; only meaningful inside a spinor sandwich, where it
    acts on the right spinor."""

    index: Index


@dataclass(frozen=True, eq=True)
class SpinorSandwich(Expr):
    """``left * inner * right`` with spinor ordering preserved.

    Either side may be ``None``: a missing left spinor makes a column spinor
    (what varying the Dirac adjoint leaves behind), a missing right one a row.
    In canonical form ``inner`` is 1, a gamma, or a product of gammas.
    """

    left: Optional[Field]
    inner: Expr
    right: Optional[Field]


def gamma_string(inner: Expr) -> tuple:
    """Indices of a canonical sandwich interior."""
    if isinstance(inner, Rational):
        return ()
    if isinstance(inner, FormalGamma):
        return (inner.index,)
    if isinstance(inner, Product) and all(isinstance(f, FormalGamma) for f in inner.factors):
        return tuple(f.index for f in inner.factors)
    raise ValueError("sandwich interior is not a canonical gamma string")


def gammas_expr(indices: Iterable[Index]) -> Expr:
    gs = tuple(FormalGamma(i) for i in indices)
    if not gs:
        return Rational(1)
    if len(gs) == 1:
        return gs[0]
    return Product(gs)


def metric(a: Union[Index, str], b: Union[Index, str], upper: bool = True) -> Metric:
    if isinstance(a, str):
        a = Index(a, upper)
    if isinstance(b, str):
        b = Index(b, upper)
    return Metric(a, b)


ZERO_EXPR = Rational(0)


def walk(e: Expr):
    """Pre-order traversal of an expression tree."""
    yield e
    if isinstance(e, Sum):
        for t in e.terms:
            yield from walk(t)
    elif isinstance(e, Product):
        for f in e.factors:
            yield from walk(f)
    elif isinstance(e, Power):
        yield from walk(e.base)
    elif isinstance(e, Conjugate):
        yield from walk(e.arg)
    elif isinstance(e, SpinorSandwich):
        if e.left is not None:
            yield e.left
        yield from walk(e.inner)
        if e.right is not None:
            yield e.right


__all__ = [
    "Index", "up", "lo", "Coeff", "Expr", "Sum", "Product", "Power", "Rational", "I",
    "ImaginaryUnit", "Const", "Field", "Metric", "Conjugate", "FormalGamma", "Partial",
    "SpinorSandwich", "as_expr", "gamma_string", "gammas_expr", "metric", "walk",
    "is_reserved", "ZERO_EXPR",
]
