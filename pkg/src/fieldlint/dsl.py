"""Index-notation DSL for Lagrangian models.

Grammar::

    model     := stmt*
    stmt      := fielddecl | constdecl | assume | define | lagr
    fielddecl := "field" IDENT ":" ("real"|"complex")
                 ("scalar"|"vector"|"tensor"|"spinor")
                 ["symmetric"|"antisymmetric"] ["dim" RATIONAL]
    constdecl := "const" IDENT ["dim" RATIONAL]
    assume    := "assume" ("lorenz_gauge"|"mass_shell"|"on_shell")
    define    := "def" IDENT idx* ":=" expr
    lagr      := "L" "=" expr            (repeated statements add up)
    expr      := term (("+"|"-") term)*
    term      := factor ("*" factor)*
    factor    := RATIONAL | "i" | IDENT idx* | "d" idx+ "(" expr ")"
               | "conj" "(" expr ")" | "(" expr ")" | factor "^" INT
    idx       := ("_"|"^") "{" IDENT+ "}"

Reserved identifiers: ``g`` (metric), ``gamma`` (Dirac matrix), ``pi``,
``i``. A spinor field ``psi`` is accompanied by its Dirac adjoint ``psibar``.
Statements may span lines; ``#`` starts a comment.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import canonical as C
from .dimensions import Dimension
from .errors import DeclarationError, DSLSyntaxError, IndexDisciplineError, UndeclaredSymbolError
from .expr import (
    Conjugate, Const, Expr, Field, FormalGamma, I, Index, Metric, Power, Product, Rational, Sum,
    is_reserved,
)

KINDS = ("scalar", "vector", "tensor", "spinor")
ARITY = {"scalar": 0, "vector": 1, "tensor": 2, "spinor": 0}
ASSUMPTIONS = ("lorenz_gauge", "mass_shell", "on_shell")
RESERVED = {"field", "const", "assume", "def", "L", "d", "conj", "i", "g", "gamma", "pi", "dim"}


@dataclass(frozen=True)
class FieldSymbol:
    name: str
    kind: str = "scalar"
    reality: str = "real"
    dimension: Optional[Dimension] = None
    symmetry: Optional[str] = None

    @property
    def real(self) -> bool:
        return self.reality == "real"

    @property
    def arity(self) -> int:
        return ARITY[self.kind]

    def atom(self, indices=(), derivs=(), conj: bool = False) -> Field:
        return Field(self.name, tuple(indices), tuple(derivs), conj, self.kind, self.real, self.symmetry)


@dataclass(frozen=True)
class Definition:
    name: str
    indices: tuple
    body: Expr


@dataclass
class LagrangianModel:
    fields: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)  # name -> Dimension or None (free parameter)
    assumptions: frozenset = frozenset()
    density: Expr = Rational(0)
    definitions: dict = field(default_factory=dict)
    name: str = ""

    def field(self, name: str) -> FieldSymbol:
        return self.fields[name]

    def with_density(self, density: Expr) -> "LagrangianModel":
        return LagrangianModel(dict(self.fields), dict(self.constants), self.assumptions,
                               C.canonicalize(density), dict(self.definitions), self.name)

    def definition(self, name: str, *indices: Index) -> Expr:
        """Body of a ``def`` with its indices relabeled to ``indices``."""
        d = self.definitions[name]
        return _instantiate_definition(d, indices)


# --------------------------------------------------------------------------
# lexer

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:/\d+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9]*(?:_[A-Za-z0-9]+)*)
  | (?P<op>:=|[-+*^_{}():=])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind in ("num", "ident", "op"):
            out.append(Token(kind, tok, line, pos - line_start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


# --------------------------------------------------------------------------
# parser

def _instantiate_definition(d: Definition, indices) -> Expr:
    if len(indices) != len(d.indices):
        raise IndexDisciplineError(f"{d.name} takes {len(d.indices)} indices, got {len(indices)}")
    body = d.body
    temps = [Index(C.fresh_name(), i.up) for i in d.indices]
    for old, tmp in zip(d.indices, temps):
        body = C.rename_index(body, old, tmp)
    for tmp, new in zip(temps, indices):
        body = C.rename_index(body, tmp, new)
    return body


class Parser:
    def __init__(self, text: str, model: Optional[LagrangianModel] = None):
        self.toks = tokenize(text)
        self.pos = 0
        self.model = model or LagrangianModel()
        self.terms: list = []

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.pos]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.pos + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Token] = None, cls=DSLSyntaxError):
        tok = tok or self.tok
        return cls(msg, tok.line, tok.col)

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("op", "ident") and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind == "eof":
            raise self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        return self.advance()

    def rational(self) -> Fraction:
        neg = self.accept("-")
        if self.tok.kind != "num":
            raise self.error("expected a rational number")
        v = Fraction(self.advance().text)
        return -v if neg else v

    # statements
    def parse_model(self) -> LagrangianModel:
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind != "ident":
                raise self.error(f"expected a statement, found {t.text!r}")
            if t.text == "field":
                self.field_decl()
            elif t.text == "const":
                self.const_decl()
            elif t.text == "assume":
                self.advance()
                a = self.ident()
                if a.text not in ASSUMPTIONS:
                    raise self.error(f"unknown assumption {a.text!r}", a)
                self.model.assumptions = self.model.assumptions | {a.text}
            elif t.text == "def":
                self.define()
            elif t.text == "L":
                self.advance()
                self.expect("=")
                start = self.tok
                term = self.expr()
                try:
                    C.canonicalize(term)
                except IndexDisciplineError as exc:
                    raise IndexDisciplineError(f"{start.line}:{start.col}: {exc}") from None
                self.terms.append(term)
            else:
                raise self.error(f"expected a statement, found {t.text!r}")
        if self.terms:
            self.model.density = C.canonicalize(Sum(tuple(self.terms)))
        return self.model

    def _check_new_name(self, tok: Token):
        if tok.text in RESERVED:
            raise self.error(f"{tok.text!r} is reserved", tok, DeclarationError)
        if tok.text in self.model.fields or tok.text in self.model.constants or tok.text in self.model.definitions:
            raise self.error(f"{tok.text!r} is already declared", tok, DeclarationError)

    def field_decl(self):
        self.advance()
        name = self.ident()
        self._check_new_name(name)
        self.expect(":")
        reality = self.ident()
        if reality.text not in ("real", "complex"):
            raise self.error("expected 'real' or 'complex'", reality)
        kind = self.ident()
        if kind.text not in KINDS:
            raise self.error(f"expected one of {', '.join(KINDS)}", kind)
        symmetry = None
        if self.tok.text in ("symmetric", "antisymmetric"):
            if kind.text != "tensor":
                raise self.error("symmetry tags apply to tensor fields", self.tok, DeclarationError)
            symmetry = self.advance().text
        dim = None
        if self.accept("dim"):
            dim = Dimension(self.rational())
        self.model.fields[name.text] = FieldSymbol(name.text, kind.text, reality.text, dim, symmetry)

    def const_decl(self):
        self.advance()
        name = self.ident()
        self._check_new_name(name)
        dim = None
        if self.accept("dim"):
            dim = Dimension(self.rational())
        self.model.constants[name.text] = dim

    def define(self):
        self.advance()
        name = self.ident()
        self._check_new_name(name)
        indices = self.index_groups()
        self.expect(":=")
        start = self.tok
        try:
            body = C.canonicalize(self.expr())
        except IndexDisciplineError as exc:
            raise IndexDisciplineError(f"{start.line}:{start.col}: {exc}") from None
        got = C.free_indices(body)
        if set(got) != set(indices):
            raise self.error(f"definition of {name.text} has free indices "
                             f"{sorted(str(i) for i in got)}, declared {sorted(str(i) for i in indices)}",
                             name, DeclarationError)
        self.model.definitions[name.text] = Definition(name.text, tuple(indices), body)

    # expressions
    def index_groups(self) -> list:
        out = []
        while self.tok.text in ("_", "^") and self.peek().text == "{":
            upper = self.advance().text == "^"
            self.advance()
            if self.tok.text == "}":
                raise self.error("empty index group")
            while self.tok.text != "}":
                t = self.ident()
                out.append(Index(t.text, upper))
            self.advance()
        return out

    def expr(self) -> Expr:
        self.accept("+")
        terms = [self.term()]
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            neg = self.advance().text == "-"
            t = self.term()
            terms.append(-t if neg else t)
        return terms[0] if len(terms) == 1 else Sum(tuple(terms))

    def term(self) -> Expr:
        factors = [self.unary()]
        while self.accept("*"):
            factors.append(self.unary())
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def unary(self) -> Expr:
        if self.accept("-"):
            return -self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        while self.tok.text == "^" and self.peek().text != "{":
            self.advance()
            neg = self.accept("-")
            if self.tok.kind != "num" or "/" in self.tok.text:
                raise self.error("expected an integer exponent")
            n = int(self.advance().text)
            base = Power(base, -n if neg else n)
        return base

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Rational(Fraction(t.text))
        if t.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind != "ident":
            raise self.error(f"unexpected {t.text or 'end of input'!r}")
        self.advance()
        name = t.text
        if name == "d":
            idx = self.index_groups()
            if not idx:
                raise self.error("derivative needs an index group", t)
            self.expect("(")
            e = self.expr()
            self.expect(")")
            for i in idx:
                e = C.differentiate(e, i)
            return e
        if name == "conj":
            self.expect("(")
            inner_tok = self.tok
            e = self.expr()
            self.expect(")")
            if isinstance(e, Field):
                if e.is_spinor:
                    raise self.error(f"use {e.name}bar for the Dirac adjoint", inner_tok, DeclarationError)
                if e.real:
                    raise self.error(f"conj of real field {e.name!r}", inner_tok, DeclarationError)
            return Conjugate(e)
        idx = self.index_groups()
        return self.resolve(t, name, idx)

    def resolve(self, t: Token, name: str, idx: list) -> Expr:
        def arity(n):
            if len(idx) != n:
                raise self.error(f"{name} takes {n} indices, got {len(idx)}", t, DeclarationError)

        if name == "i":
            arity(0)
            return I
        if name == "pi":
            arity(0)
            return Const("pi")
        if name == "g":
            arity(2)
            return Metric(idx[0], idx[1])
        if name == "gamma":
            arity(1)
            return FormalGamma(idx[0])
        m = self.model
        if name in m.fields:
            f = m.fields[name]
            arity(f.arity)
            return f.atom(idx)
        if name.endswith("bar") and name[:-3] in m.fields and m.fields[name[:-3]].kind == "spinor":
            arity(0)
            return m.fields[name[:-3]].atom(conj=True)
        if name in m.constants:
            arity(0)
            return Const(name)
        if name in m.definitions:
            try:
                return _instantiate_definition(m.definitions[name], idx)
            except IndexDisciplineError as exc:
                raise self.error(str(exc), t, DeclarationError) from None
        raise self.error(f"undeclared symbol {name!r}", t, UndeclaredSymbolError)


def parse(text: str, name: str = "") -> LagrangianModel:
    """Parse a ``.lagr`` document into a model with a canonical density."""
    p = Parser(text)
    model = p.parse_model()
    model.name = name
    return model


def parse_expr(text: str, model: Optional[LagrangianModel] = None) -> Expr:
    """Parse a bare expression against a model's declarations (not canonicalized)."""
    p = Parser(text, model or LagrangianModel())
    e = p.expr()
    if p.tok.kind != "eof":
        raise p.error(f"unexpected {p.tok.text!r} after expression")
    return e


# --------------------------------------------------------------------------
# rendering

_DUMMY_NAMES = ["alpha", "beta", "lambda", "sigma", "rho", "kappa", "tau", "eta", "xi", "zeta"]
_PRETTY_DUMMIES = ["α", "β", "λ", "σ", "ρ", "κ", "τ", "η", "ξ", "ζ"]


def _dummy_names(monos, pool) -> dict:
    taken = set()
    for m in monos:
        taken |= {i.name for i in C.mono_free_indices(m)}
    avail = [n for n in pool if n not in taken]
    k = 1
    while len(avail) < 40:
        cand = f"a{k}"
        if cand not in taken:
            avail.append(cand)
        k += 1
    return avail


def _fmt_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class _Renderer:
    mul = "*"
    pretty = False

    def __init__(self, pool):
        self.pool = pool

    def name_map(self, m: C.Mono) -> dict:
        counts = C.mono_slot_counts(m.atoms)
        dummies = sorted((n for n, k in counts.items() if k == 2), key=lambda n: (len(n), n))
        return {n: self.pool[k] for k, n in enumerate(dummies)}

    def idx_groups(self, indices, names) -> str:
        out = []
        for i in indices:
            nm = names.get(i.name, i.name)
            mark = "^" if i.up else "_"
            if out and out[-1][0] == mark:
                out[-1][1].append(nm)
            else:
                out.append((mark, [nm]))
        return "".join(f"{mark}{{{' '.join(ns)}}}" for mark, ns in out)

    def field(self, f: Field, names) -> str:
        if f.conj:
            base = f"{f.name}bar" if f.is_spinor else f"conj({f.name})"
        else:
            base = f.name
        base += self.idx_groups(f.indices, names)
        return self.wrap_derivs(base, list(f.derivs), names)

    def wrap_derivs(self, base: str, derivs, names) -> str:
        groups = []
        for i in derivs:
            if groups and groups[-1][0] == i.up:
                groups[-1][1].append(i)
            else:
                groups.append((i.up, [i]))
        for upper, idx in reversed(groups):
            base = f"d{self.idx_groups(idx, names)}({base})"
        return base

    def atom(self, a, names) -> str:
        if isinstance(a, Field):
            return self.field(a, names)
        if isinstance(a, Metric):
            return "g" + self.idx_groups([a.a, a.b], names)
        if isinstance(a, C.SpinorSandwich):
            parts = []
            if a.left is not None:
                parts.append(self.field(a.left, names))
            parts += ["gamma" + self.idx_groups([i], names) for i in C.gamma_string(a.inner)]
            if a.right is not None:
                parts.append(self.field(a.right, names))
            return self.mul.join(parts) if parts else "1"
        raise TypeError(a)

    def power(self, base: str, p: int) -> str:
        return base if p == 1 else f"{base}^{p}"

    def mono_body(self, m: C.Mono) -> tuple:
        """(sign, magnitude text) for a monomial."""
        names = self.name_map(m)
        c = m.coeff
        parts = []
        sign = 1
        if c.im == 0:
            mag = c.re
            if mag < 0:
                sign, mag = -1, -mag
            if mag != 1:
                parts.append(_fmt_fraction(mag))
        elif c.re == 0:
            mag = c.im
            if mag < 0:
                sign, mag = -1, -mag
            if mag != 1:
                parts.append(_fmt_fraction(mag))
            parts.append("i")
        else:
            parts.append(f"({_fmt_fraction(c.re)} + {_fmt_fraction(c.im)}{self.mul}i)")
        for n, p in m.consts:
            parts.append(self.power(self.const_name(n), p))
        rendered = [self.atom(a, names) for a in m.atoms]
        k = 0
        while k < len(rendered):
            j = k
            while j + 1 < len(rendered) and rendered[j + 1] == rendered[k]:
                j += 1
            parts.append(self.power(rendered[k], j - k + 1))
            k = j + 1
        if not parts:
            parts = ["1"]
        return sign, self.mul.join(parts)

    def const_name(self, n: str) -> str:
        return n

    def sum(self, monos) -> str:
        out = ""
        for k, m in enumerate(monos):
            sign, body = self.mono_body(m)
            if k == 0:
                out = ("-" if sign < 0 else "") + body
            else:
                out += (" - " if sign < 0 else " + ") + body
        return out

    def render(self, monos) -> str:
        if not monos:
            return "0"
        if len(monos) > 1 and all(m.coeff.re == 0 for m in monos):
            inner = [C.Mono(m.coeff * C.Coeff(Fraction(0), Fraction(-1)), m.consts, m.atoms) for m in monos]
            return f"i{self.mul}({self.sum(inner)})"
        return self.sum(monos)


_GREEK = {n: g for n, g in zip(
    ["mu", "nu", "alpha", "beta", "lambda", "sigma", "rho", "kappa", "tau", "eta", "xi", "zeta"],
    ["μ", "ν", "α", "β", "λ", "σ", "ρ", "κ", "τ", "η", "ξ", "ζ"])}
_SUPERSCRIPT = str.maketrans("0123456789-", "⁰¹²³⁴⁵⁶⁷⁸⁹⁻")


class _PrettyRenderer(_Renderer):
    mul = "·"
    pretty = True

    def idx_groups(self, indices, names) -> str:
        out = []
        for i in indices:
            nm = names.get(i.name, i.name)
            nm = _GREEK.get(nm, nm)
            mark = "^" if i.up else "_"
            if out and out[-1][0] == mark:
                out[-1][1].append(nm)
            else:
                out.append((mark, [nm]))
        return "".join(mark + (ns[0] if len(ns) == 1 else "{" + "".join(ns) + "}") for mark, ns in out)

    def wrap_derivs(self, base: str, derivs, names) -> str:
        derivs = list(derivs)
        boxes = 0
        while True:
            pair = next((n for n in {i.name for i in derivs}
                         if sum(1 for i in derivs if i.name == n) == 2), None)
            if pair is None:
                break
            derivs = [i for i in derivs if i.name != pair]
            boxes += 1
        prefix = "".join(f"∂{self.idx_groups([i], names)}" for i in derivs)
        out = "□" * boxes + base
        return f"{prefix}({out})" if prefix else out

    def atom(self, a, names) -> str:
        if isinstance(a, Metric):
            return "g" + self.idx_groups([a.a, a.b], names)
        if isinstance(a, C.SpinorSandwich):
            parts = []
            if a.left is not None:
                parts.append(self.field(a.left, names))
            parts += ["γ" + self.idx_groups([i], names) for i in C.gamma_string(a.inner)]
            if a.right is not None:
                parts.append(self.field(a.right, names))
            return self.mul.join(parts) if parts else "1"
        return super().atom(a, names)

    def field(self, f: Field, names) -> str:
        if f.conj:
            base = f"{f.name}̄" if f.is_spinor else f"{f.name}*"
        else:
            base = f.name
        base += self.idx_groups(f.indices, names)
        return self.wrap_derivs(base, list(f.derivs), names)

    def power(self, base: str, p: int) -> str:
        return base if p == 1 else base + str(p).translate(_SUPERSCRIPT)

    def const_name(self, n: str) -> str:
        return "π" if n == "pi" else n


def render(e: Expr) -> str:
    """DSL text for an expression; parsing it back gives the same canonical form."""
    monos = C.canonical_monos(e)
    return _Renderer(_dummy_names(monos, _DUMMY_NAMES)).render(monos)


def pretty(e: Expr) -> str:
    """Unicode rendering for human-facing reports (□, superscripts, ·)."""
    monos = C.canonical_monos(e)
    return _PrettyRenderer(_dummy_names(monos, _PRETTY_DUMMIES)).render(monos)


def render_model(model: LagrangianModel) -> str:
    """Serialize a model back to DSL text (declarations plus canonical density)."""
    lines = []
    for f in model.fields.values():
        line = f"field {f.name}: {f.reality} {f.kind}"
        if f.symmetry:
            line += f" {f.symmetry}"
        if f.dimension is not None:
            line += f" dim {_fmt_fraction(f.dimension.exponent)}"
        lines.append(line)
    for c, dim in model.constants.items():
        lines.append(f"const {c}" + (f" dim {_fmt_fraction(dim.exponent)}" if dim is not None else ""))
    for a in sorted(model.assumptions):
        lines.append(f"assume {a}")
    for d in model.definitions.values():
        idx = _Renderer(_DUMMY_NAMES).idx_groups(d.indices, {})
        lines.append(f"def {d.name}{idx} := {render(d.body)}")
    lines.append(f"L = {render(model.density)}")
    return "\n".join(lines) + "\n"
