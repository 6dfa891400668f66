"""Euler-Lagrange variation and the audits built on it.

Partial derivatives with respect to a field or its first derivative are
taken occurrence by occurrence: the occurrence is removed and its index
slots are tied to the target's slots with metric factors, so that
``d(A^a A_a)/dA_mu`` comes out as ``2 A^mu`` after contraction.

Complex fields are varied as two independent fields (``phi`` and
``conj(phi)``), and a Dirac spinor ``psi`` is varied through its adjoint
``psibar``. Spinor bilinears are carried formally; no gamma-matrix algebra
beyond linearity is done.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from . import canonical as C
from .errors import DeclarationError, FieldLintError, ReductionError, UnsupportedOrderError
from .expr import (
    Coeff, Const, Expr, Field, Index, Metric, Product, Rational, SpinorSandwich, Sum, gamma_string,
    gammas_expr,
)
from .report import Check

FREE_NAMES = ("mu", "nu")
MAX_REDUCTION_STEPS = 50


@dataclass(frozen=True)
class FieldEquation:
    """``lhs = 0`` obtained by varying ``field`` (its conjugate when ``conj``)."""

    lhs: Expr
    field: "object"
    conj: bool = False
    assumptions_used: frozenset = frozenset()
    raw_terms: tuple = ()
    lhs_before_assumptions: Optional[Expr] = None
    display: Optional[Expr] = None

    @property
    def varied(self) -> str:
        name = self.field.name
        if not self.conj:
            return name
        return f"{name}bar" if self.field.kind == "spinor" else f"conj({name})"

    def text(self) -> str:
        from .dsl import pretty
        return f"{pretty(self.display if self.display is not None else self.lhs)} = 0"


# --------------------------------------------------------------------------
# partial derivatives of monomial lists

def _target(sym, conj: bool, tensor: Sequence[Index], derivs: Sequence[Index] = ()) -> Field:
    return Field(sym.name, tuple(tensor), tuple(derivs), conj, sym.kind, sym.real, sym.symmetry)


def _matches(occ: Field, target: Field) -> bool:
    return (occ.name == target.name and occ.conj == target.conj
            and len(occ.derivs) == len(target.derivs) and len(occ.indices) == len(target.indices))


def _occurrences(atom):
    """(what is left of the atom, removed field) for every field slot in it."""
    if isinstance(atom, Field):
        yield None, atom
    elif isinstance(atom, SpinorSandwich):
        if atom.left is not None:
            yield SpinorSandwich(None, atom.inner, atom.right), atom.left
        if atom.right is not None:
            yield SpinorSandwich(atom.left, atom.inner, None), atom.right


def partial_monos(monos: Iterable[C.Mono], target: Field) -> list:
    """Raw (uncollected) monomials of the partial derivative w.r.t. ``target``.

    The result carries the target's slots with opposite variance.
    """
    tslots = list(target.indices) + list(target.derivs)
    out = []
    for m in monos:
        for k, a in enumerate(m.atoms):
            for rest, occ in _occurrences(a):
                if not _matches(occ, target):
                    continue
                ties = tuple(Metric(Index(s.name, s.up), Index(t.name, not t.up))
                             for s, t in zip(C.slots(occ), tslots))
                left = m.atoms[:k] + ((rest,) if rest is not None else ()) + m.atoms[k + 1:]
                out.append(C.Mono(m.coeff, m.consts, left + ties))
    return out


def partial(e: Expr, target: Field) -> Expr:
    """Canonical partial derivative of ``e`` w.r.t. a field occurrence pattern."""
    return C.to_expr(C.collect(partial_monos(C.canonical_monos(e), target)))


def _check_order(monos, name: str) -> None:
    for m in monos:
        for a in m.atoms:
            for f in C.atom_fields(a):
                if f.name == name and len(f.derivs) > 1:
                    raise UnsupportedOrderError(
                        f"density contains second derivatives of {name}; only first-order "
                        "Lagrangians are supported")


# --------------------------------------------------------------------------
# assumptions

def _lorenz_violations(m: C.Mono, vectors: set) -> bool:
    for a in m.atoms:
        for f in C.atom_fields(a):
            if f.name in vectors and f.indices:
                names = {i.name for i in f.derivs}
                if f.indices[0].name in names:
                    return True
    return False


def apply_assumptions(monos: Sequence[C.Mono], model) -> tuple:
    """Apply the model's declared assumptions; returns (monos, used set)."""
    used = set()
    if "lorenz_gauge" in model.assumptions:
        vectors = {n for n, f in model.fields.items() if f.kind == "vector"}
        kept = [m for m in monos if not _lorenz_violations(m, vectors)]
        if len(kept) != len(monos):
            used.add("lorenz_gauge")
        monos = kept
    return list(monos), frozenset(used)


# --------------------------------------------------------------------------
# variation

def _symbol(model, f):
    if isinstance(f, str):
        if f not in model.fields:
            raise DeclarationError(f"no field named {f!r} in the model")
        return model.fields[f]
    return f


def euler_lagrange(model, f, conj: bool = False) -> FieldEquation:
    """``d_mu(dL/df_{,mu}) - dL/df`` for the field ``f`` (or its conjugate).

    A field that enters the density without derivatives (the adjoint spinor
    in a first-order Dirac density) has the algebraic equation ``dL/df = 0``.
    """
    sym = _symbol(model, f)
    if conj and sym.real and sym.kind != "spinor":
        raise DeclarationError(f"cannot vary conj({sym.name}): {sym.name} is real")
    monos = C.canonical_monos(model.density)
    _check_order(monos, sym.name)

    tensor = [Index(n, False) for n in FREE_NAMES[:sym.arity]]
    kappa = Index(C.fresh_name(), False)
    t0 = _target(sym, conj, tensor)
    t1 = _target(sym, conj, tensor, (kappa,))

    momentum = [c for c in (C.canonical_mono(x) for x in partial_monos(monos, t1)) if c is not None]
    value = [c for c in (C.canonical_mono(x) for x in partial_monos(monos, t0)) if c is not None]
    if momentum:
        raw = []
        for p in momentum:
            raw.extend(C._d_mono(p, kappa))
        raw += [q.scaled(Coeff.of(-1)) for q in value]
    else:
        raw = list(value)
    raw = [c for c in (C.canonical_mono(x) for x in raw) if c is not None]
    before = C.collect(raw)
    after, used = apply_assumptions(before, model)
    return FieldEquation(
        lhs=C.to_expr(after), field=sym, conj=conj, assumptions_used=used,
        raw_terms=tuple(C.mono_expr(x) for x in raw), lhs_before_assumptions=C.to_expr(before))


def _potential(model, potential: Optional[str]):
    if potential is None:
        vectors = [f for f in model.fields.values() if f.kind == "vector"]
        if len(vectors) != 1:
            raise DeclarationError("model must declare exactly one vector potential (or name it)")
        return vectors[0]
    sym = _symbol(model, potential)
    if sym.kind != "vector":
        raise DeclarationError(f"{sym.name} is not a vector field")
    return sym


def _is_free_em(m: C.Mono, name: str) -> bool:
    fields = [f for a in m.atoms for f in C.atom_fields(a)]
    return bool(fields) and all(f.name == name and f.derivs for f in fields) and \
        all(isinstance(a, (Field, Metric)) for a in m.atoms)


def _field_strength_divergence(model, name: str) -> Optional[tuple]:
    """Find a two-index definition equal to d_a A_b - d_b A_a; return its
    name and the divergence d_nu F^{mu nu} expanded in the potential."""
    a = model.fields[name]
    mu, nu = Index("mu", True), Index("nu", True)
    for d in model.definitions.values():
        if len(d.indices) != 2:
            continue
        ref = (C.differentiate(a.atom([Index("nu", False)]), Index("mu", False))
               - C.differentiate(a.atom([Index("mu", False)]), Index("nu", False)))
        body = model.definition(d.name, Index("mu", False), Index("nu", False))
        if C.equivalent(body, ref):
            div = C.differentiate(model.definition(d.name, mu, nu), Index("nu", False))
            return d.name, div
    return None


def _fold_definition(rest: Expr, model, name: str):
    """Pull ``k * D^mu`` out of ``rest`` when every monomial of the
    definition appears with one common factor; returns (remainder, k*D)."""
    body = C.canonical_monos(model.definition(name, Index("mu", True)))
    have = C.canonical_monos(rest)
    if not body:
        return None
    lead = body[0]
    for r in have:
        if r.atoms != lead.atoms:
            continue
        ratio = r.coeff * lead.coeff.inverse()
        consts = dict(r.consts)
        for n, p in lead.consts:
            consts[n] = consts.get(n, 0) - p
        factor = C.Mono(ratio, tuple(sorted(((n, p) for n, p in consts.items() if p),
                                            key=lambda t: C.const_key(t[0]))))
        scaled = C.mono_expr(factor)
        remainder = C.canonicalize(rest - scaled * model.definition(name, Index("mu", True)))
        if len(C.canonical_monos(remainder)) == len(have) - len(body):
            sym = Field(name, (Index("mu", True),), kind="vector")
            return remainder, Product((scaled, sym))
    return None


def derive_em_equation(model, potential: Optional[str] = None) -> FieldEquation:
    """Vary the potential in a density containing the free term
    ``-1/(16 pi) F^2``; the equation is scaled by ``4 pi`` so that the field
    strength divergence appears with unit coefficient."""
    sym = _potential(model, potential)
    monos = C.canonical_monos(model.density)
    for m in monos:
        if _is_free_em(m, sym.name):
            continue
        for a in m.atoms:
            for f in C.atom_fields(a):
                if f.name == sym.name and f.derivs:
                    raise UnsupportedOrderError(
                        f"interaction term depends on derivatives of {sym.name}; not supported")
    eq = euler_lagrange(model, sym)
    scale = Product((Rational(4), Const("pi")))
    lhs = C.canonicalize(scale * eq.lhs)
    before = C.canonicalize(scale * eq.lhs_before_assumptions)
    display = None
    found = _field_strength_divergence(model, sym.name)
    if found is not None:
        fname, div = found
        rest = C.canonicalize(lhs - div)
        k = C.fresh_name()
        fsym = Field(fname, (Index("mu", True), Index(k, True)), (Index(k, False),),
                     kind="tensor", real=True, symmetry="antisymmetric")
        parts = [fsym]
        for d in model.definitions.values():
            if len(d.indices) == 1:
                hit = _fold_definition(rest, model, d.name)
                if hit is not None:
                    rest, folded = hit
                    parts.append(folded)
        if not C.is_zero(rest):
            parts.append(rest)
        display = parts[0] if len(parts) == 1 else Sum(tuple(parts))
    return FieldEquation(lhs=lhs, field=sym, assumptions_used=eq.assumptions_used,
                         raw_terms=tuple(C.canonicalize(scale * t) for t in eq.raw_terms),
                         lhs_before_assumptions=before, display=display)


# --------------------------------------------------------------------------
# gauge shift

@dataclass(frozen=True)
class GaugeResult:
    invariant: bool
    witness: Expr

    def check(self, name: str = "gauge invariance") -> Check:
        from .dsl import render
        return Check.expect(name, self.invariant, render(self.witness))


def gauge_shift(e: Expr, potential: str = "A", gauge: str = "chi") -> Expr:
    """Apply ``A_mu -> A_mu + d_mu(chi)`` with a fresh real scalar ``chi``."""
    p = Index(C.fresh_name(), False)
    pat = Field(potential, (p,), kind="vector")
    chi = Field(gauge, (), (p,))
    return C.substitute(e, {pat: pat + chi})


def gauge_check(eq: Union[FieldEquation, Expr], potential: str = "A", gauge: str = "chi") -> GaugeResult:
    """Invariant iff the gauge-shifted lhs equals the original; the witness
    is the difference (zero when invariant)."""
    lhs = eq.lhs if isinstance(eq, FieldEquation) else eq
    if isinstance(eq, FieldEquation) and eq.field.kind == "vector":
        potential = eq.field.name
    witness = C.canonicalize(gauge_shift(lhs, potential, gauge) - lhs)
    return GaugeResult(C.is_zero(witness), witness)


# --------------------------------------------------------------------------
# charge audit

@dataclass(frozen=True)
class ChargeAudit:
    degrees: dict  # rendered term -> degree in the charge
    mixed: bool

    @property
    def interaction_degrees(self) -> set:
        return {d for d in self.degrees.values() if d > 0}


def charge_degree_audit(model, charge: str = "e") -> ChargeAudit:
    """Degree of every density term in the charge; an interaction mixing
    degrees 1 and 2 is flagged."""
    from .dsl import render

    degrees = {}
    for m in C.canonical_monos(model.density):
        degrees[render(C.mono_expr(m))] = m.const_powers.get(charge, 0)
    inter = {d for d in degrees.values() if d > 0}
    return ChargeAudit(degrees, len(inter) > 1)


# --------------------------------------------------------------------------
# on-shell reduction

def _box_rule(lhs_monos: list, sym, conj: bool):
    """Solve ``lhs = 0`` for the d'Alembertian of the field."""
    hits = []
    for k, m in enumerate(lhs_monos):
        if len(m.atoms) != 1 or not isinstance(m.atoms[0], Field):
            continue
        f = m.atoms[0]
        if f.name == sym.name and f.conj == conj and not f.indices and len(f.derivs) == 2 \
                and f.derivs[0].name == f.derivs[1].name:
            hits.append(k)
    if len(hits) != 1:
        return None
    k = hits[0]
    c = lhs_monos[k].coeff
    rest = [m.scaled(Coeff.of(-1) * c.inverse()) for j, m in enumerate(lhs_monos) if j != k]
    p = C.fresh_name()
    pat = Field(sym.name, (), (Index(p, True), Index(p, False)), conj, sym.kind, sym.real)
    return pat, C.to_expr(rest)


@dataclass(frozen=True)
class _SpinorRule:
    name: str
    side: str  # "right": gamma^a psi_{,a};  "left": psibar_{,a} gamma^a
    replacement: tuple  # of (coeff, consts, gammas, derivs)


def _spinor_rule(lhs_monos: list, sym, conj: bool) -> Optional[_SpinorRule]:
    side = "left" if conj else "right"
    lead, rest = None, []
    for m in lhs_monos:
        if len(m.atoms) != 1 or not isinstance(m.atoms[0], SpinorSandwich):
            return None
        s = m.atoms[0]
        spinor = s.left if conj else s.right
        other = s.right if conj else s.left
        if other is not None or spinor is None or spinor.name != sym.name:
            return None
        gs = gamma_string(s.inner)
        edge = (gs[0] if gs else None) if conj else (gs[-1] if gs else None)
        if edge is not None and len(spinor.derivs) == 1 and spinor.derivs[0].name == edge.name:
            if lead is not None:
                return None
            lead = m
        else:
            rest.append((m, gs, spinor.derivs))
    if lead is None:
        return None
    inv = Coeff.of(-1) * lead.coeff.inverse()
    repl = tuple((m.coeff * inv, m.consts, gs, ds) for m, gs, ds in rest)
    return _SpinorRule(sym.name, side, repl)


def _apply_spinor_rule(m: C.Mono, rule: _SpinorRule) -> Optional[list]:
    for k, a in enumerate(m.atoms):
        if not isinstance(a, SpinorSandwich):
            continue
        gs = gamma_string(a.inner)
        if not gs:
            continue
        if rule.side == "right":
            sp, edge, others = a.right, gs[-1], gs[:-1]
        else:
            sp, edge, others = a.left, gs[0], gs[1:]
        if sp is None or sp.name != rule.name:
            continue
        if edge.name not in {i.name for i in sp.derivs}:
            continue
        remaining = tuple(i for i in sp.derivs if i.name != edge.name)
        out = []
        for coeff, consts, rgs, rds in rule.replacement:
            new_sp = sp.with_(derivs=tuple(rds) + remaining)
            if rule.side == "right":
                s = SpinorSandwich(a.left, gammas_expr(tuple(others) + tuple(rgs)), new_sp)
            else:
                s = SpinorSandwich(new_sp, gammas_expr(tuple(rgs) + tuple(others)), a.right)
            out.append(C.Mono(m.coeff * coeff, C._mul_consts(m.consts, consts),
                              m.atoms[:k] + (s,) + m.atoms[k + 1:]))
        return out
    return None


def _rules_from(eqs: Iterable[FieldEquation]):
    scalar, spinor = {}, []
    for eq in eqs:
        sym = eq.field
        monos = C.canonical_monos(eq.lhs)
        # an equation for phi also holds conjugated, which governs conj(phi)
        conj_monos = C.collect(C.conjugate_mono(m) for m in monos)
        for ms in (monos, conj_monos):
            for cj in (False, True):
                if sym.kind == "spinor":
                    r = _spinor_rule(ms, sym, cj)
                    if r is not None and r not in spinor:
                        spinor.append(r)
                else:
                    r = _box_rule(ms, sym, cj)
                    if r is not None and r[0] not in scalar:
                        scalar[r[0]] = r[1]
    return scalar, spinor


def on_shell_reduce(e: Expr, eqs: Sequence[FieldEquation]) -> Expr:
    """Substitute each equation solved for its highest-derivative term
    (``box phi``, ``gamma^a psi_{,a}`` and their conjugates) until nothing
    changes."""
    scalar, spinor = _rules_from(eqs)
    cur = C.canonicalize(e)
    if not scalar and not spinor:
        return cur
    for _ in range(MAX_REDUCTION_STEPS):
        nxt = C.substitute(cur, scalar) if scalar else cur
        if spinor:
            out = []
            for m in C.canonical_monos(nxt):
                for r in spinor:
                    hit = _apply_spinor_rule(m, r)
                    if hit is not None:
                        out.extend(hit)
                        break
                else:
                    out.append(m)
            nxt = C.to_expr(C.collect(out))
        if nxt == cur:
            return cur
        cur = nxt
    raise ReductionError(f"on-shell reduction did not reach a fixpoint in {MAX_REDUCTION_STEPS} steps")


def divergence(e: Expr, index: Optional[Index] = None) -> Expr:
    """``d_mu e^mu`` for an expression with exactly one free index."""
    free = C.free_indices(e)
    if len(free) != 1:
        raise FieldLintError("divergence needs exactly one free index")
    (i,) = free
    return C.differentiate(e, Index(i.name, not i.up))


# --------------------------------------------------------------------------
# stress-energy

def stress_energy(model, f, lower: bool = False) -> Expr:
    """Canonical tensor ``T^{mu nu} = dL/df_{,mu} f^{,nu} - L g^{mu nu}``.

    Complex fields contribute through both ``f`` and ``conj(f)``; vector
    indices of the field are summed. With ``lower`` the result is
    ``T_{mu nu}``.
    """
    sym = _symbol(model, f)
    monos = C.canonical_monos(model.density)
    _check_order(monos, sym.name)
    mu, nu = Index("mu", True), Index("nu", True)
    terms = []
    targets = [False] if sym.real and sym.kind != "spinor" else [False, True]
    for cj in targets:
        tensor = [Index(C.fresh_name(), False) for _ in range(sym.arity)]
        t1 = _target(sym, cj, tensor, (Index("mu", False),))
        mom = C.to_expr(C.collect(partial_monos(monos, t1)))
        if C.is_zero(mom):
            continue
        grad = _target(sym, cj, tensor, (nu,))
        terms.append(Product((mom, grad)))
    terms.append(-Product((model.density, Metric(mu, nu))))
    t = C.canonicalize(Sum(tuple(terms)))
    if lower:
        t = C.rename_index(t, mu, Index("mu", False))
        t = C.rename_index(t, nu, Index("nu", False))
    return t


# --------------------------------------------------------------------------
# hermiticity

def hermiticity_check(e: Expr, name: str = "hermiticity") -> Check:
    """Pass iff the term equals its own complex conjugate."""
    from .dsl import render

    diff = C.canonicalize(C.conjugate(e) - e)
    if C.is_zero(diff):
        return Check(name, "pass", render(C.canonicalize(e)))
    return Check(name, "fail", f"conj(L) - L = {render(diff)}")
