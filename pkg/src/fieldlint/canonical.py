"""Expansion to monomials and canonical normal form.

An expression is expanded into :class:`Mono` values (exact Gaussian-rational
coefficient, constant powers, ordered tensor atoms). Canonicalizing a
monomial forms spinor sandwiches, contracts metrics, renames dummy pairs to
the reserved ``ι1, ι2, ...`` sequence and picks the lexicographically least
representative over all factor orderings and slot symmetries. A monomial that
is reachable with both signs (symmetric slots contracted into antisymmetric
ones) is zero.
"""
from __future__ import annotations

import itertools
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence

from .errors import FieldLintError, IndexDisciplineError
from .expr import (
    CANONICAL_PREFIX, FRESH_PREFIX, IMAG, ONE, Coeff, Conjugate, Const, Expr, Field,
    FormalGamma, I, ImaginaryUnit, Index, Metric, Partial, Power, Product, Rational,
    SpinorSandwich, Sum, gamma_string, gammas_expr,
)

log = logging.getLogger(__name__)

MAX_CANDIDATES = 200_000
_fresh_counter = itertools.count(1)


def fresh_name() -> str:
    return f"{FRESH_PREFIX}{next(_fresh_counter)}"


def const_key(name: str):
    # pi is rendered next to the numeric coefficient
    return (0 if name == "pi" else 1, name)


@dataclass(frozen=True)
class Mono:
    coeff: Coeff
    consts: tuple = ()
    atoms: tuple = ()

    @property
    def const_powers(self) -> dict:
        return dict(self.consts)

    def deriv_order(self) -> int:
        n = 0
        for a in self.atoms:
            for f in atom_fields(a):
                n += len(f.derivs)
        return n

    def scaled(self, c: Coeff) -> "Mono":
        return Mono(self.coeff * c, self.consts, self.atoms)


# --------------------------------------------------------------------------
# slot access

def atom_fields(atom) -> list:
    if isinstance(atom, Field):
        return [atom]
    if isinstance(atom, SpinorSandwich):
        return [f for f in (atom.left, atom.right) if f is not None]
    return []


def slots(atom) -> list:
    if isinstance(atom, Field):
        return list(atom.indices) + list(atom.derivs)
    if isinstance(atom, Metric):
        return [atom.a, atom.b]
    if isinstance(atom, (FormalGamma, Partial)):
        return [atom.index]
    if isinstance(atom, SpinorSandwich):
        out = []
        if atom.left is not None:
            out += slots(atom.left)
        out += list(gamma_string(atom.inner))
        if atom.right is not None:
            out += slots(atom.right)
        return out
    raise TypeError(f"not a tensor atom: {atom!r}")


def with_slots(atom, new: Sequence[Index]):
    new = list(new)
    if isinstance(atom, Field):
        k = len(atom.indices)
        return atom.with_(indices=tuple(new[:k]), derivs=tuple(new[k:]))
    if isinstance(atom, Metric):
        return Metric(new[0], new[1])
    if isinstance(atom, FormalGamma):
        return FormalGamma(new[0])
    if isinstance(atom, Partial):
        return Partial(new[0])
    if isinstance(atom, SpinorSandwich):
        pos = 0
        left = right = None
        if atom.left is not None:
            n = len(slots(atom.left))
            left = with_slots(atom.left, new[pos:pos + n])
            pos += n
        g = len(gamma_string(atom.inner))
        inner = gammas_expr(new[pos:pos + g])
        pos += g
        if atom.right is not None:
            right = with_slots(atom.right, new[pos:])
        return SpinorSandwich(left, inner, right)
    raise TypeError(f"not a tensor atom: {atom!r}")


def map_slots(atom, fn: Callable[[Index], Index]):
    return with_slots(atom, [fn(i) for i in slots(atom)])


def mono_slot_counts(atoms: Iterable) -> Counter:
    c = Counter()
    for a in atoms:
        for i in slots(a):
            c[i.name] += 1
    return c


def rename_dummies_fresh(m: Mono) -> Mono:
    counts = mono_slot_counts(m.atoms)
    mapping = {n: fresh_name() for n, k in counts.items() if k == 2}
    if not mapping:
        return m
    atoms = tuple(map_slots(a, lambda i: Index(mapping.get(i.name, i.name), i.up)) for a in m.atoms)
    return Mono(m.coeff, m.consts, atoms)


# --------------------------------------------------------------------------
# expansion

def _mul_consts(a: tuple, b: tuple) -> tuple:
    if not b:
        return a
    if not a:
        return b
    d = dict(a)
    for name, p in b:
        d[name] = d.get(name, 0) + p
    return tuple(sorted(((n, p) for n, p in d.items() if p), key=lambda t: const_key(t[0])))


def _mul(a: Mono, b: Mono) -> Mono:
    return Mono(a.coeff * b.coeff, _mul_consts(a.consts, b.consts), a.atoms + b.atoms)


def _product(factor_lists: Iterable[list]) -> list:
    result = [Mono(ONE)]
    for fl in factor_lists:
        renamed = [rename_dummies_fresh(m) for m in fl]
        result = [_mul(a, b) for a in result for b in renamed]
        if not result:
            return []
    return result


def expand(e: Expr) -> list:
    """Raw monomial expansion; no canonicalization of individual terms."""
    if isinstance(e, Rational):
        return [Mono(Coeff.of(e.value))] if e.value else []
    if isinstance(e, ImaginaryUnit):
        return [Mono(IMAG)]
    if isinstance(e, Const):
        return [Mono(ONE, ((e.name, 1),))]
    if isinstance(e, (Field, Metric, FormalGamma, Partial)):
        return [Mono(ONE, (), (e,))]
    if isinstance(e, SpinorSandwich):
        parts = []
        if e.left is not None:
            parts.append([Mono(ONE, (), (e.left,))])
        parts.append(expand(e.inner))
        if e.right is not None:
            parts.append([Mono(ONE, (), (e.right,))])
        return _product(parts)
    if isinstance(e, Sum):
        out = []
        for t in e.terms:
            out.extend(expand(t))
        return out
    if isinstance(e, Product):
        return _product(expand(f) for f in e.factors)
    if isinstance(e, Power):
        if e.exp >= 0:
            base = expand(e.base)
            return _product(base for _ in range(e.exp))
        base = canonical_monos(e.base)
        if len(base) != 1 or base[0].atoms:
            raise FieldLintError("negative powers are only defined for constant monomials")
        m = base[0]
        inv = Mono(m.coeff.inverse(), tuple((n, -p) for n, p in m.consts))
        return _product([inv] for _ in range(-e.exp))
    if isinstance(e, Conjugate):
        return [conjugate_mono(m) for m in canonical_monos(e.arg)]
    raise TypeError(f"unknown expression node {e!r}")


# --------------------------------------------------------------------------
# per-monomial canonicalization

def _decompose_sandwich(s: SpinorSandwich) -> list:
    out = []
    if s.left is not None:
        out.append(s.left)
    out += [FormalGamma(i) for i in gamma_string(s.inner)]
    if s.right is not None:
        out.append(s.right)
    return out


def _form_sandwiches(stream: list) -> list:
    out = []
    left = None
    gammas: list = []
    partials: list = []
    started = False

    def flush(right=None):
        nonlocal left, gammas, started
        out.append(SpinorSandwich(left, gammas_expr(gammas), right))
        left, gammas, started = None, [], False

    for tok in stream:
        if isinstance(tok, Field) and tok.conj:
            if started:
                flush()
            left, started = tok, True
        elif isinstance(tok, FormalGamma):
            if partials:
                raise FieldLintError("derivative operator inside a sandwich must act on the right spinor")
            gammas.append(tok.index)
            started = True
        elif isinstance(tok, Partial):
            partials.append(tok.index)
            started = True
        else:
            right = tok.d(*partials) if partials else tok
            partials = []
            flush(right)
    if partials:
        raise FieldLintError("derivative operator with no spinor to act on")
    if started:
        flush()
    return out


def check_discipline(atoms: Iterable) -> None:
    seen: dict = {}
    for a in atoms:
        for i in slots(a):
            seen.setdefault(i.name, []).append(i.up)
    for name, ups in seen.items():
        if len(ups) > 2:
            raise IndexDisciplineError(f"index {name!r} occurs {len(ups)} times in one term")
        if len(ups) == 2 and ups[0] == ups[1]:
            pos = "upper" if ups[0] else "lower"
            raise IndexDisciplineError(f"index {name!r} is repeated as {pos} in both slots")


def _contract_metrics(atoms: list):
    atoms = list(atoms)
    factor = 1
    changed = True
    while changed:
        changed = False
        for i, a in enumerate(atoms):
            if not isinstance(a, Metric):
                continue
            if a.a.name == a.b.name:
                factor *= 4
                del atoms[i]
                changed = True
                break
            for own, other in ((a.a, a.b), (a.b, a.a)):
                hit = None
                for j, b in enumerate(atoms):
                    if j == i:
                        continue
                    for k, s in enumerate(slots(b)):
                        if s.name == own.name:
                            hit = (j, k)
                            break
                    if hit:
                        break
                if hit:
                    j, k = hit
                    sl = slots(atoms[j])
                    sl[k] = Index(other.name, other.up)
                    atoms[j] = with_slots(atoms[j], sl)
                    del atoms[i]
                    changed = True
                    break
            if changed:
                break
    return atoms, factor


def _index_key(i: Index):
    return (i.name, i.up)


def atom_key(a):
    if isinstance(a, Field):
        return (0, a.name, 0 if a.conj else 1, len(a.derivs), a.kind,
                tuple(_index_key(i) for i in a.indices), tuple(_index_key(i) for i in a.derivs))
    if isinstance(a, Metric):
        return (1, _index_key(a.a), _index_key(a.b))
    if isinstance(a, SpinorSandwich):
        return (2, atom_key(a.left) if a.left else (), tuple(_index_key(i) for i in gamma_string(a.inner)),
                atom_key(a.right) if a.right else ())
    raise TypeError(a)


def _shape_key(a, dummies: set):
    def sh(i):
        return (1,) if i.name in dummies else (0, i.name, i.up)

    if isinstance(a, Field):
        return (0, a.name, 0 if a.conj else 1, len(a.derivs), a.kind,
                tuple(sh(i) for i in a.indices), tuple(sorted(sh(i) for i in a.derivs)))
    if isinstance(a, Metric):
        return (1, tuple(sorted((sh(a.a), sh(a.b)))))
    if isinstance(a, SpinorSandwich):
        def side(f):
            if f is None:
                return ()
            return (f.name, f.conj, tuple(sh(i) for i in f.indices), tuple(sorted(sh(i) for i in f.derivs)))
        return (2, side(a.left), tuple(sh(i) for i in gamma_string(a.inner)), side(a.right))
    raise TypeError(a)


def _field_variants(f: Field, offset: int):
    """Slot permutations (over the field's own slots, shifted by offset) with signs."""
    k = len(f.indices)
    base = list(range(k))
    tensor = [(base, 1)]
    if f.symmetry in ("symmetric", "antisymmetric") and k >= 2:
        swapped = [1, 0] + base[2:]
        tensor.append((swapped, -1 if f.symmetry == "antisymmetric" else 1))
    derivs = list(itertools.permutations(range(k, k + len(f.derivs)))) or [()]
    out = []
    seen = set()
    for (t, s) in tensor:
        for d in derivs:
            perm = tuple(p + offset for p in t) + tuple(p + offset for p in d)
            if (perm, s) not in seen:
                seen.add((perm, s))
                out.append((perm, s))
    return out


def _variants(a):
    if isinstance(a, Field):
        return _field_variants(a, 0)
    if isinstance(a, Metric):
        return [((0, 1), 1), ((1, 0), 1)]
    if isinstance(a, SpinorSandwich):
        left = _field_variants(a.left, 0) if a.left is not None else [((), 1)]
        nl = len(slots(a.left)) if a.left is not None else 0
        g = len(gamma_string(a.inner))
        mid = tuple(range(nl, nl + g))
        right = _field_variants(a.right, nl + g) if a.right is not None else [((), 1)]
        return [(lp + mid + rp, ls * rs) for (lp, ls) in left for (rp, rs) in right]
    return [(tuple(range(len(slots(a)))), 1)]


def _best_variant(a):
    """Least representative of an atom with no dummy slots, and its sign."""
    best, signs = None, set()
    sl = slots(a)
    for perm, s in _variants(a):
        cand = with_slots(a, [sl[p] for p in perm])
        k = atom_key(cand)
        if best is None or k < best[0]:
            best, signs = (k, cand), {s}
        elif k == best[0]:
            signs.add(s)
    return best[1], (0 if len(signs) > 1 else signs.pop())


def _canonical_names(atoms: list):
    counts = mono_slot_counts(atoms)
    dummies = {n for n, k in counts.items() if k == 2}
    sign = 1
    plain, linked = [], []
    for a in atoms:
        if any(i.name in dummies for i in slots(a)):
            linked.append(a)
        else:
            c, s = _best_variant(a)
            if s == 0:
                return tuple(atoms), 0
            plain.append(c)
            sign *= s
    if not linked:
        return tuple(sorted(plain, key=atom_key)), sign

    # dummy-connected components are canonicalized independently, then ordered
    comps = _components(linked, dummies)
    solved = []
    for comp in comps:
        atoms_c, signs = _search(comp, dummies)
        if len(signs) > 1:
            return tuple(atoms), 0
        sign *= signs.pop()
        solved.append(atoms_c)
    solved.sort(key=lambda c: tuple(atom_key(x) for x in c))
    out, offset = [], 0
    for comp in solved:
        n = 0
        for a in comp:
            renamed = []
            for i in slots(a):
                if i.name.startswith(CANONICAL_PREFIX) and i.name[len(CANONICAL_PREFIX):].isdigit():
                    k = int(i.name[len(CANONICAL_PREFIX):])
                    n = max(n, k)
                    i = Index(f"{CANONICAL_PREFIX}{k + offset}", i.up)
                renamed.append(i)
            out.append(with_slots(a, renamed))
        offset += n
    return tuple(sorted(plain + out, key=atom_key)), sign


def _components(linked: list, dummies: set) -> list:
    parent = list(range(len(linked)))

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    owner: dict = {}
    for k, a in enumerate(linked):
        for i in slots(a):
            if i.name in dummies:
                if i.name in owner:
                    parent[find(k)] = find(owner[i.name])
                else:
                    owner[i.name] = k
    groups: dict = {}
    for k, a in enumerate(linked):
        groups.setdefault(find(k), []).append(a)
    return list(groups.values())


def _search(linked: list, dummies: set):
    """Brute-force the least relabeling of one connected component; returns
    the atoms (dummies named from 1) and the set of reachable signs."""
    keyed = sorted(linked, key=lambda a: _shape_key(a, dummies))
    groups = [list(g) for _, g in itertools.groupby(keyed, key=lambda a: _shape_key(a, dummies))]
    group_orders = [list(itertools.permutations(g)) for g in groups]
    variants = {id(a): _variants(a) for a in linked}

    total = 1
    for go in group_orders:
        total *= len(go)
    for a in linked:
        total *= len(variants[id(a)])
    if total > MAX_CANDIDATES:
        log.warning("monomial symmetry search truncated at %d of %d candidates", MAX_CANDIDATES, total)

    best_key = None
    best_atoms: list = []
    best_signs: set = set()
    tried = 0
    for order_groups in itertools.product(*group_orders):
        order = [a for grp in order_groups for a in grp]
        for choice in itertools.product(*(variants[id(a)] for a in order)):
            tried += 1
            if tried > MAX_CANDIDATES:
                break
            names: dict = {}
            new_atoms = []
            s_total = 1
            for a, (perm, s) in zip(order, choice):
                sl = slots(a)
                renamed = []
                for idx in (sl[p] for p in perm):
                    if idx.name in dummies:
                        if idx.name not in names:
                            names[idx.name] = f"{CANONICAL_PREFIX}{len(names) + 1}"
                            renamed.append(Index(names[idx.name], True))
                        else:
                            renamed.append(Index(names[idx.name], False))
                    else:
                        renamed.append(idx)
                new_atoms.append(with_slots(a, renamed))
                s_total *= s
            key = tuple(atom_key(x) for x in new_atoms)
            if best_key is None or key < best_key:
                best_key, best_atoms, best_signs = key, new_atoms, {s_total}
            elif key == best_key:
                best_signs.add(s_total)
        if tried > MAX_CANDIDATES:
            break
    return best_atoms, best_signs


def canonical_mono(m: Mono) -> Optional[Mono]:
    if not m.coeff:
        return None
    commuting, stream = [], []
    for a in m.atoms:
        if isinstance(a, Field) and a.is_spinor:
            stream.append(a)
        elif isinstance(a, (FormalGamma, Partial)):
            stream.append(a)
        elif isinstance(a, SpinorSandwich):
            stream.extend(_decompose_sandwich(a))
        else:
            commuting.append(a)
    atoms = commuting + _form_sandwiches(stream)
    check_discipline(atoms)
    atoms, factor = _contract_metrics(atoms)
    atoms, sign = _canonical_names(atoms)
    if sign == 0:
        return None
    return Mono(m.coeff * Coeff.of(factor * sign), m.consts, atoms)


def mono_sort_key(m: Mono):
    return (-m.deriv_order(), tuple(atom_key(a) for a in m.atoms),
            tuple((const_key(n), p) for n, p in m.consts))


def collect(monos: Iterable[Mono]) -> list:
    acc: dict = {}
    for m in monos:
        c = canonical_mono(m)
        if c is None:
            continue
        key = (c.consts, c.atoms)
        acc[key] = acc[key] + c.coeff if key in acc else c.coeff
    out = [Mono(c, k[0], k[1]) for k, c in acc.items() if c]
    out.sort(key=mono_sort_key)
    return out


def canonical_monos(e: Expr) -> list:
    monos = collect(expand(e))
    _check_free_agreement(monos)
    return monos


def _check_free_agreement(monos: Sequence[Mono]) -> None:
    first = None
    for m in monos:
        f = mono_free_indices(m)
        if first is None:
            first = f
        elif f != first:
            raise IndexDisciplineError(
                f"summands carry different free indices: {sorted(first)} vs {sorted(f)}")


# --------------------------------------------------------------------------
# back to expressions

def _coeff_factors(c: Coeff) -> list:
    if c.im == 0:
        return [] if c.re == 1 else [Rational(c.re)]
    if c.re == 0:
        if c.im == 1:
            return [I]
        return [Rational(c.im), I]
    return [Sum((Rational(c.re), Product((Rational(c.im), I))))]


def mono_expr(m: Mono) -> Expr:
    factors = _coeff_factors(m.coeff)
    for name, p in m.consts:
        factors.append(Const(name) if p == 1 else Power(Const(name), p))
    factors.extend(m.atoms)
    if not factors:
        return Rational(1)
    if len(factors) == 1:
        return factors[0]
    return Product(tuple(factors))


def to_expr(monos: Sequence[Mono]) -> Expr:
    if not monos:
        return Rational(0)
    if len(monos) == 1:
        return mono_expr(monos[0])
    return Sum(tuple(mono_expr(m) for m in monos))


def canonicalize(e: Expr) -> Expr:
    """Normal form: a sum of canonical monomials in deterministic order."""
    return to_expr(canonical_monos(e))


def is_zero(e: Expr) -> bool:
    return not canonical_monos(e)


def equivalent(a: Expr, b: Expr) -> bool:
    return is_zero(a - b)


# --------------------------------------------------------------------------
# conjugation

def _conj_atom(a):
    if isinstance(a, Field):
        if a.real or a.is_spinor:
            return a
        return a.with_(conj=not a.conj)
    if isinstance(a, SpinorSandwich):
        left = a.right.with_(conj=True) if a.right is not None else None
        right = a.left.with_(conj=False) if a.left is not None else None
        gs = tuple(reversed(gamma_string(a.inner)))
        return SpinorSandwich(left, gammas_expr(gs), right)
    return a


def conjugate_mono(m: Mono) -> Mono:
    return Mono(m.coeff.conj(), m.consts, tuple(_conj_atom(a) for a in m.atoms))


def conjugate(e: Expr) -> Expr:
    return canonicalize(Conjugate(e))


# --------------------------------------------------------------------------
# differentiation

def _d_mono(m: Mono, idx: Index) -> list:
    out = []
    for k, a in enumerate(m.atoms):
        if isinstance(a, Field):
            new = a.d(idx)
            out.append(Mono(m.coeff, m.consts, m.atoms[:k] + (new,) + m.atoms[k + 1:]))
        elif isinstance(a, SpinorSandwich):
            if a.left is not None:
                new = SpinorSandwich(a.left.d(idx), a.inner, a.right)
                out.append(Mono(m.coeff, m.consts, m.atoms[:k] + (new,) + m.atoms[k + 1:]))
            if a.right is not None:
                new = SpinorSandwich(a.left, a.inner, a.right.d(idx))
                out.append(Mono(m.coeff, m.consts, m.atoms[:k] + (new,) + m.atoms[k + 1:]))
    return out


def differentiate_monos(monos: Sequence[Mono], idx: Index) -> list:
    raw = []
    for m in monos:
        raw.extend(_d_mono(m, idx))
    return collect(raw)


def differentiate(e: Expr, idx: Index) -> Expr:
    """Total derivative along ``idx`` (product rule; constants annihilate)."""
    return to_expr(differentiate_monos(canonical_monos(e), idx))


# --------------------------------------------------------------------------
# index queries and relabeling

def mono_free_indices(m: Mono) -> frozenset:
    counts = mono_slot_counts(m.atoms)
    return frozenset(i for a in m.atoms for i in slots(a) if counts[i.name] == 1)


def free_indices(e: Expr) -> frozenset:
    """Free indices shared by every term; disagreement is an index error."""
    monos = canonical_monos(e)
    return mono_free_indices(monos[0]) if monos else frozenset()


def rename_index(e: Expr, old: Index, new: Index) -> Expr:
    """Relabel the free index ``old`` as ``new``; a variance change raises or
    lowers it (flat metric, so that is a per-slot flip)."""
    flip = old.up != new.up
    out = []
    for m in canonical_monos(e):
        m = rename_dummies_fresh(m)

        def fn(i):
            if i.name == old.name:
                return Index(new.name, i.up != flip)
            return i
        out.append(Mono(m.coeff, m.consts, tuple(map_slots(a, fn) for a in m.atoms)))
    return to_expr(collect(out))


def poly_degree(e: Expr, symbol: str) -> int:
    """Highest power of a constant across monomials; 0 when absent."""
    return max((m.const_powers.get(symbol, 0) for m in canonical_monos(e)), default=0)


# --------------------------------------------------------------------------
# substitution

def _match_field(pattern: Field, atom: Field):
    if pattern.name != atom.name or pattern.conj != atom.conj:
        return None
    if len(pattern.indices) != len(atom.indices):
        return None
    if pattern.derivs:
        names = Counter(i.name for i in pattern.derivs)
        if len(pattern.derivs) != 2 or len(names) != 1:
            raise FieldLintError("derivative patterns must be a single contracted pair")
        occ = Counter(i.name for i in atom.derivs)
        pair = next((n for n, k in sorted(occ.items()) if k == 2), None)
        if pair is None:
            return None
        remaining = tuple(i for i in atom.derivs if i.name != pair)
    else:
        remaining = atom.derivs
    return list(zip(pattern.indices, atom.indices)), remaining


def _instantiate(pattern: Field, replacement_monos: list, index_map: list, remaining) -> list:
    out = []
    for m in replacement_monos:
        m = rename_dummies_fresh(m)

        def fn(i):
            for p, occ in index_map:
                if i.name == p.name:
                    return Index(occ.name, i.up != (p.up != occ.up))
            return i
        out.append(Mono(m.coeff, m.consts, tuple(map_slots(a, fn) for a in m.atoms)))
    monos = collect(out)
    for idx in remaining:
        monos = differentiate_monos(monos, idx)
    return monos


def substitute(e: Expr, rules: Mapping[Expr, Expr]) -> Expr:
    """Replace every occurrence of each pattern head (a Field or Const).

    Field patterns carry index placeholders; an occurrence with extra
    derivative indices receives the correspondingly differentiated
    replacement. A pattern whose derivative list is one contracted pair
    (``d^{a}(d_{a}(phi))``) matches d'Alembertians.
    """
    field_rules = []
    const_rules = {}
    for pat, rep in rules.items():
        if isinstance(pat, Const):
            if free_indices(rep):
                raise IndexDisciplineError(f"replacement for constant {pat.name!r} has free indices")
            const_rules[pat.name] = rep
        elif isinstance(pat, Field):
            expected = {(i.name, i.up) for i in pat.indices}
            got = {(i.name, i.up) for i in free_indices(rep)}
            if expected != got:
                raise IndexDisciplineError(
                    f"replacement free indices {sorted(got)} do not match pattern {sorted(expected)}")
            field_rules.append((pat, canonical_monos(rep)))
        else:
            raise FieldLintError("substitution patterns must be Field or Const heads")

    def sub_field(f: Field) -> Optional[Expr]:
        for pat, rep in field_rules:
            hit = _match_field(pat, f)
            if hit is not None:
                return to_expr(_instantiate(pat, rep, *hit))
        return None

    terms = []
    for m in canonical_monos(e):
        factors: list = _coeff_factors(m.coeff) or [Rational(1)]
        for name, p in m.consts:
            base = const_rules.get(name, Const(name))
            factors.append(Power(base, p) if p != 1 else base)
        for a in m.atoms:
            if isinstance(a, Field):
                r = sub_field(a)
                factors.append(a if r is None else r)
            elif isinstance(a, SpinorSandwich):
                parts = []
                for side in (a.left,):
                    if side is not None:
                        r = sub_field(side)
                        parts.append(side if r is None else r)
                parts.extend(FormalGamma(i) for i in gamma_string(a.inner))
                if a.right is not None:
                    r = sub_field(a.right)
                    parts.append(a.right if r is None else r)
                factors.append(Product(tuple(parts)))
            else:
                factors.append(a)
        terms.append(Product(tuple(factors)))
    return canonicalize(Sum(tuple(terms)))


__all__ = [
    "Mono", "expand", "canonicalize", "canonical_monos", "collect", "to_expr", "mono_expr",
    "differentiate", "differentiate_monos", "substitute", "poly_degree", "free_indices",
    "rename_index", "conjugate", "is_zero", "equivalent", "slots", "with_slots", "map_slots",
    "atom_key", "check_discipline", "fresh_name", "rename_dummies_fresh", "mono_free_indices",
]
