import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import same
from fieldlint import canonical as C
from fieldlint import variational as V
from fieldlint.dsl import parse, parse_expr, render
from fieldlint.errors import DeclarationError, UnsupportedOrderError
from fieldlint.expr import Index
from fieldlint.models import load_builtin

HEAD = """field phi: complex scalar
field A: real vector
const m dim -1
const e dim 0
"""


def _model(density: str, head: str = HEAD):
    return parse(head + f"L = {density}\n")


def test_free_kg():
    m = load_builtin("kg_free_real")
    eq = V.euler_lagrange(m, "phi")
    assert same(eq.lhs, parse_expr("d_{a}(d^{a}(phi)) + m^2*phi", m))
    assert eq.text() == "□phi + m²·phi = 0"
    assert eq.varied == "phi"


def test_complex_kg_both_variations():
    m = load_builtin("kg_free_complex")
    a = V.euler_lagrange(m, "phi", conj=True)
    b = V.euler_lagrange(m, "phi")
    assert same(a.lhs, parse_expr("d_{a}(d^{a}(phi)) + m^2*phi", m))
    assert same(b.lhs, C.conjugate(a.lhs))


def test_real_candidate_interaction_terms():
    m = load_builtin("kg_interaction_real")
    eq = V.euler_lagrange(m, "phi")
    assert len(eq.raw_terms) == 3
    assert same(eq.lhs_before_assumptions, parse_expr("e*d_{a}(A^{a})*phi", m))
    assert C.is_zero(eq.lhs)
    assert eq.assumptions_used == {"lorenz_gauge"}


def test_lorenz_gauge_not_used_when_absent():
    m = parse("field phi: real scalar\nfield A: real vector\nconst e dim 0\nL = e*A^{a}*d_{a}(phi)*phi")
    eq = V.euler_lagrange(m, "phi")
    assert not eq.assumptions_used
    assert same(eq.lhs, parse_expr("e*d_{a}(A^{a})*phi", m))


def test_minimally_coupled_kg():
    m = load_builtin("kg_em")
    eq = V.euler_lagrange(m, "phi", conj=True)
    want = parse_expr("d_{a}(d^{a}(phi)) + 2*i*e*A^{a}*d_{a}(phi) + m^2*phi", m)
    assert same(eq.lhs, want)


def test_dirac_equation():
    m = load_builtin("dirac_free")
    eq = V.euler_lagrange(m, "psi", conj=True)
    assert same(eq.lhs, parse_expr("i*gamma^{a}*d_{a}(psi) - m*psi", m))


def test_em_equations():
    free = V.derive_em_equation(load_builtin("maxwell_free"))
    assert same(free.lhs, parse_expr("d_{nu}(F^{mu nu})", load_builtin("maxwell_free")))
    km = load_builtin("kg_maxwell")
    eq = V.derive_em_equation(km)
    assert "8*pi*e^2*A^{mu}*conj(phi)*phi" in render(eq.lhs)
    assert "8·π·e²·A^μ·phi*·phi" in eq.text()


def test_em_rejects_potential_derivatives_in_interaction():
    m = parse("field A: real vector\nfield phi: real scalar\nconst e dim 0\n"
              "def F_{mu nu} := d_{mu}(A_{nu}) - d_{nu}(A_{mu})\n"
              "L = -1/16*pi^-1*F^{a b}*F_{a b} + e*d_{a}(A^{a})*phi^2")
    with pytest.raises(UnsupportedOrderError):
        V.derive_em_equation(m)


@settings(max_examples=25)
@given(st.fractions(min_value=-5, max_value=5, max_denominator=7),
       st.fractions(min_value=-5, max_value=5, max_denominator=7))
def test_euler_lagrange_is_linear(a, b):
    l1 = "d_{x}(conj(phi))*d^{x}(phi) - m^2*conj(phi)*phi"
    l2 = "i*e*A^{y}*(d_{y}(conj(phi))*phi - conj(phi)*d_{y}(phi))"
    fa, fb = f"({a.numerator}/{a.denominator})", f"({b.numerator}/{b.denominator})"
    both = V.euler_lagrange(_model(f"{fa}*({l1}) + {fb}*({l2})"), "phi", conj=True).lhs
    one = V.euler_lagrange(_model(l1), "phi", conj=True).lhs
    two = V.euler_lagrange(_model(l2), "phi", conj=True).lhs
    assert same(both, parse_expr(fa, _model("0")) * one + parse_expr(fb, _model("0")) * two)


_EM_HEAD = HEAD + "def F_{mu nu} := d_{mu}(A_{nu}) - d_{nu}(A_{mu})\n" \
                  "def j_{mu} := i*(conj(phi)*d_{mu}(phi) - d_{mu}(conj(phi))*phi)\n"


@settings(max_examples=25)
@given(st.fractions(min_value=-4, max_value=4, max_denominator=5).filter(bool))
def test_gauge_invariance_depends_only_on_potential_terms(c):
    k = f"({c.numerator}/{c.denominator})"
    current = _model(f"{k}*F^{{a b}}*F_{{a b}} - e*A^{{a}}*j_{{a}}", _EM_HEAD)
    seagull = _model(f"{k}*F^{{a b}}*F_{{a b}} - e*A^{{a}}*j_{{a}} + {k}*e^2*A_{{a}}*A^{{a}}*conj(phi)*phi",
                     _EM_HEAD)
    assert V.gauge_check(V.derive_em_equation(current)).invariant
    res = V.gauge_check(V.derive_em_equation(seagull))
    assert not res.invariant
    (mono,) = C.canonical_monos(res.witness)
    probe = parse(HEAD + "field chi: real scalar\n")
    (want,) = C.canonical_monos(parse_expr("d^{mu}(chi)*conj(phi)*phi", probe))
    assert mono.atoms == want.atoms


def test_gauge_witness_content():
    res = V.gauge_check(V.derive_em_equation(load_builtin("kg_maxwell")))
    assert render(res.witness) == "8*pi*e^2*d^{mu}(chi)*conj(phi)*phi"
    assert res.check().verdict == "fail"


def test_charge_degree_audit():
    pw = V.charge_degree_audit(load_builtin("pauli_weisskopf"))
    assert pw.interaction_degrees == {1, 2} and pw.mixed
    em = V.charge_degree_audit(load_builtin("kg_em"))
    assert em.interaction_degrees == {1} and not em.mixed


def test_on_shell_conservation():
    m = load_builtin("kg_free_complex")
    div = V.divergence(m.definition("j", Index("mu", True)))
    assert not C.is_zero(div)
    assert C.is_zero(V.on_shell_reduce(div, [V.euler_lagrange(m, "phi", conj=True)]))
    d = load_builtin("dirac_free")
    jd = V.divergence(parse_expr("psibar*gamma^{mu}*psi", d))
    assert C.is_zero(V.on_shell_reduce(jd, [V.euler_lagrange(d, "psi", conj=True)]))


def test_current_divergence_survives_off_shell():
    m = load_builtin("kg_free_complex")
    div = V.divergence(m.definition("j", Index("mu", True)))
    assert not C.is_zero(V.on_shell_reduce(div, []))


def test_conj_variation_of_real_field():
    with pytest.raises(DeclarationError):
        V.euler_lagrange(load_builtin("kg_free_real"), "phi", conj=True)


def test_stress_energy_forms():
    m = load_builtin("kg_free_real")
    t = V.stress_energy(m, "phi")
    want = parse_expr("d^{mu}(phi)*d^{nu}(phi) - 1/2*(d_{a}(phi)*d^{a}(phi) - m^2*phi^2)*g^{mu nu}", m)
    assert same(t, want)
    swapped = C.rename_index(C.rename_index(t, Index("mu", True), Index("z", True)),
                             Index("nu", True), Index("mu", True))
    swapped = C.rename_index(swapped, Index("z", True), Index("nu", True))
    assert same(swapped, t)
    low = V.stress_energy(m, "phi", lower=True)
    assert C.free_indices(low) == {Index("mu", False), Index("nu", False)}


def test_stress_energy_is_conserved_on_shell():
    m = load_builtin("kg_free_real")
    t = V.stress_energy(m, "phi")
    div = C.differentiate(t, Index("mu", False))
    assert C.is_zero(V.on_shell_reduce(div, [V.euler_lagrange(m, "phi")]))


def test_complex_stress_energy_sums_both_fields():
    m = load_builtin("kg_free_complex")
    t = V.stress_energy(m, "phi")
    want = parse_expr("d^{mu}(conj(phi))*d^{nu}(phi) + d^{nu}(conj(phi))*d^{mu}(phi)"
                      " - (d_{a}(conj(phi))*d^{a}(phi) - m^2*conj(phi)*phi)*g^{mu nu}", m)
    assert same(t, want)


def test_second_order_densities_are_rejected():
    m = parse("field phi: real scalar\nL = phi*d_{a}(d^{a}(phi))")
    with pytest.raises(UnsupportedOrderError):
        V.euler_lagrange(m, "phi")
    with pytest.raises(UnsupportedOrderError):
        V.stress_energy(m, "phi")


def test_undeclared_field():
    with pytest.raises(DeclarationError):
        V.euler_lagrange(load_builtin("kg_free_real"), "chi")


def test_hermiticity():
    real = load_builtin("yukawa_coupling")
    cplx = load_builtin("yukawa_coupling_complex")
    assert V.hermiticity_check(parse_expr("gy*psibar*psi*phi", real)).verdict == "pass"
    bad = V.hermiticity_check(parse_expr("gy*psibar*psi*phi", cplx))
    assert bad.verdict == "fail" and bad.witness.startswith("conj(L) - L = ")
    assert V.hermiticity_check(load_builtin("kg_em").density).verdict == "pass"
    assert V.hermiticity_check(parse_expr("m*psibar*psi", load_builtin("dirac_free"))).verdict == "pass"


def test_poly_degree_of_stress():
    m = load_builtin("kg_free_real")
    assert C.poly_degree(V.stress_energy(m, "phi"), "m") == 2
    dust = load_builtin("dust")
    assert C.poly_degree(dust.definition("T", Index("mu", True), Index("nu", True)), "massdens") == 1
