"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line (visible in ``pytest -v``
output) before asserting. Run ``python3 tests/test_acceptance.py`` to get
the lines without pytest.
"""
from __future__ import annotations

import math
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from fieldlint import canonical as C
from fieldlint import numeric as N
from fieldlint import variational as V
from fieldlint.dimensions import check_requirements, dimension_of, infer_dimensions, mono_dimension
from fieldlint.expr import Index
from fieldlint.dsl import parse, parse_expr, render
from fieldlint.models import builtin_names, load_builtin

_EMIT = print


def _report(number: int, title: str, ok: bool, detail: str) -> None:
    _EMIT(f"{'PASS' if ok else 'FAIL'} criterion {number:2d} {title}: {detail}")


@pytest.fixture(autouse=True)
def _visible(capsys):
    global _EMIT
    def emit(line):
        with capsys.disabled():
            print("\n" + line)
    _EMIT = emit
    yield
    _EMIT = print


def _same(got, text, model) -> bool:
    return C.canonicalize(got) == C.canonicalize(parse_expr(text, model))


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


# ---------------------------------------------------------------------------

def criterion_1():
    results = []

    def kg():
        m = load_builtin("kg_free_real")
        return _same(V.euler_lagrange(m, "phi").lhs, "d_{a}(d^{a}(phi)) + m^2*phi", m)

    def real_interaction():
        m = load_builtin("kg_interaction_real")
        eq = V.euler_lagrange(m, "phi")
        return (_same(eq.lhs_before_assumptions, "e*d_{a}(A^{a})*phi", m)
                and C.is_zero(eq.lhs) and "lorenz_gauge" in eq.assumptions_used)

    def kg_em():
        m = load_builtin("kg_em")
        eq = V.euler_lagrange(m, "phi", conj=True)
        return _same(eq.lhs, "d_{a}(d^{a}(phi)) + 2*i*e*A^{a}*d_{a}(phi) + m^2*phi", m)

    def maxwell_seagull():
        m = load_builtin("kg_maxwell")
        eq = V.derive_em_equation(m)
        want = "d_{nu}(F^{mu nu}) + 4*pi*e*j^{mu} + 8*pi*e^2*A^{mu}*conj(phi)*phi"
        return _same(eq.lhs, want, m) and "8*pi*e^2*A^{mu}*conj(phi)*phi" in render(eq.lhs)

    def stress():
        m = load_builtin("kg_free_real")
        t = V.stress_energy(m, "phi")
        return _same(t, "d^{mu}(phi)*d^{nu}(phi) - 1/2*(d_{a}(phi)*d^{a}(phi) - m^2*phi^2)*g^{mu nu}", m)

    def dirac():
        m = load_builtin("dirac_free")
        return _same(V.euler_lagrange(m, "psi", conj=True).lhs, "i*gamma^{a}*d_{a}(psi) - m*psi", m)

    for name, fn in [("free KG", kg), ("real-interaction", real_interaction), ("KG-EM", kg_em),
                     ("Maxwell+seagull", maxwell_seagull), ("stress", stress), ("Dirac", dirac)]:
        ok, dt = _timed(fn)
        results.append((name, ok and dt < 1.0, dt))
    ok = all(r[1] for r in results)
    detail = ", ".join(f"{n} {'ok' if o else 'BAD'} {dt * 1e3:.0f}ms" for n, o, dt in results)
    return ok, detail


def criterion_2():
    checks = {}
    kg = load_builtin("kg_free_complex")
    dims = infer_dimensions(kg)
    checks["phi=-1"] = dims["phi"].exponent == -1
    checks["phi*phi=-2"] = dimension_of(parse_expr("conj(phi)*phi", kg), dims, kg.constants).exponent == -2
    flag = [c for c in check_requirements(kg).checks if c.name.startswith("probability-density")]
    checks["probability flag"] = bool(flag) and "cannot represent" in str(flag[0].witness)
    checks["j=-3"] = dimension_of(kg.definition("j", Index("mu", False)), dims,
                                  kg.constants).exponent == -3
    dm = load_builtin("dirac_free")
    dd = infer_dimensions(dm)
    checks["psi=-3/2"] = dd["psi"].exponent == Fraction(-3, 2)
    checks["psibar*psi=-3"] = dimension_of(parse_expr("psibar*psi", dm), dd, dm.constants).exponent == -3
    bad = []
    for n in builtin_names():
        m = load_builtin(n)
        monos = C.canonical_monos(m.density)
        if not monos:
            continue
        d = infer_dimensions(m)
        for x in monos:
            got = mono_dimension(x, d, m.constants)
            if got is None or got.exponent != -4:
                bad.append(f"{n}:{render(C.mono_expr(x))}")
    checks["every catalog term -4"] = not bad
    ok = all(checks.values())
    return ok, ", ".join(f"{k} {'ok' if v else 'BAD'}" for k, v in checks.items()) + (
        f" offenders {bad}" if bad else "")


_PROBE = parse("""
field F: real tensor antisymmetric
field S: real tensor symmetric
field A: real vector
field B: real vector
field phi: real scalar
const m
L = 0
""")

_SYMMETRIC_BLOCKS = [
    "S_{mu nu}", "S_{nu mu}", "d_{mu}(phi)*d_{nu}(phi)", "d_{mu}(d_{nu}(phi))",
    "g_{mu nu}*phi^2", "A_{mu}*A_{nu}", "A_{mu}*B_{nu} + A_{nu}*B_{mu}",
    "d_{mu}(A_{nu}) + d_{nu}(A_{mu})", "S_{mu a}*S^{a}_{nu}", "d_{mu}(phi)*A_{nu} + d_{nu}(phi)*A_{mu}",
    "g_{mu nu}*d_{a}(phi)*d^{a}(phi)", "d_{mu}(S_{nu a})*A^{a} + d_{nu}(S_{mu a})*A^{a}",
]


def random_symmetric(rng: random.Random) -> str:
    k = rng.randint(1, 4)
    parts = []
    for block in rng.sample(_SYMMETRIC_BLOCKS, k):
        c = Fraction(rng.randint(-9, 9) or 1, rng.randint(1, 5))
        parts.append(f"({c.numerator}/{c.denominator})*m^{rng.randint(0, 2)}*({block})")
    return " + ".join(parts)


def criterion_3():
    rng = random.Random(20261017)
    t0 = time.perf_counter()
    failures = []
    for _ in range(100):
        s = random_symmetric(rng)
        e = parse_expr(f"F^{{mu nu}}*({s})", _PROBE)
        if not C.is_zero(C.canonicalize(e)):
            failures.append(s)
    dt = time.perf_counter() - t0
    ok = not failures and dt < 5.0
    return ok, f"100 random symmetric S, {len(failures)} nonzero, {dt:.2f}s"


def criterion_4():
    mc = load_builtin("maxwell_current")
    good = V.gauge_check(V.derive_em_equation(mc))
    km = load_builtin("kg_maxwell")
    bad = V.gauge_check(V.derive_em_equation(km))
    monos = C.canonical_monos(bad.witness)
    probe = parse("field phi: complex scalar\nfield chi: real scalar\nL = 0")
    content = C.canonical_monos(parse_expr("d^{mu}(chi)*conj(phi)*phi", probe))[0].atoms
    content_ok = len(monos) == 1 and monos[0].atoms == content
    ok = good.invariant and not bad.invariant and content_ok
    return ok, (f"current-sourced invariant={good.invariant}, seagull invariant={bad.invariant}, "
                f"witness {render(bad.witness)}")


def criterion_5():
    worst = 0.0
    for m in (0.1, 1, 10):
        for U in (-1, -0.1, 0, 0.1, 1):
            worst = max(worst, abs(N.kg_em_residual(m, U) - U * U))
    spot = N.kg_em_residual(1.0, 0.1)
    ok = worst <= 1e-12 and abs(spot - 0.01) <= 1e-12
    return ok, f"max |residual - U^2| = {worst:.2e}, spot (1, 0.1) = {spot.real:.15g}"


def criterion_6():
    model = load_builtin("kg_free_complex")
    rng = np.random.default_rng(6)
    worst_on = 0.0
    worst_off = 0.0
    for _ in range(20):
        m = rng.uniform(0.1, 5.0)
        p = rng.uniform(-3.0, 3.0, size=3)
        E = math.sqrt(m * m + p @ p)
        res = N.action_box(model, N.FieldConfig({"phi": N.PlaneWave(E, p)}, {"m": m}))
        worst_on = max(worst_on, abs(res.rate))
        Eo = E * rng.uniform(1.1, 2.0)
        off = N.action_box(model, N.FieldConfig({"phi": N.PlaneWave(Eo, p)}, {"m": m}))
        want = (Eo ** 2 - p @ p - m * m) / (2 * Eo)
        worst_off = max(worst_off, abs(off.rate - want) / abs(want))
    classical = N.classical_action_rate(1.0, 0.0)
    ok = worst_on <= 1e-12 and worst_off <= 1e-12 and classical != 0
    return ok, (f"on-shell max |dS/dt| = {worst_on:.1e}, off-shell max rel err = {worst_off:.1e}, "
                f"classical -m sqrt(1-v^2) at v=0 = {classical}")


def criterion_7():
    g = 4 * math.pi
    worst = 0.0
    for m in (0.0, 1.0, 5.0):
        for r in np.linspace(0.1, 20.0, 50):
            a = N.yukawa_t00(g, m, float(r))
            b = N.yukawa_t00(g, m, float(r), route="closed")
            worst = max(worst, abs(a - b) / abs(b))
    spot = N.yukawa_t00(g, 1.0, 1.0)
    ok = worst <= 1e-12 and abs(spot - 2.5 * math.exp(-2)) <= 1e-12
    return ok, f"max rel diff over 150 points = {worst:.1e}, T00(4pi, 1, 1) = {spot:.10f}"


def criterion_8():
    kg = load_builtin("kg_free_real")
    t00 = C.canonicalize(V.stress_energy(kg, "phi"))
    dust = load_builtin("dust")
    tdust = dust.definition("T", Index("mu", True), Index("nu", True))
    a, b = C.poly_degree(t00, "m"), C.poly_degree(tdust, "massdens")
    return a == 2 and b == 1, f"degree(T_KG, m) = {a}, degree(T_dust, mass density) = {b}"


def criterion_9():
    f = N.yukawa_force(4 * math.pi, 1.0, [0, 0, 1], 1.0)
    v = N.four_velocity([0, 0, -0.6])
    dot = N.orthogonality_check(f, v)
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(100):
        a = rng.normal(size=(4, 4))
        u = N.four_velocity(rng.uniform(-0.55, 0.55, size=3))
        j = rng.uniform(0.1, 5.0) * u
        worst = max(worst, abs(N.orthogonality_check(N.lorentz_force(a - a.T, j), u)))
    ok = abs(dot - -0.5518192) <= 1e-6 and abs(dot) > 1e-12 and worst <= 1e-12
    return ok, f"Yukawa f.v = {dot:.7f} (nonzero), Lorentz max |f.v| = {worst:.1e}"


def criterion_10():
    kg = load_builtin("kg_free_complex")
    j = kg.definition("j", Index("mu", True))
    red_kg = V.on_shell_reduce(V.divergence(j), [V.euler_lagrange(kg, "phi", conj=True)])
    dm = load_builtin("dirac_free")
    jd = parse_expr("psibar*gamma^{mu}*psi", dm)
    red_d = V.on_shell_reduce(V.divergence(jd), [V.euler_lagrange(dm, "psi", conj=True)])
    ok = C.is_zero(red_kg) and C.is_zero(red_d)
    return ok, f"KG: {render(red_kg)}, Dirac: {render(red_d)}"


def criterion_11():
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "fieldlint.cli", "scenario", "--all"],
                          capture_output=True, text=True)
    dt = time.perf_counter() - t0
    last = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr.strip()
    return proc.returncode == 0 and dt < 10.0, f"exit {proc.returncode} in {dt:.2f}s ({last})"


CRITERIA = [
    (1, "symbolic goldens", criterion_1),
    (2, "dimension table", criterion_2),
    (3, "antisymmetric-symmetric cancellation", criterion_3),
    (4, "gauge audit", criterion_4),
    (5, "electrostatic contradiction", criterion_5),
    (6, "plane-wave action", criterion_6),
    (7, "Yukawa energy density", criterion_7),
    (8, "mass scaling", criterion_8),
    (9, "orthogonality", criterion_9),
    (10, "on-shell conservation", criterion_10),
    (11, "full catalog", criterion_11),
]


@pytest.mark.parametrize("number,title,fn", CRITERIA, ids=[f"criterion_{n}" for n, _, _ in CRITERIA])
def test_criterion(number, title, fn):
    ok, detail = fn()
    _report(number, title, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for number, title, fn in CRITERIA:
        ok, detail = fn()
        _report(number, title, ok, detail)
        failed += not ok
    sys.exit(1 if failed else 0)
