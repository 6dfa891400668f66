"""Scenario catalog: each scenario is a list of steps over catalog models,
each step an operation plus its expected outcome.

Symbolic expectations are DSL text compared after canonicalization (exact
equality). Numeric expectations carry a tolerance, ``1e-12`` unless the
step states its own. A check passes when the expectation is met, so a
step expecting a nonzero result passes on a nonzero result.

A user directory may hold its own ``manifest.json`` and ``.lagr`` files;
its scenarios are added to the built-in ones and its models shadow
built-in models of the same name.
"""
from __future__ import annotations

import builtins
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import canonical as C
from . import numeric as N
from . import variational as V
from .dimensions import check_requirements, dimension_of, infer_dimensions, probability_density_check
from .dsl import FieldSymbol, LagrangianModel, parse_expr, render
from .errors import ConfigError, FieldLintError, UnknownScenarioError
from .expr import Index
from .models import load_model
from .report import Check, Report

DEFAULT_TOL = N.EQUALITY_TOL


@dataclass(frozen=True)
class Scenario:
    id: str
    description: str
    steps: tuple
    directory: Optional[Path] = None


class _Context:
    def __init__(self, directory: Optional[Path], tolerance: float):
        self.directory = directory
        self.tolerance = tolerance
        self._models: dict = {}

    def model(self, name: str) -> LagrangianModel:
        if name not in self._models:
            self._models[name] = load_model(name, self.directory)
        return self._models[name]

    def expr(self, model: LagrangianModel, text: str):
        if text == "L":
            return model.density
        return parse_expr(text, model)

    def tol(self, step: dict) -> float:
        return float(step.get("tol", self.tolerance))


def _number(v) -> float:
    if isinstance(v, str):
        if v.endswith("pi"):
            k = v[:-2] or "1"
            return float(k) * math.pi
        return float(v)
    return float(v)


def _same(got, expected_text: str, model: LagrangianModel, ctx: _Context) -> bool:
    return C.canonicalize(got) == C.canonicalize(ctx.expr(model, expected_text))


def _close(name: str, got: float, expected: float, tol: float, relative: bool = False) -> Check:
    err = abs(got - expected)
    if relative and expected != 0:
        err /= abs(expected)
    return Check.expect(name, err <= tol, got, tol)


# --------------------------------------------------------------------------
# symbolic operations

def op_eom(step, ctx):
    m = ctx.model(step["model"])
    eq = V.euler_lagrange(m, step["vary"], bool(step.get("conj", False)))
    label = f"eom {step['model']} vary {eq.varied}"
    out = []
    if "expect_raw" in step:
        want = sorted(render(ctx.expr(m, t)) for t in step["expect_raw"])
        got = sorted(render(t) for t in eq.raw_terms)
        out.append(Check.expect(f"{label}: raw terms", got == want, "; ".join(got)))
    if "expect_before" in step:
        out.append(Check.expect(f"{label}: before assumptions",
                                _same(eq.lhs_before_assumptions, step["expect_before"], m, ctx),
                                render(eq.lhs_before_assumptions)))
    if "expect_assumptions" in step:
        out.append(Check.expect(f"{label}: assumptions used",
                                sorted(eq.assumptions_used) == sorted(step["expect_assumptions"]),
                                ", ".join(sorted(eq.assumptions_used)) or "none"))
    out.append(Check.expect(label, _same(eq.lhs, step["expect"], m, ctx), f"{render(eq.lhs)} = 0"))
    return out


def op_em_eq(step, ctx):
    m = ctx.model(step["model"])
    eq = V.derive_em_equation(m, step.get("potential"))
    return [Check.expect(f"field equation {step['model']}", _same(eq.lhs, step["expect"], m, ctx),
                         f"{render(eq.display if eq.display is not None else eq.lhs)} = 0")]


def _with_gauge_scalar(m: LagrangianModel, name: str) -> LagrangianModel:
    fields = dict(m.fields)
    fields.setdefault(name, FieldSymbol(name, "scalar", "real"))
    return LagrangianModel(fields, dict(m.constants), m.assumptions, m.density, dict(m.definitions), m.name)


def op_gauge(step, ctx):
    m = ctx.model(step["model"])
    eq = V.derive_em_equation(m, step.get("potential"))
    res = V.gauge_check(eq, gauge="chi")
    want = bool(step["expect"])
    name = f"gauge {step['model']}: {'invariant' if want else 'not invariant'}"
    out = [Check.expect(name, res.invariant == want, render(res.witness))]
    if "witness" in step:
        mc = _with_gauge_scalar(m, "chi")
        out.append(Check.expect(f"gauge {step['model']}: witness",
                                _same(res.witness, step["witness"], mc, ctx), render(res.witness)))
    return out


def op_dimensions(step, ctx):
    m = ctx.model(step["model"])
    dims = infer_dimensions(m)
    out = []
    for f, want in step["expect"].items():
        got = dims.get(f)
        ok = got is not None and got.exponent == Fraction(want)
        out.append(Check.expect(f"dimension {step['model']}.{f}", ok, str(got)))
    return out


def op_requirements(step, ctx):
    rep = check_requirements(ctx.model(step["model"]))
    return [Check(f"{step['model']} {c.name}", c.verdict, c.witness) for c in rep.checks]


def op_probability_density(step, ctx):
    m = ctx.model(step["model"])
    dims = infer_dimensions(m)
    e = ctx.expr(m, step["expr"])
    d = dimension_of(e, dims, m.constants)
    info = probability_density_check(e, dims, m.constants, step["expr"])
    want = Fraction(step["expect"])
    flagged = d.exponent != Fraction(-3)
    return [
        Check.expect(f"dimension of {step['expr']}", d.exponent == want, str(d)),
        Check.expect(f"probability-density flag for {step['expr']}",
                     flagged == (want != Fraction(-3)), info.witness),
    ]


def op_dimension_of(step, ctx):
    m = ctx.model(step["model"])
    d = dimension_of(ctx.expr(m, step["expr"]), infer_dimensions(m), m.constants)
    return [Check.expect(f"dimension of {step['expr']}", d.exponent == Fraction(step["expect"]), str(d))]


def op_scalar(step, ctx):
    from .dimensions import check_scalar
    m = ctx.model(step["model"])
    c = check_scalar(ctx.expr(m, step["expr"]))
    want = bool(step["expect"])
    return [Check.expect(f"scalar check {step['expr']}: {'pass' if want else 'fail'} expected",
                         (c.verdict == "pass") == want, c.witness)]


def op_zero(step, ctx):
    m = ctx.model(step["model"])
    e = C.canonicalize(ctx.expr(m, step["expr"]))
    return [Check.expect(f"{step['expr']} vanishes", C.is_zero(e), render(e))]


def op_conserved(step, ctx):
    m = ctx.model(step["model"])
    eqs = [V.euler_lagrange(m, q["vary"], bool(q.get("conj", False))) for q in step["equations"]]
    div = V.divergence(ctx.expr(m, step["current"]))
    red = V.on_shell_reduce(div, eqs)
    want_zero = bool(step.get("expect_zero", True))
    using = ", ".join(e.varied for e in eqs) or "no equations"
    return [Check.expect(f"divergence of {step['current']} ({using}) {'vanishes' if want_zero else 'survives'}",
                         C.is_zero(red) == want_zero, render(red))]


def op_charge_degree(step, ctx):
    audit = V.charge_degree_audit(ctx.model(step["model"]), step.get("charge", "e"))
    got = sorted(audit.interaction_degrees)
    witness = "; ".join(f"{t}: {d}" for t, d in audit.degrees.items() if d > 0)
    return [
        Check.expect(f"charge degrees {step['model']} = {step['expect']}", got == sorted(step["expect"]), witness),
        Check.expect(f"mixed-degree flag {step['model']}", audit.mixed == bool(step["expect_mixed"]),
                     "raised" if audit.mixed else "clear"),
    ]


def _stress(m, fname, lower=False):
    return V.stress_energy(m, fname, lower=lower)


def op_stress(step, ctx):
    m = ctx.model(step["model"])
    t = _stress(m, step["field"], bool(step.get("lower", False)))
    return [Check.expect(f"stress-energy {step['model']}", _same(t, step["expect"], m, ctx), render(t))]


def op_poly_degree(step, ctx):
    m = ctx.model(step["model"])
    text = step["expr"]
    e = _stress(m, text.split(":", 1)[1]) if text.startswith("stress:") else ctx.expr(m, text)
    d = C.poly_degree(e, step["symbol"])
    return [Check.expect(f"degree of {text} in {step['symbol']}", d == int(step["expect"]), d)]


def op_hermitian(step, ctx):
    m = ctx.model(step["model"])
    c = V.hermiticity_check(ctx.expr(m, step["expr"]))
    want = bool(step["expect"])
    return [Check.expect(f"hermiticity {step['model']}: {'hermitian' if want else 'not hermitian'}",
                         (c.verdict == "pass") == want, c.witness)]


# --------------------------------------------------------------------------
# numeric operations

def op_kg_em_residual(step, ctx):
    m, U = _number(step["m"]), _number(step["U"])
    r = N.kg_em_residual(m, U)
    tol = ctx.tol(step)
    return [_close(f"residual/phi at m={m:g}, U={U:g}", r.real, _number(step["expect"]), tol),
            Check.expect(f"residual imaginary part at m={m:g}, U={U:g}", abs(r.imag) <= tol, r.imag, tol)]


def op_kg_em_residual_sweep(step, ctx):
    tol = ctx.tol(step)
    worst = 0.0
    for m in step["m"]:
        for U in step["U"]:
            worst = max(worst, abs(N.kg_em_residual(_number(m), _number(U)) - _number(U) ** 2))
    return [Check.expect("max |residual - U^2| over sweep", worst <= tol, worst, tol)]


def op_action_box(step, ctx):
    m = ctx.model(step["model"])
    mass = _number(step["m"])
    p = tuple(_number(c) for c in step["p"])
    E = math.sqrt(sum(c * c for c in p) + mass * mass) if step["E"] == "on_shell" else _number(step["E"])
    cfg = N.FieldConfig({"phi": N.PlaneWave(E, p)}, {"m": mass})
    res = N.action_box(m, cfg)
    res2 = N.action_box(m, cfg, N.Box((2.0, 3.0, 0.5), 4.0, (1.0, -1.0, 2.0, 0.5)))
    tol = ctx.tol(step)
    want = _number(step["expect"])
    return [
        _close(f"normalized dS/dt at E={E:.6g}", res.rate, want, tol),
        _close(f"closed form (E^2-p^2-m^2)/(2E) at E={E:.6g}", res.rate, res.closed_form, tol),
        _close("box-size independence", res2.rate, res.rate, tol),
    ]


def op_classical_action(step, ctx):
    m, v = _number(step["m"]), _number(step["v"])
    s = N.classical_action_rate(m, v)
    tol = ctx.tol(step)
    other = _number(step.get("compare_to", 0.0))
    return [_close(f"classical dS/dt at v={v:g}", s, _number(step["expect"]), tol),
            Check.expect("classical and KG action rates differ", abs(s - other) > tol, s - other, tol)]


def op_yukawa_t00(step, ctx):
    g, m, r = _number(step["g"]), _number(step["m"]), _number(step["r"])
    sym = N.yukawa_t00(g, m, r)
    closed = N.yukawa_t00(g, m, r, route="closed")
    return [_close(f"T00 at g={g:.6g}, m={m:g}, r={r:g}", sym, _number(step["expect"]), ctx.tol(step)),
            _close("symbolic route vs closed form (relative)", sym, closed, DEFAULT_TOL, relative=True)]


def op_yukawa_orthogonality(step, ctx):
    g, m = _number(step["g"]), _number(step["m"])
    f = N.yukawa_force(g, m, [_number(c) for c in step["point"]], _number(step.get("lam", 1.0)))
    v = N.four_velocity([_number(c) for c in step["velocity"]])
    dot = N.orthogonality_check(f, v)
    return [_close("Yukawa f.v", dot, _number(step["expect"]), ctx.tol(step)),
            Check.expect("Yukawa f.v nonzero (orthogonality violated)", abs(dot) > DEFAULT_TOL, dot)]


def op_lorentz_orthogonality(step, ctx):
    rng = np.random.default_rng(int(step.get("seed", 0)))
    tol = ctx.tol(step)
    worst = 0.0
    for _ in range(int(step.get("samples", 100))):
        a = rng.normal(size=(4, 4))
        F = a - a.T
        v = N.four_velocity(rng.uniform(-0.5, 0.5, size=3))
        j = rng.uniform(0.1, 3.0) * v
        worst = max(worst, abs(N.orthogonality_check(N.lorentz_force(F, j), v)))
    return [Check.expect(f"Lorentz force f.v over {step.get('samples', 100)} samples", worst <= tol, worst, tol)]


OPS: dict = {
    "eom": op_eom, "em_eq": op_em_eq, "gauge": op_gauge, "dimensions": op_dimensions,
    "requirements": op_requirements, "probability_density": op_probability_density,
    "dimension_of": op_dimension_of, "scalar": op_scalar, "zero": op_zero,
    "conserved": op_conserved, "charge_degree": op_charge_degree, "stress": op_stress,
    "poly_degree": op_poly_degree, "hermitian": op_hermitian,
    "kg_em_residual": op_kg_em_residual, "kg_em_residual_sweep": op_kg_em_residual_sweep,
    "action_box": op_action_box, "classical_action": op_classical_action,
    "yukawa_t00": op_yukawa_t00, "yukawa_orthogonality": op_yukawa_orthogonality,
    "lorentz_orthogonality": op_lorentz_orthogonality,
}


# --------------------------------------------------------------------------
# catalog

def _read_manifest(text: str, directory: Optional[Path]) -> list:
    try:
        data = json.loads(text)
        entries = data["scenarios"]
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"malformed scenario manifest: {exc}") from None
    out = []
    for s in entries:
        if not isinstance(s, dict) or "id" not in s or not isinstance(s.get("steps"), builtins.list):
            raise ConfigError(f"malformed scenario entry: {s!r}")
        for st in s["steps"]:
            if st.get("op") not in OPS:
                raise ConfigError(f"scenario {s['id']}: unknown operation {st.get('op')!r}")
        out.append(Scenario(s["id"], s.get("description", ""), tuple(s["steps"]), directory))
    return out


def _builtin_scenarios() -> list:
    text = (resources.files("fieldlint") / "catalog" / "manifest.json").read_text(encoding="utf-8")
    return _read_manifest(text, None)


class Catalog:
    def __init__(self, directory: Optional[Path] = None):
        self.directory = Path(directory) if directory is not None else None
        self._scenarios = {s.id: s for s in _builtin_scenarios()}
        if self.directory is not None:
            path = self.directory / "manifest.json"
            if not path.is_file():
                raise ConfigError(f"{self.directory} has no manifest.json")
            for s in _read_manifest(path.read_text(encoding="utf-8"), self.directory):
                self._scenarios[s.id] = s

    def list(self) -> list:
        return [*self._scenarios]

    def get(self, sid: str) -> Scenario:
        try:
            return self._scenarios[sid]
        except KeyError:
            raise UnknownScenarioError(f"unknown scenario {sid!r}") from None

    def run(self, sid: str, tolerance: Optional[float] = None) -> Report:
        s = self.get(sid)
        ctx = _Context(s.directory, DEFAULT_TOL if tolerance is None else tolerance)
        rep = Report(sid)
        t0 = time.perf_counter()
        for k, step in enumerate(s.steps):
            try:
                rep.extend(OPS[step["op"]](step, ctx))
            except (FieldLintError, KeyError, ValueError) as exc:
                rep.add(Check(f"step {k + 1} ({step['op']})", "fail", f"{type(exc).__name__}: {exc}"))
        rep.timing = time.perf_counter() - t0
        return rep

    def run_all(self, tolerance: Optional[float] = None) -> list:
        return [self.run(sid, tolerance) for sid in self.list()]


def list(directory: Optional[Path] = None) -> "list[str]":  # noqa: A001
    return Catalog(directory).list()


def run(sid: str, directory: Optional[Path] = None, tolerance: Optional[float] = None) -> Report:
    return Catalog(directory).run(sid, tolerance)
