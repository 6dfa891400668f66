"""Numeric evaluation of canonical expressions on closed-form configurations.

Components are taken with lower indices (``A_mu``, ``d_mu phi``) and upper
slots are raised with the flat metric diag(1, -1, -1, -1), which is its own
inverse. Derivatives of the built-in profiles are exact: plane waves by
multiplication with ``i q_mu``, the Yukawa field through closed forms
generated once per derivative pattern.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from string import ascii_letters
from typing import Mapping, Optional, Sequence

import numpy as np
import sympy as sp

from . import canonical as C
from .errors import ConfigError, SingularityError, UnsupportedNumericError
from .expr import Expr, Field, FormalGamma, Index, Metric, Partial, SpinorSandwich

ETA = np.diag([1.0, -1.0, -1.0, -1.0])
EQUALITY_TOL = 1e-12
FINITE_DIFF_TOL = 1e-5


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.coords):
            raise ConfigError("spacetime point must have finite coordinates")

    @property
    def coords(self) -> tuple:
        return (self.t, self.x, self.y, self.z)

    def shifted(self, axis: int, h: float) -> "SpacetimePoint":
        c = list(self.coords)
        c[axis] += h
        return SpacetimePoint(*c)


# --------------------------------------------------------------------------
# field profiles

class Profile:
    """Closed-form field; ``component`` returns d_{derivs} f_{indices}."""

    rank = 0

    def component(self, indices: tuple, derivs: tuple, x: SpacetimePoint) -> complex:
        raise NotImplementedError


@dataclass(frozen=True)
class PlaneWave(Profile):
    """``amplitude * exp(i(p.x - E t))``."""

    E: float
    p: tuple = (0.0, 0.0, 0.0)
    amplitude: complex = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.E) and self.E > 0):
            raise ConfigError(f"plane wave needs a finite E > 0, got {self.E}")
        object.__setattr__(self, "p", tuple(float(c) for c in self.p))
        if len(self.p) != 3 or not all(math.isfinite(c) for c in self.p):
            raise ConfigError("plane-wave momentum must be three finite numbers")

    @property
    def q(self) -> np.ndarray:
        # d_mu phi = i q_mu phi
        return np.array([-self.E, *self.p])

    def component(self, indices, derivs, x):
        t, *r = x.coords
        phase = np.dot(self.p, r) - self.E * t
        v = complex(self.amplitude) * complex(np.exp(1j * phase))
        q = self.q
        for mu in derivs:
            v *= 1j * q[mu]
        return v


@dataclass(frozen=True)
class MotionlessWave(Profile):
    """``exp(-i E t)`` with no spatial dependence; any real energy."""

    E: float

    def __post_init__(self):
        if not math.isfinite(self.E):
            raise ConfigError("energy must be finite")

    def component(self, indices, derivs, x):
        if any(mu != 0 for mu in derivs):
            return 0.0
        return complex(np.exp(-1j * self.E * x.t)) * (-1j * self.E) ** len(derivs)


_X, _Y, _Z, _G, _M = sp.symbols("x y z g m", real=True)
_R = sp.sqrt(_X ** 2 + _Y ** 2 + _Z ** 2)
_YUKAWA = _G * sp.exp(-_M * _R) / (4 * sp.pi * _R)


@functools.lru_cache(maxsize=None)
def _yukawa_derivative(axes: tuple):
    expr = _YUKAWA
    for a in axes:
        expr = sp.diff(expr, (_X, _Y, _Z)[a - 1])
    return sp.lambdify((_X, _Y, _Z, _G, _M), sp.simplify(expr), "math")


@dataclass(frozen=True)
class Yukawa(Profile):
    """Static field ``g exp(-m r) / (4 pi r)`` centred at the origin."""

    g: float
    m: float

    def __post_init__(self):
        if not (math.isfinite(self.g) and math.isfinite(self.m)) or self.m < 0:
            raise ConfigError("Yukawa parameters must be finite with m >= 0")

    def component(self, indices, derivs, x):
        _, px, py, pz = x.coords
        if px == 0 and py == 0 and pz == 0:
            raise SingularityError("Yukawa field is singular at r = 0")
        if any(mu == 0 for mu in derivs):
            return 0.0
        fn = _yukawa_derivative(tuple(sorted(derivs)))
        return complex(fn(px, py, pz, self.g, self.m))


@dataclass(frozen=True)
class ConstantVector(Profile):
    """Spacetime-constant covariant vector ``A_mu``."""

    components: tuple = (0.0, 0.0, 0.0, 0.0)
    rank = 1

    def component(self, indices, derivs, x):
        if derivs:
            return 0.0
        return complex(self.components[indices[0]])


def ConstantPotential(V: float) -> ConstantVector:
    """Electrostatic 4-potential ``A_mu = (V, 0, 0, 0)``."""
    if not math.isfinite(V):
        raise ConfigError("potential must be finite")
    return ConstantVector((float(V), 0.0, 0.0, 0.0))


@dataclass(frozen=True)
class FieldConfig:
    fields: Mapping = field(default_factory=dict)
    constants: Mapping = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.constants.items():
            if not math.isfinite(abs(complex(v))):
                raise ConfigError(f"constant {k} must be finite")

    def profile(self, name: str) -> Profile:
        try:
            return self.fields[name]
        except KeyError:
            raise ConfigError(f"no profile assigned to field {name!r}") from None

    def constant(self, name: str) -> complex:
        if name == "pi":
            return math.pi
        try:
            return self.constants[name]
        except KeyError:
            raise ConfigError(f"no value assigned to constant {name!r}") from None


# --------------------------------------------------------------------------
# evaluation

def _atom_array(a, cfg: FieldConfig, x: SpacetimePoint) -> np.ndarray:
    if isinstance(a, Metric):
        arr = ETA.astype(complex)
    elif isinstance(a, Field):
        prof = cfg.profile(a.name)
        k, d = len(a.indices), len(a.derivs)
        if prof.rank != k:
            raise ConfigError(f"profile for {a.name} has rank {prof.rank}, field has {k} indices")
        arr = np.empty((4,) * (k + d), dtype=complex)
        for comp in np.ndindex(*arr.shape):
            arr[comp] = prof.component(comp[:k], comp[k:], x)
        if a.conj:
            arr = arr.conj()
        if k + d == 0:
            return arr.reshape(())
    elif isinstance(a, (SpinorSandwich, FormalGamma, Partial)):
        raise UnsupportedNumericError("spinor expressions are evaluated symbolically only")
    else:
        raise TypeError(a)
    for axis, i in enumerate(C.slots(a)):
        if i.up:
            arr = np.moveaxis(np.tensordot(ETA, arr, axes=([1], [axis])), 0, axis)
    return arr


class Evaluator:
    """Compiled form of an expression for repeated evaluation at points.

    ``components`` fixes free indices by name (``{"mu": 0}``); every free
    index must be fixed.
    """

    def __init__(self, e: Expr, components: Optional[Mapping[str, int]] = None):
        self.monos = C.canonical_monos(e)
        self.components = dict(components or {})
        for m in self.monos:
            for a in m.atoms:
                if isinstance(a, (SpinorSandwich, FormalGamma, Partial)):
                    raise UnsupportedNumericError("spinor expressions are evaluated symbolically only")
            free = {i.name for i in C.mono_free_indices(m)}
            missing = free - set(self.components)
            if missing:
                raise ConfigError(f"free indices {sorted(missing)} need fixed components")

    def _mono(self, m: C.Mono, cfg: FieldConfig, x: SpacetimePoint) -> complex:
        value = complex(m.coeff)
        for n, p in m.consts:
            value *= complex(cfg.constant(n)) ** p
        if not m.atoms:
            return value
        free = {i.name for i in C.mono_free_indices(m)}
        letters: dict = {}
        operands, subs = [], []
        for a in m.atoms:
            arr = _atom_array(a, cfg, x)
            keep = []
            for axis, i in reversed(list(enumerate(C.slots(a)))):
                if i.name in free:
                    arr = np.take(arr, self.components[i.name], axis=axis)
                else:
                    keep.append(i.name)
            keep.reverse()
            for n in keep:
                letters.setdefault(n, ascii_letters[len(letters)])
            operands.append(arr)
            subs.append("".join(letters[n] for n in keep))
        return value * complex(np.einsum(",".join(subs) + "->", *operands))

    def __call__(self, cfg: FieldConfig, x: SpacetimePoint) -> complex:
        return sum((self._mono(m, cfg, x) for m in self.monos), 0j)


def evaluate(e: Expr, cfg: FieldConfig, x: SpacetimePoint,
             components: Optional[Mapping[str, int]] = None) -> complex:
    """Value of ``e`` at ``x``; free indices must be fixed via ``components``."""
    return Evaluator(e, components)(cfg, x)


# --------------------------------------------------------------------------
# scenarios built on evaluation

def _builtin(name: str):
    from .models import load_builtin
    return load_builtin(name)


@functools.lru_cache(maxsize=None)
def _kg_em_operator():
    from .variational import euler_lagrange
    model = _builtin("kg_em")
    return euler_lagrange(model, "phi", conj=True).lhs


def kg_em_residual(m: float, U: float, e: float = 1.0) -> complex:
    """Apply the minimally coupled KG operator to a motionless plane wave of
    energy ``m + U`` in the constant potential ``A_mu = (U/e, 0, 0, 0)``;
    returns the residual divided by ``phi``."""
    if e == 0:
        raise ConfigError("charge must be nonzero")
    cfg = FieldConfig({"phi": MotionlessWave(m + U), "A": ConstantPotential(U / e)}, {"m": m, "e": e})
    x = SpacetimePoint(0.0)
    phi = cfg.profile("phi").component((), (), x)
    return evaluate(_kg_em_operator(), cfg, x) / phi


@dataclass(frozen=True)
class Box:
    lengths: tuple = (1.0, 1.0, 1.0)
    duration: float = 1.0
    origin: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.duration <= 0 or any(s <= 0 for s in self.lengths):
            raise ConfigError("box sides and duration must be positive")


def _quadrature(box: Box, n: int):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    spans = (box.duration,) + tuple(box.lengths)
    axes = []
    for lo, span in zip(box.origin, spans):
        axes.append((lo + (nodes + 1) * span / 2, weights * span / 2))
    for idx in np.ndindex(*(n,) * 4):
        pt = [axes[a][0][k] for a, k in enumerate(idx)]
        w = math.prod(axes[a][1][k] for a, k in enumerate(idx))
        yield SpacetimePoint(*pt), w


@dataclass(frozen=True)
class ActionResult:
    rate: float  # dS/dt after normalization
    action: complex  # integral of L over the box
    norm: complex  # integral of rho over the box
    closed_form: Optional[float] = None


def action_box(model, cfg: FieldConfig, box: Box = Box(), field_name: str = "phi",
               current: str = "j", order: int = 3) -> ActionResult:
    """Normalized action rate ``dS/dt = int L / int rho`` over a box, with
    ``rho`` the time component of the model's current definition."""
    prof = cfg.profile(field_name)
    dens = Evaluator(model.density)
    if current in model.definitions:
        rho_expr = model.definition(current, Index("mu", False))
    else:
        rho_expr = _builtin("kg_free_complex").definition("j", Index("mu", False))
    rho = Evaluator(rho_expr, {"mu": 0})
    s_l = s_r = 0j
    for x, w in _quadrature(box, order):
        s_l += w * dens(cfg, x)
        s_r += w * rho(cfg, x)
    if abs(s_r) == 0:
        raise ConfigError("normalization integral vanishes")
    closed = None
    if isinstance(prof, PlaneWave):
        m = float(np.real(cfg.constant("m")))
        p2 = float(np.dot(prof.p, prof.p))
        closed = (prof.E ** 2 - p2 - m ** 2) / (2 * prof.E)
    return ActionResult(float(np.real(s_l / s_r)), s_l, s_r, closed)


def classical_action_rate(m: float, v: float) -> float:
    """``dS/dt = -m sqrt(1 - v^2)`` of a free point particle."""
    if not 0 <= abs(v) < 1:
        raise ConfigError("speed must satisfy |v| < 1")
    return -m * math.sqrt(1 - v * v)


@functools.lru_cache(maxsize=None)
def _t00_expr():
    from .variational import stress_energy
    return stress_energy(_builtin("kg_free_real"), "phi")


def yukawa_phi(g: float, m: float, r: float) -> float:
    if r <= 0:
        raise SingularityError("Yukawa field needs r > 0")
    return g * math.exp(-m * r) / (4 * math.pi * r)


def yukawa_t00_closed(g: float, m: float, r: float) -> float:
    phi = yukawa_phi(g, m, r)
    return (1 / (2 * r * r) + m / r + m * m) * phi * phi


def yukawa_t00(g: float, m: float, r: float, route: str = "symbolic") -> float:
    """Energy density of the static Yukawa field at radius ``r``.

    ``route="symbolic"`` evaluates the derived canonical tensor; ``"closed"``
    uses the closed form ``(1/(2r^2) + m/r + m^2) phi^2``.
    """
    if r <= 0:
        raise SingularityError("Yukawa field needs r > 0")
    if route == "closed":
        return yukawa_t00_closed(g, m, r)
    if route != "symbolic":
        raise ValueError(f"unknown route {route!r}")
    cfg = FieldConfig({"phi": Yukawa(g, m)}, {"m": m})
    v = evaluate(_t00_expr(), cfg, SpacetimePoint(0.0, 0.0, 0.0, r), {"mu": 0, "nu": 0})
    return float(v.real)


# --------------------------------------------------------------------------
# four-vectors

def minkowski_dot(a: Sequence[float], b: Sequence[float]) -> float:
    return float(np.asarray(a) @ ETA @ np.asarray(b))


def four_velocity(v: Sequence[float]) -> np.ndarray:
    """``gamma (1, v)`` for a 3-velocity with |v| < 1."""
    v = np.asarray(v, dtype=float)
    s2 = float(v @ v)
    if s2 >= 1:
        raise ConfigError("speed must be below 1")
    return np.concatenate([[1.0], v]) / math.sqrt(1 - s2)


def orthogonality_check(force: Sequence[float], velocity: Sequence[float], tol: float = EQUALITY_TOL) -> float:
    """``f^mu v_mu`` for a normalized 4-velocity."""
    norm = minkowski_dot(velocity, velocity)
    if abs(norm - 1) > tol:
        raise ConfigError(f"velocity is not normalized: v.v = {norm!r}")
    return minkowski_dot(force, velocity)


def yukawa_force(g: float, m: float, point: Sequence[float], lam: float = 1.0) -> np.ndarray:
    """Static scalar 4-force ``f^mu = (0, lam grad phi)`` at a spatial point."""
    cfg = FieldConfig({"phi": Yukawa(g, m)})
    x = SpacetimePoint(0.0, *point)
    prof = cfg.profile("phi")
    return np.array([0.0] + [lam * prof.component((), (k,), x).real for k in (1, 2, 3)])


def lorentz_force(F: np.ndarray, j: Sequence[float]) -> np.ndarray:
    """``f^mu = F^{mu nu} j_nu`` with contravariant ``F`` and ``j``."""
    F = np.asarray(F, dtype=float)
    if not np.allclose(F, -F.T, atol=0):
        raise ConfigError("field tensor must be antisymmetric")
    return F @ ETA @ np.asarray(j, dtype=float)


# --------------------------------------------------------------------------
# finite differences

def finite_diff_check(e: Expr, cfg: FieldConfig, x: SpacetimePoint, h: float = 1e-4,
                      components: Optional[Mapping[str, int]] = None) -> float:
    """Largest deviation between central differences and the symbolic
    derivative over the four coordinates, relative to the larger of the
    derivative and the function value."""
    if h <= 0:
        raise ConfigError("step must be positive")
    f = Evaluator(e, components)
    base = abs(f(cfg, x))
    name = C.fresh_name()
    d = C.differentiate(e, Index(name, False))
    worst = 0.0
    for mu in range(4):
        comps = dict(components or {})
        comps[name] = mu
        sym = Evaluator(d, comps)(cfg, x)
        num = (f(cfg, x.shifted(mu, h)) - f(cfg, x.shifted(mu, -h))) / (2 * h)
        scale = max(abs(sym), base)
        if scale == 0:
            continue
        worst = max(worst, abs(num - sym) / scale)
    return worst
