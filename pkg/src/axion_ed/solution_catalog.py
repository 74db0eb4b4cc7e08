"""Registry of exact solution families of the Maxwell-axion system.

Every family is a :class:`FamilyDescriptor` holding its parameter schema,
constraints, required source, sampling window and a quote that locates it
in the source text. ``instantiate`` turns a descriptor plus parameters into
a :class:`~axion_ed.fields_core.FieldConfiguration`.

Printed forms that do not solve the equations and have no repair live in
a separate table (``list_defects``); they can still be instantiated so that
their failure is observable.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional

import numpy as np

from .fields_core import FieldConfiguration, sample_admissible
from .pde_residuals import SourceProfile
from .profiles import (
    Fn,
    Harmonic2D,
    PlanePair,
    as_fn,
    as_harmonic,
    as_pair,
    fn_name,
)
from . import special_functions as sf


class UnknownFamily(KeyError):
    pass


class ConstraintViolation(ValueError):
    pass


class MissingFunctionParam(ValueError):
    pass


class CauchyRiemannViolation(ValueError):
    pass


class MixedThetaParams(ValueError):
    pass


# ------------------------------------------------------------------ schema

@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str  # real | function | pair | harmonic | choice
    default: object = None
    doc: str = ""
    choices: tuple = ()


@dataclass(frozen=True)
class Constraint:
    """``expr(reals)`` returns a slack; kind decides what counts as satisfied.

    eq: |slack| <= 1e-9 (scaled), pos: slack > 0, ne: |slack| > 1e-12.
    """

    expression: str
    kind: str
    expr: Callable[[dict], float]

    def evaluate(self, reals: Mapping) -> tuple[bool, float]:
        v = float(self.expr(reals))
        if self.kind == "eq":
            return abs(v) <= 1e-9 * (1.0 + max((abs(x) for x in reals.values()
                                                 if isinstance(x, (int, float))), default=0.0)), v
        if self.kind == "pos":
            return v > 0.0, v
        if self.kind == "ne":
            return abs(v) > 1e-12, v
        raise ValueError(f"unknown constraint kind {self.kind!r}")


def _when(cond: Callable[[dict], bool], f: Callable[[dict], float], kind: str) -> Callable[[dict], float]:
    # inactive conditional constraints report a slack that always passes
    neutral = {"eq": 0.0, "pos": 1.0, "ne": 1.0}[kind]
    return lambda r: f(r) if cond(r) else neutral


@dataclass(frozen=True)
class FamilyParams:
    reals: Mapping = field(default_factory=dict)
    functions: Mapping = field(default_factory=dict)


@dataclass(frozen=True)
class Built:
    evaluator: Callable
    domain: Optional[Callable] = None
    gradient: Optional[Callable] = None


@dataclass(frozen=True)
class FamilyDescriptor:
    id: str
    anchor: str
    section: str
    required_source: str  # Zero | LinearMass | Extended
    params: tuple
    builder: Callable
    constraints: tuple = ()
    singular_loci: str = "none"
    window: tuple = ((2.0, -2.0, -2.0, -2.0), (3.0, 2.0, 2.0, 2.0))
    system: str = "pseudoscalar"
    sample_region: Optional[Callable] = None
    non_lie: bool = False
    reduction_backed: bool = False
    defect: str = ""

    @property
    def real_names(self) -> list[str]:
        return [p.name for p in self.params if p.kind in ("real", "choice")]

    @property
    def function_names(self) -> list[str]:
        return [p.name for p in self.params if p.kind in ("function", "pair", "harmonic")]

    def defaults(self) -> FamilyParams:
        return FamilyParams({p.name: p.default for p in self.params if p.kind in ("real", "choice")},
                            {p.name: p.default for p in self.params if p.kind not in ("real", "choice")})

    def source(self, reals: Mapping) -> SourceProfile:
        if self.required_source == "Zero":
            return SourceProfile.zero()
        if self.required_source == "LinearMass":
            return SourceProfile.linear_mass(abs(float(reals.get("m", 0.0))))
        if self.required_source == "Extended":
            return SourceProfile.extended(lambda th, s: s, name="p.p")
        raise ValueError(self.required_source)

    def to_dict(self) -> dict:
        d = self.defaults()
        return {
            "id": self.id,
            "anchor": self.anchor,
            "section": self.section,
            "required_source": self.required_source,
            "system": self.system,
            "params": [{"name": p.name, "kind": p.kind, "doc": p.doc,
                        **({"choices": list(p.choices)} if p.choices else {})} for p in self.params],
            "defaults": {**{k: v for k, v in d.reals.items()},
                         **{k: _fn_label(v) for k, v in d.functions.items()}},
            "constraints": [c.expression for c in self.constraints],
            "singular_loci": self.singular_loci,
            "window": [list(self.window[0]), list(self.window[1])],
            "non_lie": self.non_lie,
            "reduction_backed": self.reduction_backed,
            **({"defect": self.defect} if self.defect else {}),
        }


def _fn_label(v):
    if isinstance(v, (Fn, str)) or callable(v):
        return fn_name(v) if not isinstance(v, (PlanePair, Harmonic2D)) else v.name
    if isinstance(v, (PlanePair, Harmonic2D)):
        return v.name
    return v


# ----------------------------------------------------------------- helpers

def _cols(X):
    return X[:, 0], X[:, 1], X[:, 2], X[:, 3]


def _v3(a, b, c, n):
    return np.stack([np.broadcast_to(np.asarray(v, dtype=float), (n,)) for v in (a, b, c)], axis=1)


def _sc(v, n):
    return np.broadcast_to(np.asarray(v, dtype=float), (n,)).copy()


def linear_profile(a: float, c: float, amp1: float, amp2: float, tol: float = 1e-12) -> Fn:
    """Solution of theta'' = -a theta + c.

    a > 0: amp1 cos(mu w) + amp2 sin(mu w) + c/mu^2 with mu^2 = a;
    a < 0: amp1 exp(s w) + amp2 exp(-s w) - c/s^2 with s^2 = -a;
    a = 0: c w^2/2 + amp1 w + amp2.
    """
    if a > tol:
        mu = math.sqrt(a)
        return Fn("trig", lambda w: amp1 * np.cos(mu * w) + amp2 * np.sin(mu * w) + c / a,
                  lambda w: mu * (amp2 * np.cos(mu * w) - amp1 * np.sin(mu * w)))
    if a < -tol:
        s = math.sqrt(-a)
        return Fn("exp", lambda w: amp1 * np.exp(s * w) + amp2 * np.exp(-s * w) + c / a,
                  lambda w: s * (amp1 * np.exp(s * w) - amp2 * np.exp(-s * w)))
    return Fn("poly", lambda w: 0.5 * c * w * w + amp1 * w + amp2, lambda w: c * w + amp1)


def _r(name, default, doc=""):
    return ParamSpec(name, "real", default, doc)


def _f(name, default, doc=""):
    return ParamSpec(name, "function", default, doc)


def _eq(expr, f):
    return Constraint(expr, "eq", f)


def _pos(expr, f):
    return Constraint(expr, "pos", f)


def _ne(expr, f):
    return Constraint(expr, "ne", f)


def _radius(X):
    return np.sqrt(X[:, 1] ** 2 + X[:, 2] ** 2 + X[:, 3] ** 2)


def _rho(X):
    return np.sqrt(X[:, 1] ** 2 + X[:, 2] ** 2)


def _away_from_cut(X):
    # excludes the branch cut of atan2 along the negative x1 axis
    return (_rho(X) > 0.3) & ((X[:, 1] > 0) | (np.abs(X[:, 2]) > 0.05))


def _r_at_least(rmin):
    return lambda X: _radius(X) >= rmin


def _rho_at_least(rmin):
    return lambda X: _rho(X) >= rmin


def _lightcone_at_least(smin):
    return lambda X: X[:, 0] + X[:, 3] >= smin


# ------------------------------------------------------------- plane waves

def _b_plane_lightlike(r, f):
    eps, k, c, b, m = r["eps"], r["k"], r["c"], r["b"], r["m"]
    F1, F2 = f["F1"], f["F2"]
    if c == 0 and m == 0:
        th_fn = f["theta"]
    else:
        const = -c * b / (c * c + m * m)
        th_fn = Fn("const", lambda w: np.full_like(w, const), lambda w: np.zeros_like(w))

    def ev(X):
        x0, x1, x2, x3 = _cols(X)
        w = eps * x0 - k * x3
        th = th_fn(w)
        f1, f2 = F1(w), F2(w)
        n = X.shape[0]
        E = _v3(f1, f2, c * th + b, n)
        B = _v3(-(k / eps) * f2, (k / eps) * f1, c, n)
        return E, B, th

    return Built(ev)


def _b_plane_generic(r, f):
    eps, k = r["eps"], r["k"]
    c1, c2, c3, b1, b2, b3, m = (r[n] for n in ("c1", "c2", "c3", "b1", "b2", "b3", "m"))
    d = eps * eps - k * k
    a = c1 ** 2 + c2 ** 2 + (c3 ** 2 + m ** 2) / d
    c = c1 * b1 + c2 * b2 + c3 * b3
    return Built(_plane_generic_fields(r, linear_profile(a, c, r["amp1"], r["amp2"])))


def _plane_generic_fields(r, prof):
    eps, k = r["eps"], r["k"]
    c1, c2, c3, b1, b2, b3 = (r[n] for n in ("c1", "c2", "c3", "b1", "b2", "b3"))
    d = eps * eps - k * k

    def ev(X):
        x0, x1, x2, x3 = _cols(X)
        w = eps * x0 - k * x3
        th = prof(w)
        n = X.shape[0]
        B = _v3(k * c1 * th - k * b1 + eps * c2, k * c2 * th - k * b2 - eps * c1, c3, n)
        E = _v3(eps * c2 * th - eps * b2 - k * c1, -eps * c1 * th + eps * b1 - k * c2,
                c3 * th - b3 * d, n)
        return E, B, th

    return ev


def _two_scale_parts(r):
    eps, k, ck, dk = r["eps"], r["k"], r["ck"], r["dk"]

    def fields(X):
        x0, x1 = X[:, 0], X[:, 1]
        w = eps * x0 + k * x1
        cw, sw = np.cos(w), np.sin(w)
        n = X.shape[0]
        E = _v3(r["e"], ck * eps * cw + dk * eps * sw, ck * eps * sw - dk * eps * cw, n)
        B = _v3(0.0, ck * k * sw - dk * k * cw, -ck * k * cw - dk * k * sw, n)
        return E, B

    return fields


def _b_two_scale(r, f):
    fields = _two_scale_parts(r)
    al, nu, c3 = r["alpha"], r["nu"], r["c3"]

    def ev(X):
        E, B = fields(X)
        return E, B, al * X[:, 0] + nu * X[:, 1] + c3

    return Built(ev)


# ------------------------------------------------- radial and cylindrical

def _b_coulomb(r, f):
    q = r["q"]
    p1, p2 = f["phi1"], f["phi2"]

    def ev(X):
        x0 = X[:, 0]
        rr = _radius(X)
        E = q * X[:, 1:] / rr[:, None] ** 3
        th = (p1(x0 + rr) + p2(x0 - rr)) / rr
        return E, np.zeros_like(E), th

    return Built(ev, lambda X: _radius(X) > 0.2)


def _b_coulomb_dipole(r, f):
    q = r["q"]
    cv = np.array([r["d1"], r["d2"], r["d3"]])

    def ev(X):
        rr = _radius(X)
        E = q * X[:, 1:] / rr[:, None] ** 3
        return E, np.zeros_like(E), X[:, 1:] @ cv / rr ** 3

    return Built(ev, lambda X: _radius(X) > 0.2)


def _b_radial_massive(r, f):
    q, c1, m = r["q"], r["c1"], r["m"]

    def ev(X):
        rr = _radius(X)
        th = c1 * np.sin(m * X[:, 0]) * np.exp(-q / rr)
        u = X[:, 1:] / rr[:, None] ** 3
        return -q * th[:, None] * u, -q * u, th

    return Built(ev, lambda X: _radius(X) > 0.2)


def _b_cylindric(r, f):
    b = r["b"]

    def ev(X):
        x1, x2 = X[:, 1], X[:, 2]
        rho3 = _rho(X) ** 3
        n = X.shape[0]
        E = _v3(x1 / rho3, x2 / rho3, 0.0, n)
        B = _v3(x2 / rho3, -x1 / rho3, b, n)
        return E, B, np.arctan2(x2, x1)

    return Built(ev, _away_from_cut)


def _b_scalar_log(r, f):
    def ev(X):
        rr = _radius(X)
        E = X[:, 1:] / rr[:, None] ** 2
        return E, np.zeros_like(E), np.log(rr)

    def grad(X):
        rr2 = _radius(X) ** 2
        return np.column_stack([np.zeros(X.shape[0]), X[:, 1:] / rr2[:, None]])

    return Built(ev, lambda X: _radius(X) > 0.2, grad)


def _b_scalar_unit_b(r, f):
    bv = np.array([r["b1"], r["b2"], r["b3"]])

    def ev(X):
        rr = _radius(X)
        E = X[:, 1:] / rr[:, None]
        return E, np.broadcast_to(bv, E.shape), np.log(rr)

    return Built(ev, lambda X: _radius(X) > 0.2)


def _b_radial_log(r, f):
    def ev(X):
        x1, x2, x3 = X[:, 1], X[:, 2], X[:, 3]
        rr2 = _radius(X) ** 2
        rho = _rho(X)
        n = X.shape[0]
        B = _v3(x1 * x3 / (rr2 * rho), x2 * x3 / (rr2 * rho), -rho / rr2, n)
        E = X[:, 1:] / rr2[:, None]
        return E, B, np.arctan2(rho, x3)

    return Built(ev, lambda X: _rho(X) > 0.2)


# ---------------------------------------------------- algebraic reductions

def _a11_theta(r):
    c3, c4, m = r["c3"], r["c4"], r["m"]
    if r.get("theta") is not None:
        return float(r["theta"])
    s = c3 * c3 + m * m
    return -c3 * c4 / s if s > 0 else 0.0


def _a11_slack(r):
    return (r["c3"] ** 2 + r["m"] ** 2) * _a11_theta(r) + r["c3"] * r["c4"]


def _b_a11(r, f):
    return Built(_a11_fields(r, _a11_theta(r)))


def _a11_fields(r, th0):
    c1, c2, c3, c4 = r["c1"], r["c2"], r["c3"], r["c4"]

    def ev(X):
        z = 0.5 * (X[:, 3] - X[:, 0])
        fz = c1 * np.sin(z) + c2 * np.cos(z)
        gz = c2 * np.sin(z) - c1 * np.cos(z)
        n = X.shape[0]
        return _v3(fz, gz, c3 * th0 + c4, n), _v3(-gz, fz, c3, n), _sc(th0, n)

    return ev


def _b_a11_general(r, f):
    c3, c4 = r["c3"], r["c4"]
    th0 = _a11_theta(r)
    F, G = f["f"], f["g"]

    def ev(X):
        z = 0.5 * (X[:, 3] - X[:, 0])
        fz, gz = F(z), G(z)
        n = X.shape[0]
        return _v3(fz, gz, c3 * th0 + c4, n), _v3(-gz, fz, c3, n), _sc(th0, n)

    return Built(ev)


def _b_a20(r, f):
    c1, c2, c3, c4, m, t0 = (r[n] for n in ("c1", "c2", "c3", "c4", "m", "theta0"))
    phi2 = f["phi2"]

    def ev(X):
        x0, x1, x2, x3 = _cols(X)
        w = x0 + x3
        p2 = phi2(w)
        p1 = (-c3 * c4 - (c3 ** 2 + m ** 2 * w ** 4) * t0 - c2 * p2 * w ** 3) / (c1 * w ** 3)
        q = x1 * x1 - x2 * x2
        B1 = (-2 * c1 * x1 * x2 + c2 * q + 2 * c3 * x1 + 2 * c3 * x2 * t0 + 2 * c4 * x2) / (2 * w ** 3) + p1
        B2 = (c1 * q + 2 * c2 * x1 * x2 + 2 * c3 * x2 - 2 * c3 * x1 * t0 - 2 * c4 * x1) / (2 * w ** 3) + p2
        B3 = (-c1 * x2 + c2 * x1 + c3) / w ** 2
        E3 = (-c1 * x1 - c2 * x2 + c3 * t0 + c4) / w ** 2
        n = X.shape[0]
        return _v3(c1 / w - B2, B1 + c2 / w, E3, n), _v3(B1, B2, B3, n), _sc(t0, n)

    return Built(ev, lambda X: X[:, 0] + X[:, 3] > 0.3)


def _b_a26(r, f):
    ca, cb, m = r["ca"], r["cb"], r["m"]
    if m != 0:
        th_fn = Fn("zero", lambda w: np.zeros_like(w), lambda w: np.zeros_like(w))
    else:
        th_fn = f["theta"]

    def ev(X):
        x0, x1, x2, x3 = _cols(X)
        w = x0 + x3
        th = th_fn(w)
        td = th_fn.d(w)
        z = (x0 * x0 - x1 * x1 - x2 * x2 - x3 * x3) / w + th / 2
        C, S = np.cos(z), np.sin(z)
        q, p = x1 * x1 - x2 * x2, 2 * x1 * x2
        w2, w3 = w * w, w ** 3
        Ea = _v3(C / w + td * C / (2 * w) - q * C / w3 - p * S / w3,
                 S / w + td * S / (2 * w) + q * S / w3 - p * C / w3,
                 -2 * x1 * C / w2 - 2 * x2 * S / w2, len(w))
        Ba = _v3(-S / w + td * S / (2 * w) + q * S / w3 - p * C / w3,
                 C / w - td * C / (2 * w) + q * C / w3 + p * S / w3,
                 2 * x1 * S / w2 - 2 * x2 * C / w2, len(w))
        Eb = _v3(S / w + td * S / (2 * w) - q * S / w3 + p * C / w3,
                 -C / w - td * C / (2 * w) - q * C / w3 - p * S / w3,
                 -2 * x1 * S / w2 + 2 * x2 * C / w2, len(w))
        Bb = _v3(C / w - td * C / (2 * w) - q * C / w3 - p * S / w3,
                 S / w - td * S / (2 * w) + q * S / w3 - p * C / w3,
                 -2 * x1 * C / w2 - 2 * x2 * S / w2, len(w))
        return ca * Ea + cb * Eb, ca * Ba + cb * Bb, th

    return Built(ev, lambda X: X[:, 0] + X[:, 3] > 0.3)


# ------------------------------------------------- linear-ODE reductions

def _profile_a00(r, a, c):
    return linear_profile(a, c, r["amp1"], r["amp2"])


def _b_a5(r, f):
    c1, c2, c3, c4, m = (r[n] for n in ("c1", "c2", "c3", "c4", "m"))
    return Built(_a5_fields(r, _profile_a00(r, c3 ** 2 - m ** 2, c3 * c4)))


def _a5_fields(r, prof):
    c1, c2, c3, c4 = (r[n] for n in ("c1", "c2", "c3", "c4"))

    def ev(X):
        s = X[:, 0] + X[:, 3]
        th = prof(X[:, 2])
        n = X.shape[0]
        b1 = s * (c1 * th + c2)
        return _v3(-c1 * s, b1, c3, n), _v3(b1, c1 * s, -c3 * th + c4, n), th

    return ev


def _b_a7(r, f):
    c1, c2, c3, c4, m, al = (r[n] for n in ("c1", "c2", "c3", "c4", "m", "alpha"))
    return Built(_a7_fields(r, _profile_a00(r, c3 ** 2 - m ** 2, c3 * c4)), _a7_domain)


def _a7_domain(X):
    return np.abs(X[:, 0] + X[:, 3]) > 0.2


def _a7_fields(r, prof):
    c1, c2, c3, c4, al = (r[n] for n in ("c1", "c2", "c3", "c4", "alpha"))

    def ev(X):
        s = X[:, 0] + X[:, 3]
        th = prof(X[:, 2] - al * np.log(np.abs(s)))
        n = X.shape[0]
        b1 = (-c1 * th + c2) / s
        b2 = (-al * c3 * th + al * c4 - c1) / s
        return _v3(-b2, b1, c3, n), _v3(b1, b2, -c3 * th + c4, n), th

    return ev


def _b_a15(r, f):
    c1, c2, m = r["c1"], r["c2"], r["m"]
    return Built(_a15_fields(r, _profile_a00(r, c2 ** 2 - m ** 2, -c1 * c2)))


def _a15_fields(r, prof):
    c1, c2 = r["c1"], r["c2"]

    def ev(X):
        s = X[:, 0] + X[:, 3]
        th = prof(X[:, 1] + 0.5 * s * s)
        n = X.shape[0]
        b1 = -c2 * s * th - c1 * s
        b2 = c2 * s
        return _v3(-b2, b1, -c2, n), _v3(b1, b2, c2 * th + c1, n), th

    return ev


def _b_a16(r, f):
    c2, c3, c4, c5, m, al = (r[n] for n in ("c2", "c3", "c4", "c5", "m", "alpha"))
    g = 1.0 + al * al
    return Built(_a16_fields(r, _profile_a00(r, (c3 ** 2 - m ** 2) / g, c3 * c4 / g)))


def _a16_fields(r, prof):
    c2, c3, c4, c5, al = (r[n] for n in ("c2", "c3", "c4", "c5", "alpha"))
    g = 1.0 + al * al

    def ev(X):
        x0, x1, x2, x3 = _cols(X)
        s = x0 + x3
        th = prof(x2 - al * x1 - 0.5 * al * s * s)
        n = X.shape[0]
        b1 = s * (c3 * th - c4) + c5 / g * (th - al) + c2
        b2 = c3 * s + c5 / g * (al * th + 1) + al * c2
        return _v3(-b2, b1, c3, n), _v3(b1, b2, -c3 * th + c4, n), th

    return ev


def _b_a25(r, f):
    c3, m, be = r["c3"], r["m"], r["beta"]
    return Built(_a25_fields(r, _profile_a00(r, c3 ** 2 - m ** 2, 0.0)), _a7_domain)


def _a25_fields(r, prof):
    c3, be = r["c3"], r["beta"]

    def ev(X):
        s = X[:, 0] + X[:, 3]
        th = prof(X[:, 2] - be * np.log(np.abs(s)))
        n = X.shape[0]
        b1 = c3 / s
        b2 = be * c3 * th / s
        return _v3(-b2, b1, -c3, n), _v3(b1, b2, c3 * th, n), th

    return ev


def _a4_fields(r, prof):
    c1, c2, c3, c4, c5, c6 = (r[f"c{i}"] for i in range(1, 7))

    def ev(X):
        x0, x3 = X[:, 0], X[:, 3]
        w2 = x0 * x0 - x3 * x3
        th = prof(np.sqrt(w2))
        n = X.shape[0]
        B = _v3((-c2 * x3 * th + c6 * x3 - c1 * x0) / w2, (-c1 * x3 * th + c5 * x3 + c2 * x0) / w2, c3, n)
        E = _v3((-c1 * x0 * th + c5 * x0 + c2 * x3) / w2, (c2 * x0 * th + c1 * x3 - c6 * x0) / w2,
                c3 * th + c4, n)
        return E, B, th

    return ev


def _a4_consts(r):
    c1, c2, c3, c4, c5, c6, m = (r[n] for n in ("c1", "c2", "c3", "c4", "c5", "c6", "m"))
    return {"nu2": c1 * c1 + c2 * c2, "mu2": c3 * c3 + m * m,
            "delta": c1 * c5 + c2 * c6, "alpha": -c3 * c4}


def _a4_timelike(X):
    return X[:, 0] - np.abs(X[:, 3]) > 0.2


def _b_a4(r, f):
    k = _a4_consts(r)
    c7, c8 = r["c7"], r["c8"]
    nu2, mu2, de, al = k["nu2"], k["mu2"], k["delta"], k["alpha"]
    if mu2 == 0 and nu2 > 0:
        nu = math.sqrt(nu2)
        prof = Fn("log-trig", lambda w: c7 * np.sin(nu * np.log(w)) + c8 * np.cos(nu * np.log(w))
                  + de / nu2 + al * w * w / (nu2 + 4))
    elif mu2 == 0:
        prof = Fn("log", lambda w: al * w * w / 4 + de / 2 * np.log(w) ** 2 + c7 * np.log(w) + c8)
    else:
        mu = math.sqrt(mu2)
        prof = Fn("bessel", lambda w: c7 * sf.bessel_j(0, mu * w) + c8 * sf.bessel_y(0, mu * w) + al / mu2)
    return Built(_a4_fields(r, prof), _a4_timelike)


def _a8_consts(r):
    c1, c2, c3, c4, c5, c6, m = (r[n] for n in ("c1", "c2", "c3", "c4", "c5", "c6", "m"))
    return {"lam2": c1 * c1 - c2 * c2, "kap2": m * m - c3 * c3,
            "delta": c1 * c5 + c2 * c6, "alpha": c3 * c4}


def _b_a8(r, f):
    c1, c2, c3, c4, c5, c6, c7, c8 = (r[f"c{i}"] for i in range(1, 9))
    k = _a8_consts(r)
    lam = math.sqrt(max(k["lam2"], 0.0))
    de, al, kap2 = k["delta"], k["alpha"], k["kap2"]
    if abs(kap2) <= 1e-12:
        prof = Fn("power", lambda w: c7 * w ** lam + c8 * w ** (-lam) - de / lam ** 2
                  + al * w * w / (4 - lam ** 2))
    else:
        kap = math.sqrt(kap2)
        prof = Fn("modified-bessel", lambda w: c7 * sf.bessel_i(lam, kap * w)
                  + c8 * sf.bessel_k(lam, kap * w) - al / kap2)
    return Built(_a8_fields(r, prof), _rho_at_least(0.3))


def _a8_fields(r, prof):
    c1, c2, c3, c4, c5, c6 = (r[f"c{i}"] for i in range(1, 7))

    def ev(X):
        x1, x2 = X[:, 1], X[:, 2]
        w2 = x1 * x1 + x2 * x2
        th = prof(np.sqrt(w2))
        n = X.shape[0]
        B = _v3((c2 * x2 * th + c1 * x1 - c6 * x2) / w2, (-c2 * x1 * th + c1 * x2 + c6 * x1) / w2,
                -c3 * th + c4, n)
        E = _v3((c1 * x1 * th + c5 * x1 - c2 * x2) / w2, (c1 * x2 * th + c5 * x2 + c2 * x1) / w2, c3, n)
        return E, B, th

    return ev


def _b_a19(r, f):
    c1, c2, c3, m, c7, c8 = (r[n] for n in ("c1", "c2", "c3", "m", "c7", "c8"))
    mu2 = c3 * c3 - m * m
    al = c2 * c3
    if mu2 > 1e-12:
        mu = math.sqrt(mu2)
        prof = Fn("bessel", lambda w: c7 * sf.bessel_j(0, mu * w) + c8 * sf.bessel_y(0, mu * w) + al / mu2)
    elif mu2 < -1e-12:
        kap = math.sqrt(-mu2)
        prof = Fn("modified-bessel", lambda w: c7 * sf.bessel_i(0, kap * w) + c8 * sf.bessel_k(0, kap * w)
                  + al / mu2)
    else:
        prof = Fn("log", lambda w: al * w * w / 4 + c7 * np.log(w) + c8)
    return Built(_a19_fields(r, prof), _a19_domain)


def _a19_domain(X):
    return (_rho(X) > 0.3) & (np.abs(X[:, 0] + X[:, 3]) > 0.2)


def _a19_fields(r, prof):
    c1, c2, c3 = r["c1"], r["c2"], r["c3"]

    def ev(X):
        x0, x1, x2, x3 = _cols(X)
        s = x0 + x3
        w2 = x1 * x1 + x2 * x2
        th = prof(np.sqrt(w2))
        n = X.shape[0]
        b1 = c1 * (x1 + x2 * th) / (s * w2)
        b2 = c1 * (x2 - x1 * th) / (s * w2)
        return _v3(-b2, b1, c3, n), _v3(b1, b2, -c3 * th + c2, n), th

    return ev


def _a24_fields(r, th_of_w, phi_of_w):
    c1, c2 = r["c1"], r["c2"]

    def ev(X):
        x0, x1, x2, x3 = _cols(X)
        w = np.sqrt(x0 * x0 - x1 * x1 - x3 * x3)
        s = x0 + x3
        th = th_of_w(w)
        ph = phi_of_w(w, th)
        n = X.shape[0]
        B = _v3(-x3 * ph, -c2 * x0 / w ** 3 - c1 / s, x1 * ph, n)
        E = _v3(-c2 * x3 / w ** 3 + c1 / s, x0 * ph, c2 * x1 / w ** 3, n)
        return E, B, th

    return ev


def _a24_timelike(X):
    return X[:, 0] - np.sqrt(X[:, 1] ** 2 + X[:, 3] ** 2) > 0.2


def _b_a24(r, f):
    c2, c3, c4, c5, m = (r[n] for n in ("c2", "c3", "c4", "c5", "m"))
    if m == 0:
        th = lambda w: c4 * np.sin(c2 / w) + c5 * np.cos(c2 / w) - c3 / c2
    else:
        th = lambda w: (c4 * np.sin(m * w) + c5 * np.cos(m * w)) / w
    phi = lambda w, t: -(c2 * t + c3) / w ** 3
    return Built(_a24_fields(r, th, phi), _a24_timelike)


# ------------------------------------------------ nonlinear-ODE reductions

def _a6_fields(al, c1, c2, p1, dp1, p2, dp2, th_fn):
    def ev(X):
        w, x2 = X[:, 1], X[:, 2]
        ch, sh = np.cosh(x2 / al), np.sinh(x2 / al)
        f1, f1d, f2, f2d = p1(w), dp1(w), p2(w), dp2(w)
        th = th_fn(w)
        n = X.shape[0]
        B = _v3(f1 * ch - f2 * sh, al * f2d * ch - al * f1d * sh, -c1 * th + c2, n)
        E = _v3(al * f1d * ch - al * f2d * sh, f1 * sh - f2 * ch, c1, n)
        return E, B, th

    return ev


def _a6_branch_linear(r):
    m, c1 = r["m"], r["c1"]
    return "oscillating" if m * m > c1 * c1 else "growing"


def _b_a6_linear(r, f):
    al, c1, c2, c4, c5, m, sg = (r[n] for n in ("alpha", "c1", "c2", "c4", "c5", "m", "sign"))
    if m * m > c1 * c1:
        nu = math.sqrt(m * m - c1 * c1)
        root = math.sqrt(1 - c4 * c4)
        t0 = -c1 * c2 / nu ** 2 + sg * root * c5 / nu
        slope = sg * nu / (al * root)
    else:
        mu = math.sqrt(c1 * c1 - m * m)
        root = math.sqrt(c4 * c4 - 1)
        t0 = c1 * c2 / mu ** 2 + sg * root * c5 / mu
        slope = sg * mu / (al * root)
    p2 = lambda w: slope * w + c5
    dp2 = lambda w: np.full_like(w, slope)
    ev = _a6_fields(al, c1, c2, lambda w: c4 * p2(w), lambda w: c4 * dp2(w), p2, dp2,
                    lambda w: w / al + t0)
    return Built(ev)


def _b_a6_airy(r, f):
    al, c1, c2, c7, c8, k0, k1 = (r[n] for n in ("alpha", "c1", "c2", "c7", "c8", "k0", "k1"))
    g = c1 * c2
    lam = np.cbrt(g / al)
    nu = (1 / al - k1) / g
    p = lambda w: c7 * sf.airy_ai(lam * (w - nu)) + c8 * sf.airy_bi(lam * (w - nu))
    dp = lambda w: lam * (c7 * sf.airy_ai_prime(lam * (w - nu)) + c8 * sf.airy_bi_prime(lam * (w - nu)))
    ev = _a6_fields(al, c1, c2, p, dp, p, dp, lambda w: 0.5 * g * w * w + k1 * w + k0)
    return Built(ev)


def _a6_elliptic_parts(r):
    al, c4, c5, c7, sg = (r[n] for n in ("alpha", "c4", "c5", "c7", "sign"))
    lam = 0.5 * (c4 * c4 - 1)
    kap = (1 - c5) / al ** 2
    if kap > 0:
        A, b = sg * math.sqrt(kap / lam), math.sqrt(kap / 2)
        p = lambda w: A * np.tanh(b * w + c7)
        dp = lambda w: A * b / np.cosh(b * w + c7) ** 2
        ip = lambda w: A * A * (w - np.tanh(b * w + c7) / b)
        dom = None
    elif kap < 0:
        A, b = sg * math.sqrt(-kap / lam), math.sqrt(-kap / 2)
        p = lambda w: A * np.tan(b * w + c7)
        dp = lambda w: A * b / np.cos(b * w + c7) ** 2
        ip = lambda w: A * A * (np.tan(b * w + c7) / b - w)
        dom = lambda X: np.abs(b * X[:, 1] + c7) < 1.4
    else:
        A = sg * math.sqrt(2 / lam)
        p = lambda w: A / w
        dp = lambda w: -A / w ** 2
        ip = lambda w: -2 / (lam * w)
        dom = lambda X: np.abs(X[:, 1]) > 0.2
    return lam, p, dp, ip, dom


def _b_a6_elliptic(r, f):
    al, c1, c4, c5, c6 = (r[n] for n in ("alpha", "c1", "c4", "c5", "c6"))
    lam, p, dp, ip, dom = _a6_elliptic_parts(r)
    th = lambda w: al * lam * ip(w) + c5 * w / al + c6
    ev = _a6_fields(al, c1, 0.0, lambda w: c4 * p(w), lambda w: c4 * dp(w), p, dp, th)
    return Built(ev, dom)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


class _LambertProfile:
    """phi(w) defined by w - c6 = c4 alpha^2 int_0^phi dt / (W(c5^2 e^{c4^2 alpha^2 t^2/2}) + 1)."""

    def __init__(self, al, c4, c5, c6):
        self.al, self.c4, self.c5, self.c6 = al, c4, c5, c6
        self.g = c4 * c4 * al * al / 2

    def _w(self, t):
        return sf.lambert_w(self.c5 ** 2 * np.exp(self.g * t * t))

    def _G(self, phi):
        t = 0.5 * phi[:, None] * (_GL_NODES[None, :] + 1.0)
        vals = 1.0 / (self._w(t.ravel()).reshape(t.shape) + 1.0)
        return self.c4 * self.al ** 2 * 0.5 * phi * (vals @ _GL_WEIGHTS)

    def dphi(self, phi):
        return (self._w(phi) + 1.0) / (self.c4 * self.al ** 2)

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        target = w.ravel() - self.c6
        phi = target * (sf.lambert_w(self.c5 ** 2) + 1.0) / (self.c4 * self.al ** 2)
        for _ in range(60):
            step = (self._G(phi) - target) * self.dphi(phi)
            phi = phi - step
            if np.max(np.abs(step), initial=0.0) <= 1e-15 * (1.0 + np.max(np.abs(phi), initial=0.0)):
                break
        return phi.reshape(w.shape)


def _b_a6_lambert(r, f):
    al, c2, c4, c5, c6, m, sg = (r[n] for n in ("alpha", "c2", "c4", "c5", "c6", "m", "sign"))
    c1 = math.sqrt(m * m + 1 / al ** 2)
    prof = _LambertProfile(al, c4, c5, c6)
    k = sg * math.sqrt(1 + c4 * c4)
    cache = {}

    def phi(w):
        key = w.tobytes()
        if key not in cache:
            cache.clear()
            cache[key] = prof(w)
        return cache[key]

    ev = _a6_fields(al, c1, c2, lambda w: k * phi(w), lambda w: k * prof.dphi(phi(w)),
                    phi, lambda w: prof.dphi(phi(w)), lambda w: al * c4 * phi(w) + c1 * c2 * al * al)
    return Built(ev)


def _b_a9(r, f):
    al, c2, c3, c5, c6, c7 = (r[n] for n in ("alpha", "c2", "c3", "c5", "c6", "c7"))
    mu = c3 / (c6 * c6 + c7 * c7)

    def ev(X):
        x0, w = X[:, 0], X[:, 1]
        cw, sw = np.cos(mu * w), np.sin(mu * w)
        p1, p2 = c6 * cw + c7 * sw, c6 * sw - c7 * cw
        d1, d2 = -mu * p2, mu * p1
        ct, st = np.cos(x0 / al), np.sin(x0 / al)
        n = X.shape[0]
        E = _v3(c2, p1 * ct - p2 * st, p1 * st + p2 * ct, n)
        B = _v3(0.0, -al * d1 * ct + al * d2 * st, -al * d1 * st - al * d2 * ct, n)
        return E, B, (1 / al - al * mu * mu) * w + c5

    return Built(ev)


def _a17_fields(al, c1, c2, u, du, v, dv, th_fn):
    def ev(X):
        x1, x2 = X[:, 1], X[:, 2]
        z = np.arctan2(x2, x1)
        w = 0.5 * np.log(x1 * x1 + x2 * x2)
        e = np.exp(-w)
        g1, g2 = al * e * du(w), e * u(w)
        h1, h2 = -al * e * dv(w), e * v(w)
        cz, sz = np.cos(z), np.sin(z)
        ep, em = np.exp(z / al), np.exp(-z / al)
        xp0, xp1 = ep * (g1 * cz - g2 * sz), ep * (g1 * sz + g2 * cz)
        xm0, xm1 = em * (h1 * cz - h2 * sz), em * (h1 * sz + h2 * cz)
        th = th_fn(w)
        n = X.shape[0]
        E = _v3(0.5 * (xp0 + xm0), 0.5 * (xp1 + xm1), c1, n)
        B = _v3(-0.5 * (xp1 - xm1), 0.5 * (xp0 - xm0), -c1 * th + c2, n)
        return E, B, th

    return ev


def _b_a17(r, f):
    al, c1, c2, c3, c4, c5, c6, k, branch = (
        r[n] for n in ("alpha", "c1", "c2", "c3", "c4", "c5", "c6", "k", "branch"))
    if branch == "exponential":
        u = lambda w: c5 * np.exp(k * w)
        du = lambda w: k * c5 * np.exp(k * w)
        v = lambda w: c6 * np.exp(-k * w)
        dv = lambda w: -k * c6 * np.exp(-k * w)
        th = lambda w: -(1 + al * al * k * k) * w / al + c4
    else:
        u = du = v = dv = lambda w: np.zeros_like(w)
        th = lambda w: 0.25 * c1 * c2 * np.exp(2 * w) + c3 * w + c4
    return Built(_a17_fields(al, c1, c2, u, du, v, dv, th), _away_from_cut)


# ------------------------------------------------- weak transversality

def _pd12_theta(r):
    c2, c3, m, mu = r["c2"], r["c3"], r["m"], r["mu"]
    a1, a2, b1, b2 = r["a1"], r["a2"], r["b1"], r["b2"]
    k, n = math.sqrt(m * m + mu * mu), math.sqrt(c3 * c3 + mu * mu)

    def th(x1, x2):
        X = a1 * np.cosh(k * x1) + a2 * np.sinh(k * x1)
        Y = b1 * np.cos(n * x2) + b2 * np.sin(n * x2)
        if abs(c3 * c3 - m * m) > 1e-12:
            part = c2 * c3 / (c3 * c3 - m * m)
        else:
            part = c2 * c3 * (x1 * x1 + x2 * x2) / 4
        return X * Y + part

    return th


def _b_pd12(r, f):
    c2, c3 = r["c2"], r["c3"]
    th_fn = _pd12_theta(r)
    phi = f["phi"]
    rng = np.random.default_rng(7)
    P = rng.uniform(-2, 2, size=(64, 2))
    h = 1e-5
    t1 = (th_fn(P[:, 0] + h, P[:, 1]) - th_fn(P[:, 0] - h, P[:, 1])) / (2 * h)
    t2 = (th_fn(P[:, 0], P[:, 1] + h) - th_fn(P[:, 0], P[:, 1] - h)) / (2 * h)
    g1, g2 = phi.grad(P[:, 0], P[:, 1])
    bracket = np.max(np.abs(g1 * t2 - g2 * t1))
    if bracket > 1e-6:
        raise ConstraintViolation(f"d1 phi d2 theta - d2 phi d1 theta = 0 violated (max {bracket:.3g})")

    def ev(X):
        x1, x2 = X[:, 1], X[:, 2]
        th = th_fn(x1, x2)
        g1, g2 = phi.grad(x1, x2)
        n = X.shape[0]
        return _v3(0.0, 0.0, c3, n), _v3(g2, -g1, -c3 * th + c2, n), th

    return Built(ev)


def _pd4_profiles(r):
    c1, c2, c4, c5, c7, c8, m = (r[n] for n in ("c1", "c2", "c4", "c5", "c7", "c8", "m"))
    d = m * m - c1 * c1
    if d > 1e-12:
        mu = math.sqrt(d)
        g = lambda y: c4 * np.exp(mu * y) + c5 * np.exp(-mu * y)
        G = lambda y: (c4 * np.exp(mu * y) - c5 * np.exp(-mu * y)) / mu
        h = lambda y: c7 * np.exp(mu * y) + c8 * np.exp(-mu * y) + c1 * c2 / (c1 * c1 - m * m)
    elif d < -1e-12:
        nu = math.sqrt(-d)
        g = lambda y: c4 * np.sin(nu * y) + c5 * np.cos(nu * y)
        G = lambda y: (-c4 * np.cos(nu * y) + c5 * np.sin(nu * y)) / nu
        h = lambda y: c7 * np.sin(nu * y) + c8 * np.cos(nu * y) + c1 * c2 / nu ** 2
    else:
        g = lambda y: c4 * y + c5
        G = lambda y: 0.5 * c4 * y * y + c5 * y
        h = lambda y: 0.5 * c1 * c2 * y * y + c7 * y + c8
    return g, G, h


def _b_pd4(r, f):
    c1, c2, c3, c6 = r["c1"], r["c2"], r["c3"], r["c6"]
    g, G, h = _pd4_profiles(r)

    def ev(X):
        x1, y = X[:, 1], X[:, 2]
        th = x1 * g(y) + h(y)
        ep, em = np.exp(G(y)), np.exp(-G(y))
        n = X.shape[0]
        return (_v3(0.0, c3 * ep + c6 * em, c1, n),
                _v3(c3 * ep - c6 * em, 0.0, -c1 * th + c2, n), th)

    return Built(ev)


def _b_pd5(r, f):
    a1, a2, c1, c2, t0 = (r[n] for n in ("a1", "a2", "c1", "c2", "theta0"))

    def ev(X):
        n = X.shape[0]
        return _v3(a1, a2, c1, n), _v3(a1, a2, -c1 * t0 + c2, n), _sc(t0, n)

    return Built(ev)


def _b_a28(r, f):
    c2, m, mu = r["c2"], r["m"], r["mu"]
    a, b, c, d = r["a"], r["b"], r["c"], r["d"]
    nu = math.sqrt(mu * mu + 0.5 * m * m)

    def ev(X):
        x0, x1, x2, x3 = _cols(X)
        z = x0 + x3
        w = (x0 * x0 - x1 * x1 - x2 * x2 - x3 * x3) / (2 * z)
        xp, xm = w + z, w - z
        phi = (a * np.sin(nu * xp) * np.sin(mu * xm) + b * np.cos(nu * xp) * np.cos(mu * xm)
               + c * np.cos(nu * xp) * np.sin(mu * xm) + d * np.sin(nu * xp) * np.cos(mu * xm))
        n = X.shape[0]
        E = _v3(-c2 * x1 / z ** 3, -c2 * x2 / z ** 3, -c2 / z ** 2, n)
        B = _v3(-c2 * x2 / z ** 3, c2 * x1 / z ** 3, 0.0, n)
        return E, B, phi / z

    return Built(ev, lambda X: X[:, 0] + X[:, 3] > 0.3)


def _b_six(r, f):
    m = r["m"]
    p1, p2, p3, p4, p5 = (f[f"phi{i}"] for i in range(1, 6))
    pair = f["psi"]
    if m == 0:
        w = np.linspace(-6, 6, 241)
        prod = np.max(np.abs((p1(w) + p5(w)) * (p2(w) + p4(w))))
        if prod > 1e-12:
            raise ConstraintViolation(f"(phi1+phi5)(phi2+phi4) = 0 violated (max {prod:.3g})")
        th, dth = p3, p3.d
    else:
        th = lambda w: -(p1(w) + p5(w)) * (p2(w) + p4(w)) / m ** 2
        dth = lambda w: -((p1.d(w) + p5.d(w)) * (p2(w) + p4(w))
                          + (p1(w) + p5(w)) * (p2.d(w) + p4.d(w))) / m ** 2

    def ev(X):
        x0, x1, x2, x3 = _cols(X)
        w = x0 + x3
        t, td = th(w), dth(w)
        b1 = pair.psi1(x1, x2, w) - x1 * p1.d(w) - x2 * (p4.d(w) - p5(w) * td)
        b2 = pair.psi2(x1, x2, w) - x2 * p5.d(w) + x1 * (p2.d(w) - p1(w) * td)
        n = X.shape[0]
        return _v3(-b2, b1, p2(w) + p4(w), n), _v3(b1, b2, p1(w) + p5(w), n), t

    return Built(ev)


# ---------------------------------------------------- reduction-backed

def _b_a4_general(r, f):
    from .reduction_engine import integrate, reduced_spec
    prof = integrate(reduced_spec("A4", r), (1.2, 3.6), {"theta": r["c7"], "dtheta": r["c8"]}, x_init=2.4)
    return Built(_a4_fields(r, prof.component("theta")), _a4_timelike)


def _b_a24_general(r, f):
    from .reduction_engine import integrate, reduced_spec
    prof = integrate(reduced_spec("A24", r), (1.0, 3.2),
                     {"phi": r["c4"], "theta": r["c5"], "dtheta": r["c6"]}, x_init=2.0)
    th, ph = prof.component("theta"), prof.component("phi")
    return Built(_a24_fields(r, th, lambda w, t: ph(w)), _a24_timelike)


def _b_a29(r, f):
    from .reduction_engine import integrate, reduced_spec
    prof = integrate(reduced_spec("A29", r), (1.0, 3.4),
                     {"D": r["d0"], "dD": r["d1"], "D0": r["e0"], "dD0": r["e1"]}, x_init=2.0)
    comps = {"D": prof.component("D"), "D0": prof.component("D0")}
    return Built(_a29_from_components(r, comps), _a29_domain)


def _b_a30(r, f):
    from .reduction_engine import integrate, reduced_spec
    prof = integrate(reduced_spec("A30", r), (0.8, 4.6),
                     {"D": r["d0"], "dD": r["d1"], "D0": r["e0"], "dD0": r["e1"]}, x_init=2.0)
    comps = {"D": prof.component("D"), "D0": prof.component("D0")}
    return Built(_a30_from_components(r, comps), lambda X: _radius(X) > 0.5)


# ------------------------------------------------------- ansatz dispatch

def _a6_from_components(r, c):
    return _a6_fields(r["alpha"], r["c1"], r["c2"], c["phi1"], c["dphi1"], c["phi2"], c["dphi2"], c["theta"])


def _a17_from_components(r, c):
    return _a17_fields(r["alpha"], r["c1"], r["c2"], c["u"], c["du"], c["v"], c["dv"], c["theta"])


def _a29_from_components(r, c):
    c1, c2, mu = r["c1"], r["c2"], r["mu"]
    D, D0 = c["D"], c["D0"]

    def ev(X):
        x0, x1, x2, x3 = _cols(X)
        w = np.sqrt(x0 * x0 - x1 * x1 - x2 * x2)
        th = (D(w) * np.sin(mu * x3) + D0(w)) / w
        k = c1 * th + c2
        n = X.shape[0]
        w3 = w ** 3
        B = _v3(x2 * k / w3, -x1 * k / w3, c1 * x0 / w3, n)
        E = _v3(-c1 * x2 / w3, c1 * x1 / w3, x0 * k / w3, n)
        return E, B, th

    return ev


def _a30_from_components(r, c):
    c1, c2, mu = r["c1"], r["c2"], r["mu"]
    D, D0 = c["D"], c["D0"]

    def ev(X):
        rr = _radius(X)
        th = (D(rr) * np.cos(mu * X[:, 0]) + D0(rr)) / rr
        u = X[:, 1:] / rr[:, None] ** 3
        return (c1 * th - c2)[:, None] * u, c1 * u, th

    return ev


def _a29_domain(X):
    return X[:, 0] - np.sqrt(X[:, 1] ** 2 + X[:, 2] ** 2) > 0.2


# sub-algebra id -> (evaluator factory taking (reals, components), domain)
_ANSATZ = {
    "A1": (lambda r, c: _plane_generic_fields(r, c["theta"]), None),
    "A4": (lambda r, c: _a4_fields(r, c["theta"]), _a4_timelike),
    "A5": (lambda r, c: _a5_fields(r, c["theta"]), None),
    "A7": (lambda r, c: _a7_fields(r, c["theta"]), _a7_domain),
    "A8": (lambda r, c: _a8_fields(r, c["theta"]), _rho_at_least(0.3)),
    "A11": (lambda r, c: _a11_fields(r, float(c["theta"](np.zeros(1))[0])), None),
    "A15": (lambda r, c: _a15_fields(r, c["theta"]), None),
    "A16": (lambda r, c: _a16_fields(r, c["theta"]), None),
    "A19": (lambda r, c: _a19_fields(r, c["theta"]), _a19_domain),
    "A24": (lambda r, c: _a24_fields(r, c["theta"], lambda w, t: c["phi"](w)), _a24_timelike),
    "A25": (lambda r, c: _a25_fields(r, c["theta"]), _a7_domain),
    "A6": (_a6_from_components, None),
    "A17": (_a17_from_components, _away_from_cut),
    "A29": (_a29_from_components, _a29_domain),
    "A30": (_a30_from_components, lambda X: _radius(X) > 0.5),
}


def ansatz_ids() -> list[str]:
    return sorted(_ANSATZ)


def ansatz_evaluator(sub_id: str, reals: Mapping, components: Mapping[str, Callable]):
    """Field evaluator and domain of a sub-algebra ansatz driven by given profiles.

    ``components`` maps profile names (theta, phi1, dphi1, ...) to callables of
    the invariant variable.
    """
    try:
        make, dom = _ANSATZ[sub_id]
    except KeyError:
        raise UnknownFamily(sub_id) from None
    return make(dict(reals), components), dom


# --------------------------------------------------------------- registry

_LIGHT_X = ((2.0, -2.0, -2.0, -2.0), (3.0, 2.0, 2.0, 2.0))
_SHELL = ((1.5, -2.5, -2.5, -2.5), (2.5, 2.5, 2.5, 2.5))
_HALF = ((2.0, 1.0, -1.5, -1.5), (3.0, 2.5, 1.5, 1.5))
_TIMELIKE = ((2.0, -0.8, -0.8, -0.8), (3.0, 0.8, 0.8, 0.8))


def _registry():
    D = FamilyDescriptor
    fams = [
        D("PlaneWaveLightlike", "The system (\\ref{red}) is easily integrated", "3.4", "LinearMass",
          (_r("eps", 1.0), _r("k", 1.0), _r("c", 0.0), _r("b", 0.0), _r("m", 0.0),
           _f("F1", "sin"), _f("F2", "cos"), _f("theta", "half_cos", "free profile when c = m = 0")),
          _b_plane_lightlike,
          (_eq("eps^2 - k^2 = 0", lambda r: r["eps"] ** 2 - r["k"] ** 2),
           _ne("eps != 0", lambda r: r["eps"])),
          window=_LIGHT_X),
        D("PlaneWaveGeneric", "solutions of (\\ref{red}) have the following form", "3.4", "LinearMass",
          (_r("eps", 2.0), _r("k", 1.0), _r("c1", 0.3), _r("c2", 0.2), _r("c3", 0.5),
           _r("b1", 0.4), _r("b2", -0.3), _r("b3", 0.2), _r("m", 0.5),
           _r("amp1", 0.4), _r("amp2", 0.3)),
          _b_plane_generic,
          (_ne("eps^2 - k^2 != 0", lambda r: r["eps"] ** 2 - r["k"] ** 2),)),
        D("TwoScaleSuperposable", "arbitrary constants restricted by the only relation", "3.4", "Zero",
          (_r("eps", 2.0), _r("k", 1.0), _r("alpha", 1.0), _r("nu", 2.0), _r("ck", 0.3),
           _r("dk", 0.2), _r("e", 0.5), _r("c3", 0.1)),
          _b_two_scale,
          (_eq("eps^2 - k^2 = nu eps - alpha k",
               lambda r: r["eps"] ** 2 - r["k"] ** 2 - (r["nu"] * r["eps"] - r["alpha"] * r["k"])),)),
        D("Coulomb", "for $\\theta$ there are two solutions", "3.5", "Zero",
          (_r("q", 1.0), _f("phi1", "sin"), _f("phi2", "half_cos")),
          _b_coulomb, singular_loci="r = 0", window=_SHELL, sample_region=_r_at_least(1.0)),
        D("RadialMassive", "Radial solutions which generate nontrivial terms", "3.5", "LinearMass",
          (_r("q", 1.0), _r("c1", 1.0), _r("m", 1.0)),
          _b_radial_massive, (_pos("q > 0", lambda r: r["q"]),),
          singular_loci="r = 0", window=_SHELL, sample_region=_r_at_least(1.0)),
        D("CylindricCoulombLike", "rather similar to the three dimensional Coulomb field", "3.5", "Zero",
          (_r("b", 0.5),), _b_cylindric,
          singular_loci="x1 = x2 = 0 and the branch cut x1 < 0, x2 = 0", window=_HALF,
          sample_region=_rho_at_least(1.0)),
        D("ScalarVariantStationary", "Two more stationary exact solutions", "3.5", "Zero",
          (), _b_scalar_log, singular_loci="r = 0", window=_SHELL, system="scalar",
          sample_region=_r_at_least(1.0)),
        D("AlgebraicA11", "should satisfy the following linear algebraic relation", "4.1", "LinearMass",
          (_r("c1", 0.6), _r("c2", 0.4), _r("c3", 1.0), _r("c4", 2.0), _r("m", 0.0),
           _r("theta", None, "optional explicit constant; derived when omitted")),
          _b_a11,
          (_eq("(c3^2+m^2) theta + c3 c4 = 0", _a11_slack),)),
        D("AlgebraicA11-generalized", "cannot be obtained via symmetry reduction", "4.1", "LinearMass",
          (_r("c3", 1.0), _r("c4", 0.5), _r("m", 0.5), _r("theta", None),
           _f("f", "tanh"), _f("g", "gauss")),
          _b_a11_general,
          (_eq("(c3^2+m^2) theta + c3 c4 = 0", _a11_slack),), non_lie=True),
        D("AlgebraicA20", "Algebra $A_{20}: \\quad \\langle G_1, G_2, P_0-P_3 \\rangle$", "4.1", "LinearMass",
          (_r("c1", 1.0), _r("c2", 0.5), _r("c3", 0.4), _r("c4", 0.3), _r("m", 0.2),
           _r("theta0", 0.5), _f("phi2", "sin")),
          _b_a20, (_ne("c1 != 0", lambda r: r["c1"]),), singular_loci="x0 + x3 = 0", sample_region=_lightcone_at_least(1.5)),
        D("AlgebraicA26", "Algebra $ A_{26}: \\quad \\langle J_{12}-P_0+ P_3, G_1, G_2 \\rangle$", "4.1",
          "LinearMass",
          (_r("ca", 0.5), _r("cb", 0.3), _r("m", 0.0), _f("theta", "half_cos", "free profile when m = 0")),
          _b_a26, singular_loci="x0 + x3 = 0", sample_region=_lightcone_at_least(1.5)),
        D("LinearA5", "and satisfies equation (\\ref{A00}) where $a=c_3^2-m^2,\\ c=c_3c_4$", "4.2",
          "LinearMass",
          (_r("c1", 0.3), _r("c2", 0.0), _r("c3", 0.8), _r("c4", 0.5), _r("m", 0.4),
           _r("amp1", 0.5), _r("amp2", 0.2)),
          _b_a5, (_eq("c1 c2 = 0", lambda r: r["c1"] * r["c2"]),)),
        D("LinearA7", "Algebra $A_7: \\quad \\langle J_{03}+\\alpha P_2, P_0-P_3, P_1 \\rangle$", "4.2",
          "LinearMass",
          (_r("c1", 0.4), _r("c2", 0.3), _r("c3", 0.8), _r("c4", 0.5), _r("m", 0.4), _r("alpha", 0.7),
           _r("amp1", 0.5), _r("amp2", 0.2)),
          _b_a7, singular_loci="x0 + x3 = 0", sample_region=_lightcone_at_least(1.5)),
        D("LinearA15", "Algebra $ A_{15}: \\quad \\langle G_1-P_0, P_0-P_3, P_2 \\rangle$", "4.2", "LinearMass",
          (_r("c1", 0.3), _r("c2", 0.8), _r("m", 0.4), _r("amp1", 0.3), _r("amp2", 0.2)),
          _b_a15),
        D("LinearA16", "Algebra $ A_{16}: \\quad \\langle G_1+P_0, P_1+\\alpha P_2, P_0-P_3 \\rangle$", "4.2",
          "LinearMass",
          (_r("c2", 0.2), _r("c3", 0.8), _r("c4", 0.5), _r("c5", 0.3), _r("m", 0.4), _r("alpha", 0.5),
           _r("amp1", 0.3), _r("amp2", 0.2)),
          _b_a16),
        D("LinearA25", "Algebra $ A_{25}: \\quad \\langle J_{03}+\\alpha P_1+\\beta P_2, G_1, P_0-P_3 \\rangle$",
          "4.2", "LinearMass",
          (_r("c3", 0.8), _r("m", 0.4), _r("beta", 0.6), _r("amp1", 0.5), _r("amp2", 0.3)),
          _b_a25, singular_loci="x0 + x3 = 0", sample_region=_lightcone_at_least(1.5)),
        D("LinearA4-elementary", "are reduced to the following form", "4.2", "LinearMass",
          (_r("c1", 0.6), _r("c2", 0.4), _r("c3", 0.0), _r("c4", 0.0), _r("c5", 0.3), _r("c6", 0.2),
           _r("c7", 0.5), _r("c8", 0.3), _r("m", 0.0)),
          _b_a4,
          (_eq("nu mu = 0 (nu^2 = c1^2+c2^2, mu^2 = c3^2+m^2)",
               lambda r: math.sqrt(_a4_consts(r)["nu2"] * _a4_consts(r)["mu2"])),),
          singular_loci="x0^2 = x3^2; timelike region x0 > |x3|", window=_TIMELIKE),
        D("LinearA8-elementary", "Algebra $ A_8: \\quad \\langle J_{12}, P_0, P_3 \\rangle$", "4.2", "LinearMass",
          (_r("c1", 1.2), _r("c2", 0.5), _r("c3", 0.5), _r("c4", 1.0), _r("c5", 0.3), _r("c6", 0.2),
           _r("c7", 0.3), _r("c8", 0.4), _r("m", 0.5)),
          _b_a8,
          (_pos("lambda^2 = c1^2 - c2^2 > 0", lambda r: _a8_consts(r)["lam2"]),
           Constraint("m^2 - c3^2 >= 0", "pos", lambda r: _a8_consts(r)["kap2"] + 1e-300),
           _eq("delta = alpha lambda^2 / kappa^2 when m^2 > c3^2",
               _when(lambda r: _a8_consts(r)["kap2"] > 1e-12,
                     lambda r: _a8_consts(r)["delta"] - _a8_consts(r)["alpha"] * _a8_consts(r)["lam2"]
                     / _a8_consts(r)["kap2"], "eq")),
           _ne("lambda^2 != 4 when m^2 = c3^2",
               _when(lambda r: abs(_a8_consts(r)["kap2"]) <= 1e-12,
                     lambda r: _a8_consts(r)["lam2"] - 4.0, "ne"))),
          singular_loci="x1 = x2 = 0", window=_HALF, sample_region=_rho_at_least(1.0)),
        D("LinearA19", "Algebra $ A_{19}: \\quad \\langle J_{12}, J_{03}, P_0-P_3 \\rangle$", "4.2", "LinearMass",
          (_r("c1", 0.5), _r("c2", 0.4), _r("c3", 0.9), _r("m", 0.5), _r("c7", 0.4), _r("c8", 0.3)),
          _b_a19, singular_loci="x1 = x2 = 0 and x0 + x3 = 0", window=_HALF,
          sample_region=_rho_at_least(1.0)),
        D("LinearA24-elementary", "Algebra $ A_{24}: \\quad \\langle G_1, J_{03}, P_2 \\rangle$", "4.2",
          "LinearMass",
          (_r("c1", 0.0), _r("c2", 0.8), _r("c3", 0.3), _r("c4", 0.4), _r("c5", 0.3), _r("m", 0.0)),
          _b_a24,
          (_eq("c1 = 0", lambda r: r["c1"]),
           _eq("m c2 = 0", lambda r: r["m"] * r["c2"]),
           _ne("c2 != 0 when m = 0", _when(lambda r: r["m"] == 0, lambda r: r["c2"], "ne"))),
          singular_loci="x0^2 = x1^2 + x3^2; region x0 > sqrt(x1^2+x3^2)", window=_TIMELIKE),
        D("NonlinearA6-linear", "First let us present solutions linear in $\\omega$", "4.3", "LinearMass",
          (_r("alpha", 1.0), _r("c1", 0.3), _r("c2", 0.4), _r("c4", 0.6), _r("c5", 0.2), _r("m", 0.8),
           _r("sign", 1.0)),
          _b_a6_linear,
          (_ne("m^2 != c1^2", lambda r: r["m"] ** 2 - r["c1"] ** 2),
           _pos("c4^2 < 1 when m^2 > c1^2",
                _when(lambda r: r["m"] ** 2 > r["c1"] ** 2, lambda r: 1 - r["c4"] ** 2, "pos")),
           _pos("c4^2 > 1 when c1^2 > m^2",
                _when(lambda r: r["c1"] ** 2 > r["m"] ** 2, lambda r: r["c4"] ** 2 - 1, "pos")),
           _ne("alpha != 0", lambda r: r["alpha"])),
          window=((2.0, -2.0, -1.5, -2.0), (3.0, 2.0, 1.5, 2.0))),
        D("NonlinearA6-Airy", "is a linear combination of Airy functions", "4.3", "LinearMass",
          (_r("alpha", 1.0), _r("c1", 0.5), _r("c2", 1.0), _r("c7", 0.6), _r("c8", 0.1),
           _r("k0", 0.1), _r("k1", 0.5), _r("m", 0.5)),
          _b_a6_airy,
          (_eq("c1^2 = m^2", lambda r: r["c1"] ** 2 - r["m"] ** 2),
           _ne("c1 c2 != 0", lambda r: r["c1"] * r["c2"])),
          window=((2.0, -2.0, -1.5, -2.0), (3.0, 2.0, 1.5, 2.0))),
        D("NonlinearA6-elliptic-elementary", "admits particular solutions in elementary ones", "4.3",
          "LinearMass",
          (_r("alpha", 1.0), _r("c1", 0.5), _r("c4", 1.5), _r("c5", 0.5), _r("c6", 0.1), _r("c7", 0.2),
           _r("m", 0.5), _r("sign", 1.0)),
          _b_a6_elliptic,
          (_eq("c1^2 = m^2", lambda r: r["c1"] ** 2 - r["m"] ** 2),
           _pos("c4^2 > 1", lambda r: r["c4"] ** 2 - 1)),
          window=((2.0, -2.0, -1.5, -2.0), (3.0, 2.0, 1.5, 2.0))),
        D("NonlinearA6-LambertW", "is the Lambert function", "4.3", "LinearMass",
          (_r("alpha", 2.0), _r("c2", 0.2), _r("c4", 1.0), _r("c5", 0.1), _r("c6", 0.0), _r("m", 0.3),
           _r("sign", 1.0)),
          _b_a6_lambert,
          (_ne("c4 != 0", lambda r: r["c4"]), _ne("alpha != 0", lambda r: r["alpha"])),
          window=((2.0, -2.0, -2.0, -2.0), (3.0, 2.0, 2.0, 2.0))),
        D("NonlinearA9-particular", "Algebra $A_9: \\quad \\langle J_{23}+\\alpha P_0, P_2, P_3 \\rangle", "4.3",
          "LinearMass",
          (_r("alpha", 1.0), _r("c1", 0.0), _r("c2", 0.3), _r("c3", 0.5), _r("c5", 0.1), _r("c6", 0.6),
           _r("c7", 0.4), _r("m", 0.0)),
          _b_a9,
          (_eq("c1 = 0", lambda r: r["c1"]), _eq("m = 0", lambda r: r["m"]),
           _pos("c6^2 + c7^2 > 0", lambda r: r["c6"] ** 2 + r["c7"] ** 2))),
        D("NonlinearA17-particular", "Algebra $ A_{17}: \\quad \\langle J_{03}+\\alpha J_{12}, P_0, P_3 \\rangle",
          "4.3", "LinearMass",
          (_r("alpha", 2.0), _r("c1", 0.5), _r("c2", 0.0), _r("c3", 0.3), _r("c4", 0.1), _r("c5", 0.4),
           _r("c6", 0.3), _r("k", 0.5), _r("m", 0.5),
           ParamSpec("branch", "choice", "exponential", "profile branch", ("exponential", "field-free"))),
          _b_a17,
          (_eq("c1^2 = m^2", lambda r: r["c1"] ** 2 - r["m"] ** 2),
           _eq("c2 = 0 on the exponential branch",
               _when(lambda r: r["branch"] == "exponential", lambda r: r["c2"], "eq"))),
          singular_loci="x1 = x2 = 0 and the branch cut x1 < 0, x2 = 0", window=_HALF,
          sample_region=_rho_at_least(1.0)),
        D("WeakTransversality-pd12", "solves the two-dimension Laplace equation", "4.4", "LinearMass",
          (_r("c2", 0.4), _r("c3", 0.8), _r("m", 0.5), _r("mu", 0.6), _r("a1", 0.2), _r("a2", 0.1),
           _r("b1", 0.3), _r("b2", 0.2), ParamSpec("phi", "harmonic", "constant")),
          _b_pd12),
        D("WeakTransversality-pd4", "Analogously, imposing condition (\\ref{6.2}) we obtain the following solutions",
          "4.4", "LinearMass",
          (_r("c1", 0.8), _r("c2", 0.4), _r("c3", 0.3), _r("c4", 0.2), _r("c5", 0.3), _r("c6", 0.2),
           _r("c7", 0.2), _r("c8", 0.1), _r("m", 0.5)),
          _b_pd4),
        D("WeakTransversality-pd5", "If conditions (\\ref{6.3}) are imposed then one obtains the solutions",
          "4.4", "LinearMass",
          (_r("a1", 0.6), _r("a2", 0.8), _r("c1", 1.0), _r("c2", 0.0), _r("theta0", 1.0), _r("m", 0.0)),
          _b_pd5,
          (_eq("a1^2 + a2^2 = (c1^2 - m^2) theta0 - c1 c2",
               lambda r: r["a1"] ** 2 + r["a2"] ** 2 - ((r["c1"] ** 2 - r["m"] ** 2) * r["theta0"]
                                                      - r["c1"] * r["c2"])),)),
        D("SeparatedA28", "admits solutions in separated variables", "4.4", "LinearMass",
          (_r("c1", 0.0), _r("c2", 0.5), _r("m", 0.6), _r("mu", 0.5), _r("a", 0.3), _r("b", 0.2),
           _r("c", 0.2), _r("d", 0.1)),
          _b_a28, (_eq("c1 = 0", lambda r: r["c1"]),), singular_loci="x0 + x3 = 0", sample_region=_lightcone_at_least(1.5)),
        D("SixFunction", "depend on six (!) arbitrary functions", "4.5", "LinearMass",
          (_r("m", 0.0), _f("phi1", "sin"), _f("phi2", "cos"), _f("phi3", "half_cos"), _f("phi4", "zero"),
           _f("phi5", "neg_sin"), ParamSpec("psi", "pair", "quadratic")),
          _b_six),
        D("ReductionA4-general", "The general real solution of equation", "4.2", "LinearMass",
          (_r("c1", 0.5), _r("c2", 0.3), _r("c3", 0.6), _r("c4", 0.4), _r("c5", 0.2), _r("c6", 0.3),
           _r("m", 0.5), _r("c7", 0.4), _r("c8", 0.1)),
          _b_a4_general, singular_loci="x0^2 = x3^2; timelike region x0 > |x3|", window=_TIMELIKE,
          reduction_backed=True),
        D("ReductionA24-general",
          "\\langle G_1, J_{03}, P_2 \\rangle$", "4.2", "LinearMass",
          (_r("c1", 0.4), _r("c2", 0.5), _r("c3", 0.3), _r("m", 0.5), _r("c4", 0.05), _r("c5", 0.3),
           _r("c6", 0.1)),
          _b_a24_general, singular_loci="x0^2 = x1^2 + x3^2", window=_TIMELIKE, reduction_backed=True),
        D("SeparatedA29", "Algebra $ A_{29}:\\ \\ \\langle J_{01},J_{02},J_{12}\\rangle $", "4.4", "LinearMass",
          (_r("c1", 0.5), _r("c2", 0.3), _r("m", 0.5), _r("mu", 0.7), _r("d0", 0.3), _r("d1", 0.1),
           _r("e0", 0.2), _r("e1", -0.1)),
          _b_a29, singular_loci="x0^2 = x1^2 + x2^2", window=_TIMELIKE, reduction_backed=True),
        D("SeparatedA30", "Algebra $ A_{30}:\\ \\langle J_{12},J_{23},J_{31}\\rangle $", "4.4", "LinearMass",
          (_r("c1", 0.5), _r("c2", 0.3), _r("m", 0.5), _r("mu", 0.9), _r("d0", 0.3), _r("d1", 0.1),
           _r("e0", 0.2), _r("e1", -0.1)),
          _b_a30, singular_loci="r = 0", window=_SHELL, sample_region=_r_at_least(1.0),
          reduction_backed=True),
    ]
    return fams


def _defects():
    D = FamilyDescriptor
    return [
        D("Coulomb-dipoleTheta", "for $\\theta$ there are two solutions", "3.5", "Zero",
          (_r("q", 1.0), _r("d1", 1.0), _r("d2", 0.0), _r("d3", 0.0)), _b_coulomb_dipole,
          singular_loci="r = 0", window=_SHELL, sample_region=_r_at_least(1.0),
          defect="Ampere law fails: p x E = (d x x)/r^6 is not balanced"),
        D("RadialLog", "Let us write one more solution", "3.5", "Zero", (), _b_radial_log,
          singular_loci="x1 = x2 = 0", window=_SHELL, sample_region=_rho_at_least(1.0),
          defect="div B = -x3/(r^2 rho) != 0"),
        D("ScalarVariantStationary-unitB", "Two more stationary exact solutions", "3.5", "Zero",
          (_r("b1", 1.0), _r("b2", 0.0), _r("b3", 0.0)), _b_scalar_unit_b,
          (_eq("b1^2 + b2^2 + b3^2 = 1", lambda r: r["b1"] ** 2 + r["b2"] ** 2 + r["b3"] ** 2 - 1),),
          singular_loci="r = 0", window=_SHELL, system="scalar", sample_region=_r_at_least(1.0),
          defect="scalar Gauss law: div E - p.E = 2/r - 1/r = 1/r != 0"),
    ]


_FAMILIES = MappingProxyType({d.id: d for d in _registry()})
_DEFECTS = MappingProxyType({d.id: d for d in _defects()})


# ------------------------------------------------------------- operations

def list_families() -> list[FamilyDescriptor]:
    return list(_FAMILIES.values())


def list_defects() -> list[FamilyDescriptor]:
    return list(_DEFECTS.values())


def get_family(fid: str) -> FamilyDescriptor:
    if fid in _FAMILIES:
        return _FAMILIES[fid]
    if fid in _DEFECTS:
        return _DEFECTS[fid]
    raise UnknownFamily(fid)


def _merge(desc: FamilyDescriptor, params) -> tuple[dict, dict]:
    base = desc.defaults()
    reals = dict(base.reals)
    funcs = dict(base.functions)
    if params is None:
        params = FamilyParams()
    elif isinstance(params, Mapping):
        # flat mapping: route each key by its declared kind
        kinds = {p.name: p.kind for p in desc.params}
        params = FamilyParams({k: v for k, v in params.items() if kinds.get(k, "real") == "real"},
                              {k: v for k, v in params.items() if kinds.get(k, "real") != "real"})
    unknown = set(params.reals) - set(reals)
    if unknown:
        raise ValueError(f"{desc.id}: unknown real parameters {sorted(unknown)}")
    unknown = set(params.functions) - set(funcs)
    if unknown:
        raise ValueError(f"{desc.id}: unknown function parameters {sorted(unknown)}")
    for k, v in params.reals.items():
        reals[k] = v if (v is None or isinstance(v, str)) else float(v)
    funcs.update(params.functions)
    return reals, funcs


def check_constraints(fid: str, params=None) -> list[tuple[str, bool, float]]:
    desc = get_family(fid)
    reals, _ = _merge(desc, params)
    out = []
    for c in desc.constraints:
        try:
            ok, slack = c.evaluate(reals)
        except (ValueError, ZeroDivisionError):
            ok, slack = False, float("nan")
        out.append((c.expression, ok, slack))
    return out


def _resolve_functions(desc: FamilyDescriptor, funcs: dict) -> dict:
    out = {}
    for p in desc.params:
        if p.kind not in ("function", "pair", "harmonic"):
            continue
        v = funcs.get(p.name)
        if v is None:
            raise MissingFunctionParam(f"{desc.id}: function parameter {p.name!r} not supplied")
        out[p.name] = {"function": as_fn, "pair": as_pair, "harmonic": as_harmonic}[p.kind](v)
    return out


def _check_pair(pair: PlanePair, rng=None, n: int = 64, tol: float = 1e-6):
    rng = np.random.default_rng(11) if rng is None else rng
    P = rng.uniform(-2.5, 2.5, size=(n, 3))
    a, b = pair.cr_defect(P[:, 0], P[:, 1], P[:, 2])
    d = np.maximum(np.abs(a), np.abs(b))
    i = int(np.argmax(d))
    if d[i] > tol:
        raise CauchyRiemannViolation(
            f"({pair.name}) Cauchy-Riemann defect {d[i]:.3g} at (x1, x2, w) = {P[i].tolist()}")
    return float(d[i])


def instantiate(fid: str, params=None) -> FieldConfiguration:
    desc = get_family(fid)
    reals, funcs = _merge(desc, params)
    for expr, ok, slack in check_constraints(fid, FamilyParams(reals, {})):
        if not ok:
            raise ConstraintViolation(f"{fid}: constraint '{expr}' violated (slack {slack:.6g})")
    fns = _resolve_functions(desc, funcs)
    for v in fns.values():
        if isinstance(v, PlanePair):
            _check_pair(v)
    built = desc.builder(reals, fns)
    dom = built.domain if built.domain is not None else (lambda X: np.ones(X.shape[0], dtype=bool))
    meta = {"family": desc.id,
            "params": {**reals, **{k: _fn_label(v) for k, v in funcs.items()}},
            "system": desc.system,
            "source": desc.source(reals).to_dict()}
    return FieldConfiguration(built.evaluator, dom, meta, built.gradient)


def apply_arbitrary_functions(fid: str, functions: Mapping, reals: Optional[Mapping] = None) -> FieldConfiguration:
    return instantiate(fid, FamilyParams(dict(reals or {}), dict(functions)))


def superpose(members, fid: str = "TwoScaleSuperposable") -> FieldConfiguration:
    if fid != "TwoScaleSuperposable":
        raise ValueError("only TwoScaleSuperposable members superpose linearly")
    desc = get_family(fid)
    merged = [_merge(desc, p)[0] for p in members]
    if not merged:
        raise ValueError("no members")
    shared = {(r["alpha"], r["nu"], r["c3"]) for r in merged}
    if len(shared) > 1:
        raise MixedThetaParams(f"members disagree on (alpha, nu, c3): {sorted(shared)}")
    for r in merged:
        for expr, ok, slack in check_constraints(fid, FamilyParams(r)):
            if not ok:
                raise ConstraintViolation(f"{fid}: member {r} violates '{expr}' (slack {slack:.6g})")
    if len(merged) == 1:
        return instantiate(fid, FamilyParams(merged[0]))
    parts = [_two_scale_parts(r) for r in merged]
    al, nu, c3 = merged[0]["alpha"], merged[0]["nu"], merged[0]["c3"]

    def ev(X):
        E = np.zeros((X.shape[0], 3))
        B = np.zeros((X.shape[0], 3))
        for p in parts:
            e, b = p(X)
            E += e
            B += b
        return E, B, al * X[:, 0] + nu * X[:, 1] + c3

    meta = {"family": fid, "params": {"members": merged}, "system": "pseudoscalar",
            "source": SourceProfile.zero().to_dict()}
    return FieldConfiguration(ev, metadata=meta)


def sample_points(desc_or_id, cfg: FieldConfiguration, n: int, seed: int = 0,
                  margin: float = 0.02) -> np.ndarray:
    """Seeded admissible points inside the family's sampling window."""
    desc = get_family(desc_or_id) if isinstance(desc_or_id, str) else desc_or_id
    region = desc.sample_region

    def dom(X):
        ok = cfg.admissible(X)
        return ok & region(X) if region is not None else ok

    probe = FieldConfiguration(cfg.evaluator, dom, cfg.metadata, cfg.gradient)
    return sample_admissible(probe, n, np.random.default_rng(seed), desc.window[0], desc.window[1],
                             margin=margin)


def registry_json(include_defects: bool = True) -> str:
    doc = {"families": [d.to_dict() for d in list_families()]}
    if include_defects:
        doc["defects"] = [d.to_dict() for d in list_defects()]
    return json.dumps(doc, indent=2, sort_keys=False)
