"""Reduced ODEs of invariant ansatze, their numeric profiles, and reconstruction.

Profiles are integrated with an explicit 8th-order Runge-Kutta scheme and
stored as Chebyshev interpolants on the integration window. Unlike a
spline, the interpolant is smooth to all orders, which keeps the 4th-order
residual stencils meaningful on reconstructed fields.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.integrate import solve_ivp

from .fields_core import DomainViolation, FieldConfiguration, as_points
from .profiles import Fn
from . import solution_catalog as cat


class UnknownSubalgebra(KeyError):
    pass


class UnsupportedBranch(ValueError):
    pass


class SingularEncounter(RuntimeError):
    pass


class StepUnderflow(RuntimeError):
    pass


class ProfileRangeExceeded(DomainViolation):
    pass


class SingularLocus(ValueError):
    pass


SINGULAR_MARGIN = 1e-3


@dataclass(frozen=True)
class ReducedODE:
    """First-order system ``y' = rhs(w, y)`` in the invariant variable ``w``.

    ``order == 0`` marks a purely algebraic reduction; ``algebraic`` then
    returns the residual of the relation for a given constant state.
    """

    id: str
    variable: str
    state_names: tuple
    rhs: Optional[Callable]
    params: dict = field(default_factory=dict)
    singular_points: tuple = ()
    order: int = 2
    algebraic: Optional[Callable] = None
    note: str = ""

    @property
    def state_dim(self) -> int:
        return len(self.state_names)

    def __call__(self, w, y):
        return self.rhs(w, np.asarray(y, dtype=float))


# -------------------------------------------------------------- specs

def _a00(a, c):
    return lambda w, y: np.array([y[1], -a * y[0] + c])


def _need(params: Mapping, names: Sequence[str], sub: str) -> dict:
    missing = [n for n in names if n not in params]
    if missing:
        raise ValueError(f"{sub}: missing parameters {missing}")
    return {n: float(params[n]) for n in names}


def _spec_a1(p):
    r = _need(p, ("eps", "k", "c1", "c2", "c3", "b1", "b2", "b3", "m"), "A1")
    d = r["eps"] ** 2 - r["k"] ** 2
    if d == 0:
        raise UnsupportedBranch("A1: eps^2 = k^2 reduces to an algebraic relation, not an ODE")
    a = r["c1"] ** 2 + r["c2"] ** 2 + (r["c3"] ** 2 + r["m"] ** 2) / d
    c = r["c1"] * r["b1"] + r["c2"] * r["b2"] + r["c3"] * r["b3"]
    return ReducedODE("A1", "w = eps x0 - k x3", ("theta", "dtheta"), _a00(a, c), {"a": a, "c": c})


def _linear_family(sub, names, ac):
    def make(p):
        r = _need(p, names, sub)
        a, c = ac(r)
        return ReducedODE(sub, _VARIABLES[sub], ("theta", "dtheta"), _a00(a, c), {"a": a, "c": c})
    return make


def _spec_a4(p):
    r = _need(p, ("c1", "c2", "c3", "c4", "c5", "c6", "m"), "A4")
    nu2 = r["c1"] ** 2 + r["c2"] ** 2
    mu2 = r["c3"] ** 2 + r["m"] ** 2
    de = r["c1"] * r["c5"] + r["c2"] * r["c6"]
    al = -r["c3"] * r["c4"]

    def rhs(w, y):
        return np.array([y[1], (de + al * w * w - w * y[1] - (nu2 + mu2 * w * w) * y[0]) / (w * w)])

    return ReducedODE("A4", _VARIABLES["A4"], ("theta", "dtheta"), rhs,
                      {"nu2": nu2, "mu2": mu2, "delta": de, "alpha": al}, (0.0,))


def _spec_a8(p):
    r = _need(p, ("c1", "c2", "c3", "c4", "c5", "c6", "m"), "A8")
    lam2 = r["c1"] ** 2 - r["c2"] ** 2
    q = r["c3"] ** 2 - r["m"] ** 2
    de = r["c1"] * r["c5"] + r["c2"] * r["c6"]
    al = r["c3"] * r["c4"]

    def rhs(w, y):
        return np.array([y[1], (de + al * w * w - w * y[1] + lam2 * y[0] - q * w * w * y[0]) / (w * w)])

    return ReducedODE("A8", _VARIABLES["A8"], ("theta", "dtheta"), rhs,
                      {"lam2": lam2, "q": q, "delta": de, "alpha": al}, (0.0,))


def _spec_a19(p):
    r = _need(p, ("c2", "c3", "m"), "A19")
    mu2 = r["c3"] ** 2 - r["m"] ** 2
    al = r["c2"] * r["c3"]
    return ReducedODE("A19", _VARIABLES["A19"], ("theta", "dtheta"),
                      lambda w, y: np.array([y[1], al - y[1] / w - mu2 * y[0]]),
                      {"mu2": mu2, "alpha": al}, (0.0,))


def _spec_a24(p):
    r = _need(p, ("c1", "c2", "m"), "A24")
    c1, c2, m = r["c1"], r["c2"], r["m"]

    def rhs(w, y):
        ph, th, dth = y
        dph = -(3 * ph + (c1 / w + c2 / w ** 2) * dth) / w
        return np.array([dph, dth, -2 * dth / w + (c1 + c2 / w) * ph - m * m * th])

    return ReducedODE("A24", _VARIABLES["A24"], ("phi", "theta", "dtheta"), rhs, dict(r), (0.0,), order=3)


def _spec_a6(p):
    r = _need(p, ("alpha", "c1", "c2", "m"), "A6")
    al, c1, c2, m = r["alpha"], r["c1"], r["c2"], r["m"]
    if al == 0:
        raise UnsupportedBranch("A6 requires alpha != 0")

    def rhs(w, y):
        f1, d1, f2, d2, th, dth = y
        return np.array([d1, (al * dth * f1 - f1) / al ** 2,
                         d2, (al * dth * f2 - f2) / al ** 2,
                         dth, (m * m - c1 * c1) * th + al * (d1 * f1 - d2 * f2) + c1 * c2])

    return ReducedODE("A6", _VARIABLES["A6"], ("phi1", "dphi1", "phi2", "dphi2", "theta", "dtheta"),
                      rhs, dict(r), order=6,
                      note="phi1 phi2' - phi1' phi2 is conserved")


def _spec_elliptic(p):
    r = _need(p, ("lam", "kappa"), "A6-elliptic")
    lam, kap = r["lam"], r["kappa"]
    return ReducedODE("A6-elliptic", _VARIABLES["A6"], ("phi", "dphi"),
                      lambda w, y: np.array([y[1], lam * y[0] ** 3 - kap * y[0]]), dict(r))


def _spec_a17(p):
    r = _need(p, ("alpha", "c1", "c2", "m"), "A17")
    al, c1, c2, m = r["alpha"], r["c1"], r["c2"], r["m"]

    def rhs(w, y):
        u, du, v, dv, th, dth = y
        return np.array([du, -(al * dth * u + u) / al ** 2,
                         dv, -(al * dth * v + v) / al ** 2,
                         dth, np.exp(2 * w) * ((m * m - c1 * c1) * th + c1 * c2) + 0.5 * al * (du * v + u * dv)])

    return ReducedODE("A17", _VARIABLES["A17"], ("u", "du", "v", "dv", "theta", "dtheta"), rhs, dict(r), order=6)


def _spec_a29(p):
    r = _need(p, ("c1", "c2", "m", "mu"), "A29")
    c1, c2, m, mu = r["c1"], r["c2"], r["m"], r["mu"]

    def rhs(w, y):
        D, dD, D0, dD0 = y
        return np.array([dD, -(mu * mu + m * m + c1 * c1 / w ** 4) * D,
                         dD0, -(c1 * c1 / w ** 4 + m * m) * D0 - c1 * c2 / w ** 3])

    return ReducedODE("A29", _VARIABLES["A29"], ("D", "dD", "D0", "dD0"), rhs, dict(r), (0.0,), order=4,
                      note="phi = D(w) sin(mu x3) + D0(w), theta = phi / w")


def _spec_a30(p):
    r = _need(p, ("c1", "c2", "m", "mu"), "A30")
    c1, c2, m, mu = r["c1"], r["c2"], r["m"], r["mu"]

    def rhs(w, y):
        D, dD, D0, dD0 = y
        return np.array([dD, (c1 * c1 / w ** 4 + m * m - mu * mu) * D,
                         dD0, (c1 * c1 / w ** 4 + m * m) * D0 - c1 * c2 / w ** 3])

    return ReducedODE("A30", _VARIABLES["A30"], ("D", "dD", "D0", "dD0"), rhs, dict(r), (0.0,), order=4,
                      note="phi = D(r) cos(mu x0) + D0(r), theta = phi / r")


def _spec_a11(p):
    r = _need(p, ("c3", "c4", "m"), "A11")
    c3, c4, m = r["c3"], r["c4"], r["m"]
    return ReducedODE("A11", _VARIABLES["A11"], ("theta",), None, dict(r), order=0,
                      algebraic=lambda th: (c3 * c3 + m * m) * th + c3 * c4,
                      note="(c3^2 + m^2) theta + c3 c4 = 0")


_VARIABLES = {
    "A1": "w = eps x0 - k x3",
    "A4": "w = sqrt(x0^2 - x3^2)",
    "A5": "w = x2",
    "A6": "w = x1",
    "A7": "w = x2 - alpha ln|x0 + x3|",
    "A8": "w = sqrt(x1^2 + x2^2)",
    "A11": "w = x0 + x3, zeta = (x3 - x0)/2",
    "A15": "w = x1 + (x0 + x3)^2/2",
    "A16": "w = x2 - alpha x1 - alpha (x0 + x3)^2/2",
    "A17": "w = ln sqrt(x1^2 + x2^2), zeta = atan2(x2, x1)",
    "A19": "w = sqrt(x1^2 + x2^2)",
    "A24": "w = sqrt(x0^2 - x1^2 - x3^2)",
    "A25": "w = x2 - beta ln|x0 + x3|",
    "A29": "w = sqrt(x0^2 - x1^2 - x2^2), x3",
    "A30": "r = |x|, x0",
}

_SPECS = {
    "A1": _spec_a1,
    "A4": _spec_a4,
    "A5": _linear_family("A5", ("c3", "c4", "m"), lambda r: (r["c3"] ** 2 - r["m"] ** 2, r["c3"] * r["c4"])),
    "A7": _linear_family("A7", ("c3", "c4", "m"), lambda r: (r["c3"] ** 2 - r["m"] ** 2, r["c3"] * r["c4"])),
    "A15": _linear_family("A15", ("c1", "c2", "m"), lambda r: (r["c2"] ** 2 - r["m"] ** 2, -r["c1"] * r["c2"])),
    "A16": _linear_family("A16", ("c3", "c4", "m", "alpha"),
                          lambda r: ((r["c3"] ** 2 - r["m"] ** 2) / (1 + r["alpha"] ** 2),
                                     r["c3"] * r["c4"] / (1 + r["alpha"] ** 2))),
    "A25": _linear_family("A25", ("c3", "m"), lambda r: (r["c3"] ** 2 - r["m"] ** 2, 0.0)),
    "A6": _spec_a6,
    "A6-elliptic": _spec_elliptic,
    "A8": _spec_a8,
    "A11": _spec_a11,
    "A17": _spec_a17,
    "A19": _spec_a19,
    "A24": _spec_a24,
    "A29": _spec_a29,
    "A30": _spec_a30,
}


def subalgebra_ids() -> list[str]:
    return sorted(_SPECS)


def reduced_spec(sub_id: str, params: Mapping) -> ReducedODE:
    try:
        make = _SPECS[sub_id]
    except KeyError:
        raise UnknownSubalgebra(sub_id) from None
    return make(params)


# ----------------------------------------------------------- profiles

@dataclass(frozen=True)
class ReducedProfile:
    """Chebyshev interpolants of every state component on ``[lo, hi]``."""

    spec_id: str
    names: tuple
    lo: float
    hi: float
    coeffs: tuple  # one coefficient array per component

    def _check(self, w):
        w = np.asarray(w, dtype=float)
        span = 1e-9 * (self.hi - self.lo)
        if np.any(w < self.lo - span) or np.any(w > self.hi + span):
            bad = w[(w < self.lo - span) | (w > self.hi + span)].ravel()[0]
            raise ProfileRangeExceeded(f"{self.spec_id}: w = {bad} outside profile range [{self.lo}, {self.hi}]")
        return w

    def _series(self, i: int) -> C.Chebyshev:
        return C.Chebyshev(self.coeffs[i], domain=[self.lo, self.hi])

    def __call__(self, w) -> np.ndarray:
        w = self._check(w)
        return np.stack([self._series(i)(w) for i in range(len(self.names))], axis=-1)

    def component(self, name: str) -> Fn:
        i = self.names.index(name)
        s = self._series(i)
        ds = s.deriv()
        return Fn(f"{self.spec_id}:{name}", lambda w: s(self._check(w)), lambda w: ds(self._check(w)))

    def contains(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        return (w >= self.lo) & (w <= self.hi)

    @property
    def grid(self) -> np.ndarray:
        # Lobatto points: endpoints included, and enough of them to refit exactly
        n = max(len(c) for c in self.coeffs)
        x = -np.cos(np.pi * np.arange(n + 1) / n) if n > 0 else np.zeros(1)
        return 0.5 * (self.hi + self.lo) + 0.5 * (self.hi - self.lo) * x

    def to_csv(self, nodes: Optional[np.ndarray] = None) -> str:
        w = self.grid if nodes is None else np.asarray(nodes, dtype=float)
        vals = self(w)
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["w", *self.names])
        for wi, row in zip(w, vals):
            wr.writerow([f"{wi:.17g}", *(f"{v:.17g}" for v in row)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, spec_id: str = "csv") -> "ReducedProfile":
        rows = list(csv.reader(io.StringIO(text)))
        names = tuple(rows[0][1:])
        data = np.array([[float(v) for v in r] for r in rows[1:] if r])
        w, vals = data[:, 0], data[:, 1:]
        lo, hi = float(w.min()), float(w.max())
        deg = len(w) - 1
        coeffs = tuple(C.chebfit(2 * (w - lo) / (hi - lo) - 1, vals[:, i], deg) for i in range(len(names)))
        return cls(spec_id, names, lo, hi, coeffs)


def _chop(c: np.ndarray) -> Optional[np.ndarray]:
    """Truncate a coefficient series at its noise plateau, or None if unresolved."""
    env = np.maximum.accumulate(np.abs(c)[::-1])[::-1]
    noise = env[-len(c) // 4]
    if noise > 1e-12 * max(env[0], 1e-300):
        return None
    keep = int(np.argmax(env <= 10 * noise))
    return c[:max(keep, 1)]


def _chebyshev_fit(f, lo, hi, dim, max_deg=320):
    # dense output carries ~1e-14 noise; coefficients past the plateau are
    # dropped so the noise does not survive into second derivatives
    deg = 64
    while True:
        k = np.arange(deg + 1)
        x = np.cos(np.pi * (k + 0.5) / (deg + 1))
        w = 0.5 * (hi + lo) + 0.5 * (hi - lo) * x
        vals = f(w)
        coeffs = [C.chebfit(x, vals[:, i], deg) for i in range(dim)]
        chopped = [_chop(c) for c in coeffs]
        if all(c is not None for c in chopped):
            return tuple(chopped)
        if deg >= max_deg:
            return tuple(coeffs)
        deg = min(max_deg, 2 * deg)


def integrate(spec: ReducedODE, span, initial, x_init: Optional[float] = None,
              rtol: float = 1e-12, atol: float = 1e-13) -> ReducedProfile:
    """Integrate ``spec`` over ``span = (lo, hi)`` from data given at ``x_init``.

    ``initial`` is a sequence in state order or a mapping keyed by state name.
    The solution is sampled at Chebyshev nodes and stored as interpolants.
    """
    lo, hi = float(span[0]), float(span[1])
    if not hi > lo:
        raise ValueError("empty integration range")
    if spec.order == 0:
        raise UnsupportedBranch(f"{spec.id} is algebraic; use constant_profile")
    for s in spec.singular_points:
        if lo - SINGULAR_MARGIN <= s <= hi + SINGULAR_MARGIN:
            raise SingularEncounter(f"{spec.id}: range [{lo}, {hi}] touches singular point w = {s}")
    x0 = lo if x_init is None else float(x_init)
    if not lo <= x0 <= hi:
        raise ValueError("initial point outside the integration range")
    if isinstance(initial, Mapping):
        y0 = np.array([float(initial[n]) for n in spec.state_names])
    else:
        y0 = np.asarray(initial, dtype=float)
    if y0.shape != (spec.state_dim,):
        raise ValueError(f"{spec.id}: expected {spec.state_dim} initial values")

    def leg(end):
        if end == x0:
            return None
        sol = solve_ivp(spec.rhs, (x0, end), y0, method="DOP853", rtol=rtol, atol=atol, dense_output=True)
        if sol.status != 0:
            raise StepUnderflow(f"{spec.id}: integration stopped: {sol.message}")
        return sol.sol

    left, right = leg(lo), leg(hi)

    def f(w):
        out = np.empty((len(w), spec.state_dim))
        lm = w < x0
        if np.any(lm):
            out[lm] = left(w[lm]).T
        if np.any(~lm):
            out[~lm] = right(w[~lm]).T if right is not None else left(w[~lm]).T
        if not np.all(np.isfinite(out)):
            raise StepUnderflow(f"{spec.id}: non-finite profile values")
        return out

    return ReducedProfile(spec.id, spec.state_names, lo, hi, _chebyshev_fit(f, lo, hi, spec.state_dim))


def constant_profile(spec: ReducedODE, value: Optional[float] = None, span=(-1e6, 1e6)) -> ReducedProfile:
    """Profile of an algebraic reduction; solves the relation when ``value`` is None."""
    if spec.order != 0:
        raise UnsupportedBranch(f"{spec.id} is not algebraic")
    if value is None:
        a0 = spec.algebraic(0.0)
        slope = spec.algebraic(1.0) - a0
        if slope == 0:
            raise UnsupportedBranch(f"{spec.id}: relation leaves theta free; pass a value")
        value = -a0 / slope
    return ReducedProfile(spec.id, spec.state_names, float(span[0]), float(span[1]),
                          (np.array([float(value)]),))


# ------------------------------------------------------ reconstruction

def invariant_coordinates(sub_id: str, pt, params: Optional[Mapping] = None) -> dict:
    p = dict(params or {})
    x0, x1, x2, x3 = (float(v) for v in as_points(pt)[0])
    s = x0 + x3
    if sub_id == "A1":
        return {"w": p.get("eps", 1.0) * x0 - p.get("k", 1.0) * x3}
    if sub_id == "A4":
        if x0 * x0 <= x3 * x3:
            raise SingularLocus("A4 needs x0^2 > x3^2")
        return {"w": math.sqrt(x0 * x0 - x3 * x3)}
    if sub_id == "A5":
        return {"w": x2}
    if sub_id in ("A6", "A9"):
        return {"w": x1}
    if sub_id in ("A7", "A25"):
        if s == 0:
            raise SingularLocus(f"{sub_id} needs x0 + x3 != 0")
        k = p.get("alpha", 0.0) if sub_id == "A7" else p.get("beta", 0.0)
        return {"w": x2 - k * math.log(abs(s))}
    if sub_id in ("A8", "A19"):
        rho = math.hypot(x1, x2)
        if rho == 0:
            raise SingularLocus(f"{sub_id} needs x1^2 + x2^2 > 0")
        return {"w": rho}
    if sub_id in ("A11", "A20", "A26"):
        out = {"w": s}
        if sub_id == "A11":
            out["zeta"] = 0.5 * (x3 - x0)
        return out
    if sub_id == "A15":
        return {"w": x1 + 0.5 * s * s}
    if sub_id == "A16":
        a = p.get("alpha", 0.0)
        return {"w": x2 - a * x1 - 0.5 * a * s * s}
    if sub_id == "A17":
        rho = math.hypot(x1, x2)
        if rho == 0:
            raise SingularLocus("A17 needs x1^2 + x2^2 > 0")
        return {"w": math.log(rho), "zeta": math.atan2(x2, x1)}
    if sub_id == "A24":
        q = x0 * x0 - x1 * x1 - x3 * x3
        if q <= 0:
            raise SingularLocus("A24 needs x0^2 > x1^2 + x3^2")
        return {"w": math.sqrt(q)}
    if sub_id == "A28":
        if s == 0:
            raise SingularLocus("A28 needs x0 + x3 != 0")
        return {"w": (x0 * x0 - x1 * x1 - x2 * x2 - x3 * x3) / (2 * s), "zeta": s}
    if sub_id == "A29":
        q = x0 * x0 - x1 * x1 - x2 * x2
        if q <= 0:
            raise SingularLocus("A29 needs x0^2 > x1^2 + x2^2")
        return {"w": math.sqrt(q), "x3": x3}
    if sub_id == "A30":
        r = math.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
        if r == 0:
            raise SingularLocus("A30 needs r > 0")
        return {"r": r, "x0": x0}
    raise UnknownSubalgebra(sub_id)


# profile component names each ansatz consumes
_COMPONENT_NEEDS = {
    "A6": {"phi1": "phi1", "dphi1": "dphi1", "phi2": "phi2", "dphi2": "dphi2", "theta": "theta"},
    "A17": {"u": "u", "du": "du", "v": "v", "dv": "dv", "theta": "theta"},
    "A29": {"D": "D", "D0": "D0"},
    "A30": {"D": "D", "D0": "D0"},
    "A24": {"theta": "theta", "phi": "phi"},
}


def _invariant_array(sub_id: str, X: np.ndarray, params: Mapping) -> np.ndarray:
    x0, x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2], X[:, 3]
    s = x0 + x3
    if sub_id == "A1":
        return params["eps"] * x0 - params["k"] * x3
    if sub_id == "A4":
        return np.sqrt(np.maximum(x0 * x0 - x3 * x3, 0.0))
    if sub_id == "A5":
        return x2
    if sub_id == "A6":
        return x1
    if sub_id == "A7":
        return x2 - params["alpha"] * np.log(np.abs(s))
    if sub_id == "A25":
        return x2 - params["beta"] * np.log(np.abs(s))
    if sub_id in ("A8", "A19"):
        return np.hypot(x1, x2)
    if sub_id == "A15":
        return x1 + 0.5 * s * s
    if sub_id == "A16":
        return x2 - params["alpha"] * x1 - 0.5 * params["alpha"] * s * s
    if sub_id == "A17":
        return np.log(np.hypot(x1, x2))
    if sub_id == "A24":
        return np.sqrt(np.maximum(x0 * x0 - x1 * x1 - x3 * x3, 0.0))
    if sub_id == "A29":
        return np.sqrt(np.maximum(x0 * x0 - x1 * x1 - x2 * x2, 0.0))
    if sub_id == "A30":
        return np.sqrt(x1 * x1 + x2 * x2 + x3 * x3)
    return np.zeros(X.shape[0])


def reconstruct(sub_id: str, profile: ReducedProfile, params: Mapping) -> FieldConfiguration:
    """Full field configuration of the ``sub_id`` ansatz built on ``profile``."""
    if sub_id not in cat.ansatz_ids():
        raise UnknownSubalgebra(sub_id)
    needs = _COMPONENT_NEEDS.get(sub_id, {"theta": "theta"})
    comps = {}
    for key, name in needs.items():
        if name not in profile.names:
            raise ValueError(f"{sub_id}: profile lacks component {name!r}")
        comps[key] = profile.component(name)
    ev, dom = cat.ansatz_evaluator(sub_id, params, comps)
    w_range = (sub_id != "A11")

    def domain(X):
        ok = np.ones(X.shape[0], dtype=bool) if dom is None else np.asarray(dom(X), dtype=bool)
        if w_range:
            with np.errstate(invalid="ignore", divide="ignore"):
                ok &= profile.contains(_invariant_array(sub_id, X, params))
        return ok

    meta = {"family": f"reconstructed:{sub_id}", "params": dict(params), "profile": profile.spec_id}
    return FieldConfiguration(ev, domain, meta)


# ------------------------------------------------ two-variable residuals

def _d2(f, a, b, h=1e-3):
    """Second partials and the mixed partial of f(a, b) by 4th-order stencils."""
    k = [(-2, -1 / 12), (-1, 16 / 12), (0, -30 / 12), (1, 16 / 12), (2, -1 / 12)]
    faa = sum(w * f(a + i * h, b) for i, w in k) / h ** 2
    fbb = sum(w * f(a, b + i * h) for i, w in k) / h ** 2
    d = [(-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12)]
    fab = sum(wi * wj * f(a + i * h, b + j * h) for i, wi in d for j, wj in d) / h ** 2
    return faa, fbb, fab


def _d1(f, a, b, h=1e-3):
    d = [(-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12)]
    return (sum(w * f(a + i * h, b) for i, w in d) / h, sum(w * f(a, b + i * h) for i, w in d) / h)


def reduced_pde_residual(family: str, phi: Callable, params: Mapping, pt2, aux: Optional[Callable] = None,
                         form: str = "corrected") -> float:
    """Residual of a two-variable reduced equation at ``pt2``.

    A28: 2 phi_wz = (c1^2/z^4 - m^2) phi + c1 c2 / z^3 (``form="printed"``
    drops the factor 2). A29: phi_33 - phi_ww = (c1^2/w^4 + m^2) phi + c1 c2/w^3.
    A30: phi_rr - phi_00 = (c1^2/r^4 + m^2) phi - c1 c2 / r^3.
    pd1: Laplacian(theta) = (m^2 - c3^2) theta + c2 c3. pd11: Laplacian(phi) = 0.
    pd111: Laplacian(theta) = (m^2 - c1^2) theta + c1 c2 + |grad aux|^2.
    """
    a, b = float(pt2[0]), float(pt2[1])
    p = {k: float(v) for k, v in params.items()}
    m = p.get("m", 0.0)
    v = float(phi(a, b))
    faa, fbb, fab = _d2(phi, a, b)
    if family == "A28":
        if b == 0:
            raise DomainViolation("A28 reduced equation needs zeta != 0")
        c1, c2 = p.get("c1", 0.0), p.get("c2", 0.0)
        k = 2.0 if form == "corrected" else 1.0
        return k * fab - ((c1 * c1 / b ** 4 - m * m) * v + c1 * c2 / b ** 3)
    if family == "A29":
        if a <= 0:
            raise DomainViolation("A29 reduced equation needs w > 0")
        c1, c2 = p.get("c1", 0.0), p.get("c2", 0.0)
        return fbb - faa - ((c1 * c1 / a ** 4 + m * m) * v + c1 * c2 / a ** 3)
    if family == "A30":
        if a <= 0:
            raise DomainViolation("A30 reduced equation needs r > 0")
        c1, c2 = p.get("c1", 0.0), p.get("c2", 0.0)
        return faa - fbb - ((c1 * c1 / a ** 4 + m * m) * v - c1 * c2 / a ** 3)
    if family == "pd1":
        c2, c3 = p.get("c2", 0.0), p.get("c3", 0.0)
        return faa + fbb - ((m * m - c3 * c3) * v + c2 * c3)
    if family == "pd11":
        return faa + fbb
    if family == "pd111":
        if aux is None:
            raise ValueError("pd111 needs the harmonic function as aux")
        c1, c2 = p.get("c1", 0.0), p.get("c2", 0.0)
        g1, g2 = _d1(aux, a, b)
        return faa + fbb - ((m * m - c1 * c1) * v + c1 * c2 + g1 * g1 + g2 * g2)
    raise UnknownSubalgebra(family)


# ------------------------------------------------------ closed forms

def a4_coefficient_spec(nu2: float, mu2: float, delta: float, alpha: float) -> ReducedODE:
    """A4 equation w^2 theta'' + w theta' + (nu^2 + mu^2 w^2) theta = delta + alpha w^2.

    Takes the coefficients directly, so branches such as mu = 0 with
    alpha != 0 stay reachable even though no real choice of the ansatz
    constants produces them.
    """
    nu2, mu2, de, al = float(nu2), float(mu2), float(delta), float(alpha)

    def rhs(w, y):
        return np.array([y[1], (de + al * w * w - w * y[1] - (nu2 + mu2 * w * w) * y[0]) / (w * w)])

    return ReducedODE("A4", _VARIABLES["A4"], ("theta", "dtheta"), rhs,
                      {"nu2": nu2, "mu2": mu2, "delta": de, "alpha": al}, (0.0,))


@dataclass(frozen=True)
class ClosedFormCase:
    """A reduced ODE together with a known exact solution on ``span``.

    ``components`` maps every undifferentiated state name to an :class:`Fn`;
    a state ``dX`` is read off as the derivative of ``X``. ``sub_id`` and
    ``reals`` are set when the profile can be lifted back to full fields.
    """

    name: str
    spec: ReducedODE
    span: tuple
    x_init: float
    components: dict
    sub_id: Optional[str] = None
    reals: dict = field(default_factory=dict)

    def state(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        cols = []
        for n in self.spec.state_names:
            if n in self.components:
                cols.append(self.components[n](w))
            else:
                cols.append(self.components[n[1:]].d(w))
        return np.stack(cols, axis=-1)

    def initial(self) -> np.ndarray:
        return self.state(np.array([self.x_init]))[0]

    def solve(self) -> ReducedProfile:
        return integrate(self.spec, self.span, self.initial(), self.x_init)

    def max_error(self, profile: ReducedProfile, n: int = 401) -> float:
        w = np.linspace(self.span[0], self.span[1], n)
        return float(np.max(np.abs(profile(w) - self.state(w))))


def _case_a1(name, p, amp):
    spec = _spec_a1(p)
    prof = cat.linear_profile(spec.params["a"], spec.params["c"], *amp)
    return ClosedFormCase(name, spec, (-3.0, 3.0), 0.0, {"theta": prof}, "A1", dict(p))


_A1_BASE = {"eps": 2.0, "k": 1.0, "c1": 0.3, "c2": 0.4, "c3": 0.5, "b1": 0.2, "b2": 0.1, "b3": 0.3, "m": 0.6}


def _cf_a1_trig(p):
    # c1^2 + c2^2 = 1 with c3 = m = 0 gives a = 1: cos w, sin w plus a constant
    base = {**_A1_BASE, "c1": 0.6, "c2": 0.8, "c3": 0.0, "m": 0.0}
    return _case_a1("A1-trig", {**base, **p}, (0.7, -0.2))


def _cf_a1_exp(p):
    # eps^2 < k^2 with small c1, c2 makes a < 0
    base = {**_A1_BASE, "eps": 1.0, "k": 2.0, "c1": 0.1, "c2": 0.1}
    return _case_a1("A1-exp", {**base, **p}, (0.3, 0.2))


def _cf_a1_poly(p):
    # c1^2 + c2^2 = (c3^2 + m^2) / (k^2 - eps^2) makes a = 0
    base = {**_A1_BASE, "eps": 1.0, "k": 2.0, "c1": 0.5, "c2": 0.0, "c3": math.sqrt(0.5), "m": 0.5}
    return _case_a1("A1-poly", {**base, **p}, (0.4, -0.3))


def _cf_a4_log(p):
    r = {"alpha": 0.4, "delta": 0.3, "c7": 0.2, "c8": 0.1, **p}
    al, de, c7, c8 = (float(r[k]) for k in ("alpha", "delta", "c7", "c8"))
    th = Fn("a4-log",
            lambda w: al * w * w / 4 + 0.5 * de * np.log(w) ** 2 + c7 * np.log(w) + c8,
            lambda w: al * w / 2 + de * np.log(w) / w + c7 / w)
    return ClosedFormCase("A4-log", a4_coefficient_spec(0.0, 0.0, de, al), (0.5, 3.0), 1.0, {"theta": th})


def _cf_a4_bessel(p):
    from . import special_functions as sf
    r = {"c1": 0.0, "c2": 0.0, "c3": 0.6, "c4": 0.5, "c5": 0.0, "c6": 0.0, "m": 0.8, "c7": 0.7, "c8": -0.4, **p}
    spec = _spec_a4(r)
    if spec.params["nu2"] != 0 or spec.params["delta"] != 0:
        raise UnsupportedBranch("A4 Bessel branch needs c1 = c2 = 0")
    mu = math.sqrt(spec.params["mu2"])
    al, c7, c8 = spec.params["alpha"], float(r["c7"]), float(r["c8"])
    th = Fn("a4-bessel",
            lambda w: c7 * sf.bessel_j(0, mu * w) + c8 * sf.bessel_y(0, mu * w) + al / mu ** 2,
            lambda w: -mu * (c7 * sf.bessel_j(1, mu * w) + c8 * sf.bessel_y(1, mu * w)))
    reals = {k: float(r[k]) for k in ("c1", "c2", "c3", "c4", "c5", "c6", "m")}
    return ClosedFormCase("A4-bessel", spec, (0.5, 6.0), 1.0, {"theta": th}, "A4", reals)


def _cf_elliptic(name, defaults, span, x_init):
    def make(p):
        r = {**defaults, **p}
        lam, ph, dph, _, _ = cat._a6_elliptic_parts(r)
        kap = (1 - r["c5"]) / r["alpha"] ** 2
        spec = _spec_elliptic({"lam": lam, "kappa": kap})
        return ClosedFormCase(name, spec, span, x_init, {"phi": Fn(name, ph, dph)})
    return make


_ELLIPTIC = {"alpha": 1.0, "c4": 1.5, "c7": 0.2, "sign": 1.0}


def _cf_a6_airy(p):
    from . import special_functions as sf
    r = {"alpha": 1.0, "c1": 0.5, "c2": 1.0, "c7": 0.6, "c8": 0.1, "k0": 0.1, "k1": 0.5, "m": 0.5, **p}
    _enforce("NonlinearA6-Airy", r)
    al, c7, c8, k0, k1 = (float(r[k]) for k in ("alpha", "c7", "c8", "k0", "k1"))
    g = float(r["c1"]) * float(r["c2"])
    lam = float(np.cbrt(g / al))
    nu = (1 / al - k1) / g
    ph = Fn("airy", lambda w: c7 * sf.airy_ai(lam * (w - nu)) + c8 * sf.airy_bi(lam * (w - nu)),
            lambda w: lam * (c7 * sf.airy_ai_prime(lam * (w - nu)) + c8 * sf.airy_bi_prime(lam * (w - nu))))
    th = Fn("quadratic", lambda w: 0.5 * g * w * w + k1 * w + k0, lambda w: g * w + k1)
    reals = {k: float(r[k]) for k in ("alpha", "c1", "c2", "m")}
    return ClosedFormCase("A6-airy", _spec_a6(reals), (-2.0, 2.0), 0.0,
                          {"phi1": ph, "phi2": ph, "theta": th}, "A6", reals)


def _cf_a6_linear(p):
    r = {"alpha": 1.0, "c1": 0.3, "c2": 0.4, "c4": 0.6, "c5": 0.2, "m": 0.8, "sign": 1.0, **p}
    _enforce("NonlinearA6-linear", r)
    al, c1, c2, c4, c5, m, sg = (float(r[k]) for k in ("alpha", "c1", "c2", "c4", "c5", "m", "sign"))
    if m * m > c1 * c1:
        q = math.sqrt(m * m - c1 * c1)
        root = math.sqrt(1 - c4 * c4)
        t0 = -c1 * c2 / q ** 2 + sg * root * c5 / q
    else:
        q = math.sqrt(c1 * c1 - m * m)
        root = math.sqrt(c4 * c4 - 1)
        t0 = c1 * c2 / q ** 2 + sg * root * c5 / q
    slope = sg * q / (al * root)
    p2 = Fn("linear", lambda w: slope * w + c5, lambda w: np.full_like(w, slope))
    p1 = Fn("linear", lambda w: c4 * (slope * w + c5), lambda w: np.full_like(w, c4 * slope))
    th = Fn("linear", lambda w: w / al + t0, lambda w: np.full_like(w, 1 / al))
    reals = {"alpha": al, "c1": c1, "c2": c2, "m": m}
    return ClosedFormCase("A6-linear", _spec_a6(reals), (-2.0, 2.0), 0.0,
                          {"phi1": p1, "phi2": p2, "theta": th}, "A6", reals)


def _enforce(fid: str, reals: Mapping) -> None:
    known = {p.name for p in cat.get_family(fid).params}
    for expr, ok, slack in cat.check_constraints(fid, {k: v for k, v in reals.items() if k in known}):
        if not ok:
            raise cat.ConstraintViolation(f"{fid}: constraint '{expr}' violated (slack {slack:.6g})")


_CLOSED_FORMS = {
    "A1-trig": _cf_a1_trig,
    "A1-exp": _cf_a1_exp,
    "A1-poly": _cf_a1_poly,
    "A4-log": _cf_a4_log,
    "A4-bessel": _cf_a4_bessel,
    "A6-tanh": _cf_elliptic("A6-tanh", {**_ELLIPTIC, "c5": 0.5}, (-2.0, 2.0), 0.0),
    "A6-tan": _cf_elliptic("A6-tan", {**_ELLIPTIC, "c5": 1.5}, (-2.0, 2.0), 0.0),
    "A6-inverse": _cf_elliptic("A6-inverse", {**_ELLIPTIC, "c5": 1.0}, (0.5, 3.0), 1.0),
    "A6-airy": _cf_a6_airy,
    "A6-linear": _cf_a6_linear,
}


def closed_form_ids() -> list[str]:
    return sorted(_CLOSED_FORMS)


def closed_form_case(name: str, params: Optional[Mapping] = None, span=None,
                     x_init: Optional[float] = None) -> ClosedFormCase:
    """Named exact solution of a reduced ODE; ``params`` override its defaults."""
    try:
        make = _CLOSED_FORMS[name]
    except KeyError:
        raise UnknownSubalgebra(name) from None
    case = make(dict(params or {}))
    if span is not None or x_init is not None:
        lo, hi = (float(v) for v in (span if span is not None else case.span))
        x0 = float(x_init) if x_init is not None else min(max(case.x_init, lo), hi)
        case = ClosedFormCase(case.name, case.spec, (lo, hi), x0, case.components, case.sub_id, case.reals)
    return case


_RECON_WINDOWS = {
    "A4": ((2.0, -0.8, -0.8, -0.8), (3.0, 0.8, 0.8, 0.8)),
    "A24": ((2.0, -0.8, -0.8, -0.8), (3.0, 0.8, 0.8, 0.8)),
    "A29": ((2.0, -0.8, -0.8, -0.8), (3.0, 0.8, 0.8, 0.8)),
    "A6": ((-1.0, -1.5, -1.5, -1.0), (1.0, 1.5, 1.5, 1.0)),
}


@dataclass(frozen=True)
class ReconstructionSummary:
    points: int
    max_residual: float
    max_ratio: float  # residual / tol, worst point
    worst_point: tuple

    def passed(self, factor: float = 1.0) -> bool:
        return self.max_ratio <= factor


def reconstruction_residual(sub_id: str, profile: ReducedProfile, reals: Mapping, n: int = 50,
                            seed: int = 0, window=None) -> ReconstructionSummary:
    """Full-system residuals of the reconstructed fields at seeded points.

    The source is the linear mass term with ``m`` from ``reals`` (zero when absent).
    """
    from .fields_core import DEFAULT_STENCIL, sample_admissible
    from .pde_residuals import SourceProfile, residual_batch

    cfg = reconstruct(sub_id, profile, reals)
    lo, hi = window or _RECON_WINDOWS.get(sub_id, ((-1.0,) * 4, (1.0,) * 4))
    X = sample_admissible(cfg, n, np.random.default_rng(seed), lo, hi, margin=0.02)
    src = SourceProfile.linear_mass(abs(float(reals.get("m", 0.0))))
    R = np.max(np.abs(residual_batch(cfg, X, src)), axis=1)
    ratio = R / np.array([DEFAULT_STENCIL.tol(x) for x in X])
    i = int(np.argmax(ratio))
    return ReconstructionSummary(len(X), float(R.max()), float(ratio[i]), tuple(float(v) for v in X[i]))
