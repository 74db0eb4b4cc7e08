"""Poincare-group actions on field configurations and infinitesimal symmetry checks.

Finite transforms are active: the new configuration at ``x`` is built from the
old one at the pulled-back point. Under a boost with rapidity vector ``lam``
the fields mix as

    E -> E cosh l - (n x B) sinh l + n (n.E)(1 - cosh l)
    B -> B cosh l + (n x E) sinh l + n (n.B)(1 - cosh l)

with ``n = lam / l``, while coordinates are pulled back through ``Lambda(-lam)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .fields_core import DEFAULT_STENCIL, FieldConfiguration, StencilScheme, as_points
from .pde_residuals import SourceProfile, residual_batch

ETA = np.diag([1.0, -1.0, -1.0, -1.0])
MAX_RAPIDITY = 20.0


class InvalidRotation(ValueError):
    pass


class RangeError(ValueError):
    """Boost rapidity beyond the overflow guard."""


class NotASolution(ValueError):
    pass


class UnknownGenerator(KeyError):
    pass


# ------------------------------------------------------------ matrices

def validate_rotation(R, tol: float = 1e-12) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidRotation("rotation must be a finite 3x3 matrix")
    if np.max(np.abs(R @ R.T - np.eye(3))) > tol:
        raise InvalidRotation("matrix is not orthogonal")
    if abs(np.linalg.det(R) - 1.0) > tol:
        raise InvalidRotation("rotation must have determinant +1")
    return R


def rotation_matrix(axis: Sequence[float], angle: float) -> np.ndarray:
    """Rodrigues formula for a rotation by ``angle`` about ``axis``."""
    a = np.asarray(axis, dtype=float)
    a = a / np.linalg.norm(a)
    K = np.array([[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]])
    return np.eye(3) + math.sin(angle) * K + (1 - math.cos(angle)) * (K @ K)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def _check_rapidity(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float).reshape(3)
    if not np.all(np.isfinite(lam)):
        raise RangeError("rapidity must be finite")
    if np.linalg.norm(lam) > MAX_RAPIDITY:
        raise RangeError(f"rapidity norm {np.linalg.norm(lam):.6g} exceeds {MAX_RAPIDITY}")
    return lam


def lorentz_matrix(lam) -> np.ndarray:
    """Pure boost ``exp(lam . K)`` acting on ``(x0, x1, x2, x3)``."""
    lam = _check_rapidity(lam)
    l = float(np.linalg.norm(lam))
    L = np.eye(4)
    if l == 0.0:
        return L
    n = lam / l
    ch, sh = math.cosh(l), math.sinh(l)
    L[0, 0] = ch
    L[0, 1:] = sh * n
    L[1:, 0] = sh * n
    L[1:, 1:] = np.eye(3) + (ch - 1.0) * np.outer(n, n)
    return L


def boost_field_matrix(lam) -> np.ndarray:
    """6x6 matrix acting on ``(E, B)`` for a boost with rapidity ``lam``."""
    lam = _check_rapidity(lam)
    l = float(np.linalg.norm(lam))
    if l == 0.0:
        return np.eye(6)
    n = lam / l
    ch, sh = math.cosh(l), math.sinh(l)
    Nx = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])  # Nx v = n x v
    diag = ch * np.eye(3) + (1 - ch) * np.outer(n, n)
    M = np.zeros((6, 6))
    M[:3, :3] = diag
    M[:3, 3:] = -sh * Nx
    M[3:, :3] = sh * Nx
    M[3:, 3:] = diag
    return M


def plane_wave_covector(nu: float, R, lam) -> np.ndarray:
    """Components ``n_mu`` of the phase ``n_mu x^mu`` after rotating and boosting ``x0 + nu x3``."""
    R = validate_rotation(R)
    lam = _check_rapidity(lam)
    l = float(np.linalg.norm(lam))
    r3 = R[:, 2]
    if l == 0.0:
        return np.concatenate([[1.0], nu * r3])
    sl = math.sinh(l) / l
    cl = (1 - math.cosh(l)) / l ** 2
    n0 = math.cosh(l) - nu * float(lam @ r3) * sl
    na = nu * r3 - lam * sl - nu * lam * float(lam @ r3) * cl
    return np.concatenate([[n0], na])


# ---------------------------------------------------------- transforms

def _affine(cfg: FieldConfiguration, L: np.ndarray, a: np.ndarray, M: np.ndarray, tag: dict) -> FieldConfiguration:
    """Configuration ``x -> (M (E, B)(y), theta(y))`` with ``y = L x + a``."""

    def pull(X):
        return X @ L.T + a

    def ev(X):
        E, B, th = cfg.evaluate(pull(X), check_domain=False)
        EB = np.concatenate([E, B], axis=1) @ M.T
        return EB[:, :3], EB[:, 3:], th

    def dom(X):
        return cfg.admissible(pull(X))

    grad = None
    if cfg.gradient is not None:
        g0 = cfg.gradient
        grad = lambda X: np.asarray(g0(pull(X)), dtype=float) @ L

    meta = dict(cfg.metadata)
    meta["transforms"] = list(cfg.metadata.get("transforms", [])) + [tag]
    return FieldConfiguration(ev, dom, meta, grad)


def rotate(cfg: FieldConfiguration, R) -> FieldConfiguration:
    R = validate_rotation(R)
    L = np.eye(4)
    L[1:, 1:] = R.T
    M = np.zeros((6, 6))
    M[:3, :3] = R
    M[3:, 3:] = R
    return _affine(cfg, L, np.zeros(4), M, {"rotate": R.tolist()})


def boost(cfg: FieldConfiguration, lam) -> FieldConfiguration:
    lam = _check_rapidity(lam)
    return _affine(cfg, lorentz_matrix(-lam), np.zeros(4), boost_field_matrix(lam), {"boost": lam.tolist()})


def translate(cfg: FieldConfiguration, a) -> FieldConfiguration:
    a = np.asarray(a, dtype=float).reshape(4)
    return _affine(cfg, np.eye(4), -a, np.eye(6), {"translate": a.tolist()})


@dataclass(frozen=True)
class PoincareElement:
    """``rotation`` after ``boost`` after ``translation``, applied to configurations."""

    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    lam: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def apply(self, cfg: FieldConfiguration) -> FieldConfiguration:
        return rotate(boost(translate(cfg, self.a), self.lam), self.R)

    def map_points(self, X) -> np.ndarray:
        """Image of points: where data at ``X`` lands in the transformed configuration."""
        X = as_points(X) + self.a
        X = X @ lorentz_matrix(self.lam).T
        out = X.copy()
        out[:, 1:] = X[:, 1:] @ np.asarray(self.R).T
        return out

    @classmethod
    def random(cls, rng: np.random.Generator, max_rapidity: float = 0.5, max_shift: float = 0.5):
        v = rng.normal(size=3)
        lam = v / np.linalg.norm(v) * rng.uniform(0, max_rapidity)
        return cls(random_rotation(rng), lam, rng.uniform(-max_shift, max_shift, size=4))


# ---------------------------------------------------------- generators

def _unit(a: int) -> np.ndarray:
    e = np.zeros(3)
    e[a - 1] = 1.0
    return e


def _zero_action(X, E, B, th):
    return np.zeros_like(E), np.zeros_like(B), np.zeros_like(th)


@dataclass(frozen=True)
class GeneratorSpec:
    """Infinitesimal generator ``xi^mu d_mu + (dE, dB, dtheta)`` acting on fields."""

    id: str
    xi: Callable  # (N, 4) -> (N, 4)
    field_action: Callable  # (X, E, B, theta) -> (dE, dB, dtheta)
    symmetry_of: str = "all"  # which sources it preserves: all | zero | constant | exponential

    def __add__(self, other: "GeneratorSpec") -> "GeneratorSpec":
        return combine((1.0, self), (1.0, other))

    def scaled(self, c: float) -> "GeneratorSpec":
        return combine((c, self))


def combine(*terms) -> GeneratorSpec:
    """Linear combination ``sum c_i G_i`` of generators."""

    def xi(X):
        return sum(c * g.xi(X) for c, g in terms)

    def act(X, E, B, th):
        parts = [g.field_action(X, E, B, th) for _, g in terms]
        return tuple(sum(c * p[k] for (c, _), p in zip(terms, parts)) for k in range(3))

    name = " + ".join(f"{c:g}*{g.id}" if c != 1 else g.id for c, g in terms)
    return GeneratorSpec(name, xi, act)


def _translation(mu: int) -> GeneratorSpec:
    def xi(X):
        out = np.zeros_like(X)
        out[:, mu] = 1.0
        return out
    return GeneratorSpec(f"P{mu}", xi, _zero_action)


def _spatial_rotation(a: int, b: int) -> GeneratorSpec:
    # x_a d_b - x_b d_a + B^a dB^b - B^b dB^a + (same for E)
    def xi(X):
        out = np.zeros_like(X)
        out[:, b] = X[:, a]
        out[:, a] = -X[:, b]
        return out

    def act(X, E, B, th):
        dE, dB = np.zeros_like(E), np.zeros_like(B)
        dE[:, b - 1], dE[:, a - 1] = E[:, a - 1], -E[:, b - 1]
        dB[:, b - 1], dB[:, a - 1] = B[:, a - 1], -B[:, b - 1]
        return dE, dB, np.zeros_like(th)

    return GeneratorSpec(f"J{a}{b}", xi, act)


def _lorentz_boost(a: int) -> GeneratorSpec:
    # x0 d_a + x_a d_0 + eps_abc (E^b dB^c - B^b dE^c)
    e = _unit(a)

    def xi(X):
        out = np.zeros_like(X)
        out[:, 0] = X[:, a]
        out[:, a] = X[:, 0]
        return out

    def act(X, E, B, th):
        return -np.cross(e, B), np.cross(e, E), np.zeros_like(th)

    return GeneratorSpec(f"J0{a}", xi, act)


def _theta_shift() -> GeneratorSpec:
    return GeneratorSpec("P4", lambda X: np.zeros_like(X),
                         lambda X, E, B, th: (np.zeros_like(E), np.zeros_like(B), np.ones_like(th)),
                         symmetry_of="constant")


def _dilatation() -> GeneratorSpec:
    return GeneratorSpec("D", lambda X: X.copy(),
                         lambda X, E, B, th: (-E, -B, np.zeros_like(th)), symmetry_of="zero")


def exponential_generator(a: float) -> GeneratorSpec:
    """``X = a D - 2 P4``, a symmetry when ``F = b exp(a theta)``."""
    g = combine((a, _dilatation()), (-2.0, _theta_shift()))
    return GeneratorSpec(f"X({a:g})", g.xi, g.field_action, symmetry_of="exponential")


GENERATORS = {
    "P0": _translation(0), "P1": _translation(1), "P2": _translation(2), "P3": _translation(3),
    "J12": _spatial_rotation(1, 2), "J23": _spatial_rotation(2, 3), "J31": _spatial_rotation(3, 1),
    "J01": _lorentz_boost(1), "J02": _lorentz_boost(2), "J03": _lorentz_boost(3),
    "P4": _theta_shift(), "D": _dilatation(),
}
POINCARE_IDS = ("P0", "P1", "P2", "P3", "J12", "J23", "J31", "J01", "J02", "J03")


def generator(gid: str, a: float = 1.0) -> GeneratorSpec:
    if gid in GENERATORS:
        return GENERATORS[gid]
    if gid == "X" or gid.startswith("X("):
        if gid.startswith("X("):
            a = float(gid[2:-1])
        return exponential_generator(a)
    # J21 = -J12 and friends
    if len(gid) == 3 and gid[0] == "J" and f"J{gid[2]}{gid[1]}" in GENERATORS:
        return GENERATORS[f"J{gid[2]}{gid[1]}"].scaled(-1.0)
    raise UnknownGenerator(gid)


def flow_first_order(cfg: FieldConfiguration, gen: GeneratorSpec, eps: float) -> FieldConfiguration:
    """``u(x - eps xi(x)) + eps * field_action``: the group flow to first order in eps."""

    def pull(X):
        return X - eps * gen.xi(X)

    def ev(X):
        E, B, th = cfg.evaluate(pull(X), check_domain=False)
        E0, B0, th0 = cfg.evaluate(X, check_domain=False)
        dE, dB, dth = gen.field_action(X, E0, B0, th0)
        return E + eps * dE, B + eps * dB, th + eps * dth

    def dom(X):
        return cfg.admissible(pull(X)) & cfg.admissible(X)

    meta = dict(cfg.metadata)
    meta["flow"] = {"generator": gen.id, "eps": eps}
    return FieldConfiguration(ev, dom, meta)


def _source_of(cfg: FieldConfiguration) -> SourceProfile:
    d = cfg.metadata.get("source")
    if isinstance(d, SourceProfile):
        return d
    if isinstance(d, dict):
        return SourceProfile.from_dict(d)
    return SourceProfile.zero()


def generator_defect(gen: GeneratorSpec, cfg: FieldConfiguration, eps: float, pts,
                     src: Optional[SourceProfile] = None, kappa: float = 1.0,
                     system: Optional[str] = None, s: StencilScheme = DEFAULT_STENCIL):
    """Residual of the first-order flow at ``eps`` and the observed order in eps.

    The order is the slope of log(defect) between ``eps`` and ``eps/2``. When
    both defects sit below the residual tolerance the flow is exact to
    discretisation accuracy and the order is reported as ``inf``.
    """
    if not 1e-4 <= eps <= 1e-1:
        raise ValueError("eps must lie in [1e-4, 1e-1]")
    X = as_points(pts)
    src = _source_of(cfg) if src is None else src
    system = system or cfg.metadata.get("system", "pseudoscalar")
    tol = np.array([s.tol(x) for x in X])
    base = np.max(np.abs(residual_batch(cfg, X, src, kappa, s, system)), axis=1)
    if np.any(base > tol):
        i = int(np.argmax(base / tol))
        raise NotASolution(f"base residual {base[i]:.3g} exceeds tol {tol[i]:.3g} at {X[i].tolist()}")

    def defect(e):
        R = residual_batch(flow_first_order(cfg, gen, e), X, src, kappa, s, system)
        return float(np.max(np.abs(R)))

    d1, d2 = defect(eps), defect(eps / 2)
    floor = float(np.max(tol))
    if d1 <= floor and d2 <= floor:
        return d1, math.inf
    order = math.log(max(d1, 1e-300) / max(d2, 1e-300)) / math.log(2.0)
    return d1, order


def liouville_kink(a: float = 1.0, k: float = 1.0, shift: float = 0.0):
    """``theta = -(2/a) ln cosh(k x1) + shift`` with E = B = 0.

    Solves the wave equation with ``F = b exp(a theta)`` for
    ``b = 2 k^2 exp(-a shift) / a``; returns the configuration and that source.
    """
    b = 2 * k * k * math.exp(-a * shift) / a

    def ev(X):
        n = X.shape[0]
        return np.zeros((n, 3)), np.zeros((n, 3)), -(2 / a) * np.log(np.cosh(k * X[:, 1])) + shift

    def grad(X):
        g = np.zeros_like(X)
        g[:, 1] = -(2 * k / a) * np.tanh(k * X[:, 1])
        return g

    src = SourceProfile.exponential(b, a)
    cfg = FieldConfiguration(ev, metadata={"family": "LiouvilleKink", "params": {"a": a, "k": k, "shift": shift},
                                           "system": "pseudoscalar", "source": src.to_dict()}, gradient=grad)
    return cfg, src


# ------------------------------------------------------ subalgebra table

# basis entries: list of linear combinations, each a tuple of (coefficient, generator id);
# coefficients may be the strings "alpha"/"beta"/"-alpha" resolved at runtime
_G1 = ((1, "J01"), (-1, "J13"))
_G2 = ((1, "J02"), (-1, "J23"))
_ALPHA_RANK_DROP = {"A6", "A9", "A10", "A13", "A17", "A18"}

_TABLE = {
    "A1": (((1, "P0"),), ((1, "P1"),), ((1, "P2"),)),
    "A2": (((1, "P1"),), ((1, "P2"),), ((1, "P3"),)),
    "A3": (((1, "P0"), (-1, "P3")), ((1, "P1"),), ((1, "P2"),)),
    "A4": (((1, "J03"),), ((1, "P1"),), ((1, "P2"),)),
    "A5": (((1, "J03"),), ((1, "P0"), (-1, "P3")), ((1, "P1"),)),
    "A6": (((1, "J03"), ("alpha", "P2")), ((1, "P0"),), ((1, "P3"),)),
    "A7": (((1, "J03"), ("alpha", "P2")), ((1, "P0"), (-1, "P3")), ((1, "P1"),)),
    "A8": (((1, "J12"),), ((1, "P0"),), ((1, "P3"),)),
    "A9": (((1, "J12"), ("alpha", "P0")), ((1, "P1"),), ((1, "P2"),)),
    "A10": (((1, "J12"), ("alpha", "P3")), ((1, "P1"),), ((1, "P2"),)),
    "A11": (((1, "J12"), (-1, "P0"), (1, "P3")), ((1, "P1"),), ((1, "P2"),)),
    "A12": (_G1, ((1, "P0"), (-1, "P3")), ((1, "P2"),)),
    "A13": (_G1, ((1, "P0"), (-1, "P3")), ((1, "P1"), ("alpha", "P2"))),
    "A14": (_G1 + ((1, "P2"),), ((1, "P0"), (-1, "P3")), ((1, "P1"),)),
    "A15": (_G1 + ((-1, "P0"),), ((1, "P0"), (-1, "P3")), ((1, "P2"),)),
    "A16": (_G1 + ((1, "P0"),), ((1, "P1"), ("alpha", "P2")), ((1, "P0"), (-1, "P3"))),
    "A17": (((1, "J03"), ("alpha", "J12")), ((1, "P0"),), ((1, "P3"),)),
    "A18": ((("alpha", "J03"), (1, "J12")), ((1, "P1"),), ((1, "P2"),)),
    "A19": (((1, "J12"),), ((1, "J03"),), ((1, "P0"), (-1, "P3"))),
    "A20": (_G1, _G2, ((1, "P0"), (-1, "P3"))),
    "A21": (_G1 + ((1, "P2"),), _G2 + (("alpha", "P1"), ("beta", "P2")), ((1, "P0"), (-1, "P3"))),
    "A22": (_G1, _G2 + ((1, "P1"), ("beta", "P2")), ((1, "P0"), (-1, "P3"))),
    "A23": (_G1, _G2 + ((1, "P2"),), ((1, "P0"), (-1, "P3"))),
    "A24": (_G1, ((1, "J03"),), ((1, "P2"),)),
    "A25": (((1, "J03"), ("alpha", "P1"), ("beta", "P2")), _G1, ((1, "P0"), (-1, "P3"))),
    "A26": (((1, "J12"), (-1, "P0"), (1, "P3")), _G1, _G2),
    "A27": (((1, "J03"), ("alpha", "J12")), _G1, _G2),
    "A28": (_G1, _G2, ((1, "J12"),)),
    "A29": (((1, "J01"),), ((1, "J02"),), ((1, "J12"),)),
    "A30": (((1, "J12"),), ((1, "J23"),), ((1, "J31"),)),
}


def _coef(c, alpha, beta) -> float:
    if c == "alpha":
        return alpha
    if c == "beta":
        return beta
    return float(c)


def _term_str(c, g) -> str:
    if c == 1:
        return g
    if c == -1:
        return f"-{g}"
    return f"{c}*{g}"


def _combo_str(combo) -> str:
    s = " + ".join(_term_str(c, g) for c, g in combo)
    return s.replace("+ -", "- ")


@dataclass(frozen=True)
class SubalgebraSpec:
    id: str
    basis: tuple  # three combinations of (coefficient, generator id)
    rank_xi: int
    transversality: str  # full | weak-only | extra-weak
    alpha: float = 1.0
    beta: float = 1.0

    @property
    def satisfies_rank_condition(self) -> bool:
        return self.transversality == "full"

    def basis_strings(self) -> list[str]:
        return [_combo_str(c) for c in self.basis]

    def generators(self) -> list[GeneratorSpec]:
        return [combine(*[(_coef(c, self.alpha, self.beta), generator(g)) for c, g in combo])
                for combo in self.basis]

    def to_dict(self) -> dict:
        return {"id": self.id, "basis": self.basis_strings(), "rank_xi": self.rank_xi,
                "transversality": self.transversality, "alpha": self.alpha, "beta": self.beta}


def _stored_rank(sid: str, alpha: float) -> int:
    # orbits of A28, A29, A30 are two-dimensional; the alpha-dependent
    # algebras lose their third direction when alpha vanishes
    if sid in ("A28", "A29", "A30"):
        return 2
    if sid in _ALPHA_RANK_DROP and alpha == 0:
        return 2
    return 3


def _stored_class(sid: str, alpha: float) -> str:
    if sid in ("A28", "A29", "A30"):
        return "weak-only"
    if sid == "A6" and alpha == 0:
        return "extra-weak"
    if sid in _ALPHA_RANK_DROP and alpha == 0:
        return "weak-only"
    return "full"


def subalgebra_table(alpha: float = 1.0, beta: float = 1.0) -> list[SubalgebraSpec]:
    return [SubalgebraSpec(sid, basis, _stored_rank(sid, alpha), _stored_class(sid, alpha), alpha, beta)
            for sid, basis in _TABLE.items()]


def get_subalgebra(sid: str, alpha: float = 1.0, beta: float = 1.0) -> SubalgebraSpec:
    if sid not in _TABLE:
        raise UnknownGenerator(sid)
    return SubalgebraSpec(sid, _TABLE[sid], _stored_rank(sid, alpha), _stored_class(sid, alpha), alpha, beta)


def rank_at(spec: SubalgebraSpec, pt, fields: Optional[tuple] = None, tol: float = 1e-9) -> tuple[int, int]:
    """Ranks of the xi-matrix and of the full (xi, field action) matrix at one point."""
    X = as_points(pt)
    if fields is None:
        rng = np.random.default_rng(7)
        E, B, th = rng.normal(size=(1, 3)), rng.normal(size=(1, 3)), rng.normal(size=1)
    else:
        E = np.asarray(fields[0], dtype=float).reshape(1, 3)
        B = np.asarray(fields[1], dtype=float).reshape(1, 3)
        th = np.atleast_1d(np.asarray(fields[2], dtype=float))
    rows_xi, rows_full = [], []
    for g in spec.generators():
        xi = g.xi(X)[0]
        dE, dB, dth = g.field_action(X, E, B, th)
        rows_xi.append(xi)
        rows_full.append(np.concatenate([xi, dE[0], dB[0], np.atleast_1d(dth)[:1]]))
    return (int(np.linalg.matrix_rank(np.array(rows_xi), tol=tol)),
            int(np.linalg.matrix_rank(np.array(rows_full), tol=tol)))


def computed_rank_xi(spec: SubalgebraSpec, pts=None) -> int:
    if pts is None:
        pts = np.random.default_rng(11).uniform(-2, 2, size=(3, 4))
    return max(rank_at(spec, p)[0] for p in as_points(pts))


def subalgebra_table_json(alpha: float = 1.0, beta: float = 1.0) -> str:
    return json.dumps([s.to_dict() for s in subalgebra_table(alpha, beta)], indent=2, sort_keys=True)
