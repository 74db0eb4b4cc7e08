"""Spacetime points, field values, field configurations and finite-difference stencils.

Every map in this package is vectorised over a leading axis: a point batch
is an ``(N, 4)`` array ordered ``(x0, x1, x2, x3)``, and a configuration
evaluator returns ``E (N, 3)``, ``B (N, 3)``, ``theta (N,)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

Evaluator = Callable[[np.ndarray], tuple]
Domain = Callable[[np.ndarray], np.ndarray]


class DomainViolation(ValueError):
    """A point or stencil node lies outside a configuration's admissible set."""


class NonFiniteField(ValueError):
    """An evaluator produced NaN or inf."""


@dataclass(frozen=True)
class SpacetimePoint:
    x0: float
    x1: float
    x2: float
    x3: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise ValueError(f"non-finite spacetime point {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x0, self.x1, self.x2, self.x3], dtype=float)

    @classmethod
    def from_array(cls, a: Sequence[float]) -> "SpacetimePoint":
        a = np.asarray(a, dtype=float).reshape(4)
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


def as_points(pt) -> np.ndarray:
    """Coerce a SpacetimePoint, a 4-sequence or an (N, 4) array to an (N, 4) array."""
    if isinstance(pt, SpacetimePoint):
        return pt.as_array()[None, :]
    a = np.asarray(pt, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    if a.shape[-1] != 4:
        raise ValueError(f"points must have 4 components, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class FieldState:
    E: np.ndarray
    B: np.ndarray
    theta: float
    p: Optional[np.ndarray] = None

    def __post_init__(self):
        vals = [np.asarray(self.E), np.asarray(self.B), np.asarray(self.theta)]
        if self.p is not None:
            vals.append(np.asarray(self.p))
        if not all(np.all(np.isfinite(v)) for v in vals):
            raise NonFiniteField("field state contains non-finite values")


def _everywhere(X: np.ndarray) -> np.ndarray:
    return np.ones(X.shape[0], dtype=bool)


@dataclass
class FieldConfiguration:
    """Fields (E, B, theta) over spacetime with an admissibility predicate.

    ``evaluator`` and ``domain`` take ``(N, 4)`` arrays. ``gradient``, when
    given, returns the analytic ``p_mu = d theta / d x_mu`` as ``(N, 4)``.
    """

    evaluator: Evaluator
    domain: Domain = _everywhere
    metadata: dict = field(default_factory=dict)
    gradient: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def analytic_gradient_available(self) -> bool:
        return self.gradient is not None

    def admissible(self, pt) -> np.ndarray:
        X = as_points(pt)
        return np.asarray(self.domain(X), dtype=bool).reshape(X.shape[0])

    def evaluate(self, pts, check_domain: bool = True):
        X = as_points(pts)
        if check_domain:
            ok = self.admissible(X)
            if not np.all(ok):
                bad = X[~ok][0]
                raise DomainViolation(f"point {bad.tolist()} outside domain of {self.family_id}")
        E, B, th = self.evaluator(X)
        E = np.broadcast_to(np.asarray(E, dtype=float), (X.shape[0], 3))
        B = np.broadcast_to(np.asarray(B, dtype=float), (X.shape[0], 3))
        th = np.broadcast_to(np.asarray(th, dtype=float), (X.shape[0],))
        if not (np.all(np.isfinite(E)) and np.all(np.isfinite(B)) and np.all(np.isfinite(th))):
            raise NonFiniteField(f"non-finite field values from {self.family_id}")
        return E, B, th

    def __call__(self, pt) -> FieldState:
        X = as_points(pt)
        E, B, th = self.evaluate(X)
        p = self.gradient(X)[0] if self.gradient is not None else None
        return FieldState(E=E[0].copy(), B=B[0].copy(), theta=float(th[0]), p=p)

    @property
    def family_id(self) -> str:
        return str(self.metadata.get("family", "anonymous"))


def vacuum() -> FieldConfiguration:
    def ev(X):
        n = X.shape[0]
        return np.zeros((n, 3)), np.zeros((n, 3)), np.zeros(n)

    return FieldConfiguration(ev, metadata={"family": "Vacuum", "params": {}},
                              gradient=lambda X: np.zeros((X.shape[0], 4)))


# ---------------------------------------------------------------- stencils

_FIRST = {2: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
          4: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([1.0, -8.0, 8.0, -1.0]) / 12.0)}
_SECOND = {2: (np.array([-1.0, 0.0, 1.0]), np.array([1.0, -2.0, 1.0])),
           4: (np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0)}


@dataclass(frozen=True)
class StencilScheme:
    order: int = 4
    h: Optional[float] = None  # None -> 1e-3 * max(1, |pt|_inf)

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError("stencil order must be 2 or 4")
        if self.h is not None and not self.h > 0:
            raise ValueError("stencil step must be positive")

    def step(self, pt) -> float:
        if self.h is not None:
            return float(self.h)
        return 1e-3 * max(1.0, float(np.max(np.abs(as_points(pt)[0]))))

    def tol(self, pt=None) -> float:
        h = self.step(pt if pt is not None else np.zeros(4))
        return 100.0 * h ** self.order + 1e-9

    def offsets(self) -> np.ndarray:
        """Integer multiples of h visited along each axis (centre included)."""
        return _SECOND[self.order][0]


DEFAULT_STENCIL = StencilScheme()


def stencil_nodes(pt, s: StencilScheme) -> tuple[np.ndarray, float]:
    """All stencil nodes for first and second axis derivatives at ``pt``.

    Returns an array of shape ``(1 + 4 * k, 4)``: the centre followed by
    ``k`` offsets for each axis in order, plus the step used.
    """
    x = as_points(pt)[0]
    h = s.step(x)
    offs = [o for o in s.offsets() if o != 0.0]
    nodes = [x]
    for mu in range(4):
        for o in offs:
            y = x.copy()
            y[mu] += o * h
            nodes.append(y)
    return np.array(nodes), h


def derivatives_from_nodes(vals: np.ndarray, s: StencilScheme, h: float):
    """First and pure second derivatives of sampled values along each axis.

    ``vals`` has the centre value at index 0 followed by the per-axis samples,
    exactly as laid out by :func:`stencil_nodes`; trailing dims are kept.
    Returns ``(d1, d2)`` with shape ``(4,) + vals.shape[1:]``.
    """
    offs = [o for o in s.offsets() if o != 0.0]
    k = len(offs)
    c0 = vals[0]
    x1, w1 = _FIRST[s.order]
    x2, w2 = _SECOND[s.order]
    d1, d2 = [], []
    for mu in range(4):
        block = vals[1 + mu * k: 1 + (mu + 1) * k]
        lookup = {o: block[i] for i, o in enumerate(offs)}
        lookup[0.0] = c0
        # pair symmetric nodes so constants difference to exactly zero
        d1.append(sum(w * (lookup[o] - lookup[-o]) for o, w in zip(x1, w1) if o > 0) / h)
        d2.append(sum(w * ((lookup[o] - c0) + (lookup[-o] - c0)) for o, w in zip(x2, w2) if o > 0) / h ** 2)
    return np.array(d1), np.array(d2)


def stencil_nodes_batch(X: np.ndarray, s: StencilScheme) -> tuple[np.ndarray, np.ndarray]:
    """Batched :func:`stencil_nodes`: nodes ``(N, M, 4)`` and steps ``(N,)``."""
    X = as_points(X)
    if s.h is not None:
        h = np.full(X.shape[0], float(s.h))
    else:
        h = 1e-3 * np.maximum(1.0, np.max(np.abs(X), axis=1))
    offs = [o for o in s.offsets() if o != 0.0]
    M = 1 + 4 * len(offs)
    nodes = np.repeat(X[:, None, :], M, axis=1)
    j = 1
    for mu in range(4):
        for o in offs:
            nodes[:, j, mu] += o * h
            j += 1
    return nodes, h


def derivatives_batch(vals: np.ndarray, s: StencilScheme, h: np.ndarray):
    """Batched :func:`derivatives_from_nodes` for ``vals`` of shape ``(N, M, C)``.

    Returns ``d1, d2`` of shape ``(N, 4, C)``.
    """
    v = np.moveaxis(vals, 1, 0)  # (M, N, C)
    d1, d2 = derivatives_from_nodes(v, s, 1.0)
    hh = h[None, :, None]
    return np.moveaxis(d1 / hh, 0, 1), np.moveaxis(d2 / hh ** 2, 0, 1)


def _sample(f, nodes, domain):
    if domain is not None:
        ok = np.asarray(domain(nodes), dtype=bool)
        if not np.all(ok):
            raise DomainViolation(f"stencil node {nodes[~ok][0].tolist()} outside domain")
    out = np.asarray(f(nodes), dtype=float)
    if not np.all(np.isfinite(out)):
        raise NonFiniteField("non-finite value on stencil")
    return out


def numeric_gradient(f, pt, s: StencilScheme = DEFAULT_STENCIL, domain=None) -> np.ndarray:
    """Central-difference estimate of (d0 f, d1 f, d2 f, d3 f) for a vectorised scalar map."""
    nodes, h = stencil_nodes(pt, s)
    d1, _ = derivatives_from_nodes(_sample(f, nodes, domain), s, h)
    return d1


def dalembertian(f, pt, s: StencilScheme = DEFAULT_STENCIL, domain=None) -> float:
    """Estimate of d0^2 f - (d1^2 + d2^2 + d3^2) f."""
    nodes, h = stencil_nodes(pt, s)
    _, d2 = derivatives_from_nodes(_sample(f, nodes, domain), s, h)
    return float(d2[0] - d2[1] - d2[2] - d2[3])


def curl_and_div(v, pt, s: StencilScheme = DEFAULT_STENCIL, domain=None):
    """Spatial curl and divergence of a vectorised 3-vector map ``(N, 4) -> (N, 3)``."""
    nodes, h = stencil_nodes(pt, s)
    d1, _ = derivatives_from_nodes(_sample(v, nodes, domain), s, h)
    return curl_from_jacobian(d1), float(d1[1, 0] + d1[2, 1] + d1[3, 2])


def curl_from_jacobian(d1: np.ndarray) -> np.ndarray:
    """Curl from ``d1[mu, a] = d_mu V_a`` (mu = 0..3, a = 0..2)."""
    return np.array([d1[2, 2] - d1[3, 1], d1[3, 0] - d1[1, 2], d1[1, 1] - d1[2, 0]])


def sample_admissible(cfg: FieldConfiguration, n: int, rng: np.random.Generator,
                      low: Sequence[float], high: Sequence[float], margin: float = 0.0,
                      max_tries: int = 200) -> np.ndarray:
    """Draw ``n`` points uniformly in a box, keeping only admissible ones.

    With ``margin > 0`` a point is kept only if every stencil node within
    ``margin`` (per axis, both signs) is admissible too.
    """
    low = np.asarray(low, float)
    high = np.asarray(high, float)
    out = []
    for _ in range(max_tries):
        X = rng.uniform(low, high, size=(max(4 * n, 16), 4))
        ok = cfg.admissible(X)
        if margin > 0:
            for mu in range(4):
                for sgn in (-1.0, 1.0):
                    Y = X.copy()
                    Y[:, mu] += sgn * margin
                    ok &= cfg.admissible(Y)
        out.extend(X[ok])
        if len(out) >= n:
            return np.array(out[:n])
    raise DomainViolation(f"could not draw {n} admissible points for {cfg.family_id}")


def describe(cfg: FieldConfiguration) -> dict[str, Any]:
    return {"family": cfg.family_id, "params": dict(cfg.metadata.get("params", {}))}
