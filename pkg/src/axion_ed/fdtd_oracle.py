"""Staggered-grid time-domain evolution of the Maxwell-axion system.

Layout on a box of ``n1 x n2 x n3`` cells (index ``i`` sits at ``origin + i dx``):

    B edges:  Bx (i+1/2, j, k)   By (i, j+1/2, k)   Bz (i, j, k+1/2)
    E faces:  Ex (i, j+1/2, k+1/2)   Ey (i+1/2, j, k+1/2)   Ez (i+1/2, j+1/2, k)
    theta:    cell centres (i+1/2, j+1/2, k+1/2)

E and theta live at integer steps, B and ``theta_t = (theta^n - theta^{n-1})/dt``
at half steps. B only ever changes by a discrete curl, so the discrete
divergence of B is conserved to round-off.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fields_core import DomainViolation, FieldConfiguration
from .pde_residuals import SourceProfile

BLOWUP = 1e12
COURANT_LIMIT = 0.5

# staggering offsets in cell units, per component
_B_OFF = ((0.5, 0, 0), (0, 0.5, 0), (0, 0, 0.5))
_E_OFF = ((0, 0.5, 0.5), (0.5, 0, 0.5), (0.5, 0.5, 0))
_C_OFF = (0.5, 0.5, 0.5)


class CourantViolation(ValueError):
    pass


class BlowUp(RuntimeError):
    pass


class WindowMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    extent: tuple  # box length per spatial axis
    nodes: tuple  # cells per axis, each >= 8
    dt: float
    boundary: str = "periodic"  # periodic | dirichlet
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if len(self.extent) != 3 or len(self.nodes) != 3:
            raise ValueError("extent and nodes need one entry per spatial axis")
        if any(int(n) < 8 for n in self.nodes):
            raise ValueError("at least 8 nodes per axis")
        if any(not e > 0 for e in self.extent):
            raise ValueError("extent must be positive")
        if self.boundary not in ("periodic", "dirichlet"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.courant > COURANT_LIMIT + 1e-12:
            raise CourantViolation(f"dt/dx = {self.courant:.6g} exceeds {COURANT_LIMIT}")

    @property
    def dx(self) -> np.ndarray:
        return np.array(self.extent, dtype=float) / np.array(self.nodes, dtype=float)

    @property
    def courant(self) -> float:
        return float(self.dt / np.min(self.dx))

    @property
    def shape(self) -> tuple:
        return tuple(int(n) for n in self.nodes)

    def positions(self, offset, t: float) -> np.ndarray:
        """Spacetime points ``(N, 4)`` of one staggered lattice at time ``t``."""
        axes = [self.origin[a] + (np.arange(self.nodes[a]) + offset[a]) * self.dx[a] for a in range(3)]
        g = np.meshgrid(*axes, indexing="ij")
        X = np.empty((g[0].size, 4))
        X[:, 0] = t
        for a in range(3):
            X[:, a + 1] = g[a].ravel()
        return X

    @classmethod
    def cube(cls, n: int, extent: float, courant: float = 0.4, boundary: str = "periodic", origin=(0.0, 0.0, 0.0)):
        return cls((extent,) * 3, (n,) * 3, courant * extent / n, boundary, tuple(origin))


@dataclass(frozen=True)
class GridState:
    spec: GridSpec
    E: np.ndarray  # (3, n1, n2, n3) at time t
    B: np.ndarray  # (3, n1, n2, n3) at time t - dt/2
    theta: np.ndarray  # (n1, n2, n3) at time t
    theta_t: np.ndarray  # (theta(t) - theta(t - dt)) / dt
    t: float

    def div_B(self) -> np.ndarray:
        dx = self.spec.dx
        return sum((self.B[a] - np.roll(self.B[a], 1, axis=a)) / dx[a] for a in range(3))

    def div_E(self) -> np.ndarray:
        dx = self.spec.dx
        return sum((np.roll(self.E[a], -1, axis=a) - self.E[a]) / dx[a] for a in range(3))


# ------------------------------------------------------------ sampling

def _sample(cfg: FieldConfiguration, X: np.ndarray):
    ok = cfg.admissible(X)
    if not np.all(ok):
        raise DomainViolation(f"grid point {X[~ok][0].tolist()} outside domain of {cfg.family_id}")
    return cfg.evaluate(X, check_domain=False)


def _exact_fields(cfg: FieldConfiguration, spec: GridSpec, t: float):
    """Exact E at t, B at t - dt/2, theta at t and the theta difference quotient."""
    shp = spec.shape
    E = np.stack([_sample(cfg, spec.positions(_E_OFF[a], t))[0][:, a].reshape(shp) for a in range(3)])
    B = np.stack([_sample(cfg, spec.positions(_B_OFF[a], t - 0.5 * spec.dt))[1][:, a].reshape(shp)
                  for a in range(3)])
    th = _sample(cfg, spec.positions(_C_OFF, t))[2].reshape(shp)
    th_prev = _sample(cfg, spec.positions(_C_OFF, t - spec.dt))[2].reshape(shp)
    return E, B, th, (th - th_prev) / spec.dt


def init_from_exact(cfg: FieldConfiguration, spec: GridSpec, t0: float = 0.0) -> GridState:
    E, B, th, tht = _exact_fields(cfg, spec, t0)
    return GridState(spec, E, B, th, tht, float(t0))


def vacuum_state(spec: GridSpec, t0: float = 0.0) -> GridState:
    z = np.zeros((3,) + spec.shape)
    return GridState(spec, z.copy(), z.copy(), np.zeros(spec.shape), np.zeros(spec.shape), float(t0))


def _curl_faces(E, dx):
    """Curl of a face field, landing on edges (backward differences)."""
    def d(f, a):
        return (f - np.roll(f, 1, axis=a)) / dx[a]
    return np.stack([d(E[2], 1) - d(E[1], 2), d(E[0], 2) - d(E[2], 0), d(E[1], 0) - d(E[0], 1)])


def _curl_edges(B, dx):
    """Curl of an edge field, landing on faces (forward differences)."""
    def d(f, a):
        return (np.roll(f, -1, axis=a) - f) / dx[a]
    return np.stack([d(B[2], 1) - d(B[1], 2), d(B[0], 2) - d(B[2], 0), d(B[1], 0) - d(B[0], 1)])


def random_smooth_state(spec: GridSpec, rng: np.random.Generator, modes: int = 3, amp: float = 0.1) -> GridState:
    """Smooth random E, theta and a B built as the discrete curl of a random potential.

    Only meaningful on periodic grids; div B vanishes to round-off by construction.
    """
    shp = spec.shape

    def field_at(offset):
        X = spec.positions(offset, 0.0)
        out = np.zeros(X.shape[0])
        L = np.array(spec.extent)
        for _ in range(modes):
            kv = rng.integers(-2, 3, size=3) * 2 * np.pi / L
            out += amp * rng.normal() * np.cos(X[:, 1:] @ kv + rng.uniform(0, 2 * np.pi))
        return out.reshape(shp)

    A = np.stack([field_at(_E_OFF[a]) for a in range(3)])
    B = _curl_faces(A, spec.dx)
    E = np.stack([field_at(_E_OFF[a]) for a in range(3)])
    th = field_at(_C_OFF)
    return GridState(spec, E, B, th, np.zeros(shp), 0.0)


# ------------------------------------------------------------ stepping

def _to_centres_faces(E):
    # Ex (i, j+1/2, k+1/2) -> centre needs +1/2 along x, etc.
    return np.stack([0.5 * (E[a] + np.roll(E[a], -1, axis=a)) for a in range(3)])


def _to_centres_edges(B):
    out = []
    for a in range(3):
        b, c = [ax for ax in range(3) if ax != a]
        f = 0.5 * (B[a] + np.roll(B[a], -1, axis=b))
        out.append(0.5 * (f + np.roll(f, -1, axis=c)))
    return np.stack(out)


def _centres_to_faces(V):
    return np.stack([0.5 * (V[a] + np.roll(V[a], 1, axis=a)) for a in range(3)])


def _grad_centres(th, dx):
    return np.stack([(np.roll(th, -1, axis=a) - np.roll(th, 1, axis=a)) / (2 * dx[a]) for a in range(3)])


def _laplacian(th, dx):
    return sum((np.roll(th, -1, axis=a) - 2 * th + np.roll(th, 1, axis=a)) / dx[a] ** 2 for a in range(3))


def _boundary_mask(shape) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    for a in range(3):
        idx = [slice(None)] * 3
        idx[a] = 0
        m[tuple(idx)] = True
        idx[a] = -1
        m[tuple(idx)] = True
    return m


def step(state: GridState, src: SourceProfile = SourceProfile(), kappa: float = 1.0,
         exact: Optional[FieldConfiguration] = None, iterations: int = 3) -> GridState:
    """Advance one leapfrog step.

    With a ``dirichlet`` grid the outer layer of every array is reset from
    ``exact`` after each sub-update.
    """
    spec = state.spec
    if src.uses_gradient:
        raise ValueError("sources depending on p_mu p^mu are not supported by the grid solver")
    if spec.boundary == "dirichlet" and exact is None:
        raise ValueError("dirichlet boundaries need the exact configuration")
    dx, dt = spec.dx, spec.dt
    t = state.t
    edge = _boundary_mask(spec.shape) if spec.boundary == "dirichlet" else None

    # Faraday: B^{n-1/2} -> B^{n+1/2}
    B_new = state.B - dt * _curl_faces(state.E, dx)
    if edge is not None:
        for a in range(3):
            vals = _sample(exact, spec.positions(_B_OFF[a], t + 0.5 * dt))[1][:, a].reshape(spec.shape)
            B_new[a][edge] = vals[edge]

    # axion wave equation at step n
    Ec = _to_centres_faces(state.E)
    Bc = _to_centres_edges(0.5 * (state.B + B_new))
    acc = _laplacian(state.theta, dx) + src(state.theta)
    if kappa != 0.0:
        acc = acc - kappa * np.sum(Ec * Bc, axis=0)
    tht = state.theta_t + dt * acc
    th_new = state.theta + dt * tht
    if edge is not None:
        th_ex = _sample(exact, spec.positions(_C_OFF, t + dt))[2].reshape(spec.shape)
        th_now = _sample(exact, spec.positions(_C_OFF, t))[2].reshape(spec.shape)
        th_new[edge] = th_ex[edge]
        tht[edge] = ((th_ex - th_now) / dt)[edge]

    # Ampere with the axion current at n+1/2
    E_new = state.E + dt * _curl_edges(B_new, dx)
    if kappa != 0.0:
        base = E_new.copy()
        p0 = tht
        pv = _grad_centres(0.5 * (state.theta + th_new), dx)
        Bh = _to_centres_edges(B_new)
        for _ in range(iterations):
            Eh = _to_centres_faces(0.5 * (state.E + E_new))
            J = kappa * (p0[None] * Bh + np.cross(pv, Eh, axis=0))
            E_new = base + dt * _centres_to_faces(J)
    if edge is not None:
        for a in range(3):
            vals = _sample(exact, spec.positions(_E_OFF[a], t + dt))[0][:, a].reshape(spec.shape)
            E_new[a][edge] = vals[edge]

    for arr in (E_new, B_new, th_new, tht):
        if not np.all(np.isfinite(arr)) or np.max(np.abs(arr)) > BLOWUP:
            raise BlowUp(f"field magnitude exceeded {BLOWUP:g} at t = {t + dt:.6g}")
    return GridState(spec, E_new, B_new, th_new, tht, t + dt)


def run(state: GridState, steps: int, src: SourceProfile = SourceProfile(), kappa: float = 1.0,
        exact: Optional[FieldConfiguration] = None, keep_history: bool = False):
    """Take ``steps`` steps; returns the final state and the list of visited states."""
    history = [state]
    for _ in range(steps):
        state = step(state, src, kappa, exact)
        if keep_history:
            history.append(state)
    if not keep_history:
        history.append(state)
    return state, history


def compare_to_exact(state: GridState, cfg: FieldConfiguration) -> tuple:
    """RMS errors of E, B, theta and the overall max error against ``cfg``."""
    spec = state.spec
    try:
        E, B, th, _ = _exact_fields(cfg, spec, state.t)
    except DomainViolation as e:
        raise WindowMismatch(str(e)) from None
    sl = (slice(None),) * 3
    if spec.boundary == "dirichlet":
        sl = (slice(1, -1),) * 3
    dE = (state.E - E)[(slice(None),) + sl]
    dB = (state.B - B)[(slice(None),) + sl]
    dth = (state.theta - th)[sl]

    def l2(a):
        return float(np.sqrt(np.mean(a * a)))

    linf = float(max(np.max(np.abs(dE)), np.max(np.abs(dB)), np.max(np.abs(dth))))
    return l2(dE), l2(dB), l2(dth), linf


def divergence_B_drift(history: Sequence[GridState]) -> float:
    if not history:
        raise ValueError("empty history")
    return float(max(np.max(np.abs(s.div_B())) for s in history))


# ---------------------------------------------------------- campaigns

CSV_FIELDS = ("nodes", "dt", "steps", "L2_E", "L2_B", "L2_theta", "divB_drift", "wall_time_ms")


@dataclass(frozen=True)
class RunSummary:
    nodes: int
    dt: float
    steps: int
    L2_E: float
    L2_B: float
    L2_theta: float
    divB_drift: float
    wall_time_ms: float

    @property
    def L2_total(self) -> float:
        return math.sqrt(self.L2_E ** 2 + self.L2_B ** 2 + self.L2_theta ** 2)

    def row(self) -> list:
        return [self.nodes, f"{self.dt:.17g}", self.steps, f"{self.L2_E:.17g}", f"{self.L2_B:.17g}",
                f"{self.L2_theta:.17g}", f"{self.divB_drift:.17g}", f"{self.wall_time_ms:.3f}"]


def evolve_against_exact(cfg: FieldConfiguration, spec: GridSpec, t_end: float, src: SourceProfile,
                         kappa: float = 1.0, t0: float = 0.0) -> RunSummary:
    steps = int(round((t_end - t0) / spec.dt))
    if abs(steps * spec.dt - (t_end - t0)) > 1e-9 * max(1.0, abs(t_end)):
        raise ValueError("t_end - t0 must be a whole number of steps")
    tic = time.perf_counter()
    s0 = init_from_exact(cfg, spec, t0)
    exact = cfg if spec.boundary == "dirichlet" else None
    drift = float(np.max(np.abs(s0.div_B())))
    state = s0
    for _ in range(steps):
        state = step(state, src, kappa, exact)
        drift = max(drift, float(np.max(np.abs(state.div_B()))))
    eE, eB, eth, _ = compare_to_exact(state, cfg)
    ms = 1e3 * (time.perf_counter() - tic)
    return RunSummary(int(max(spec.nodes)), spec.dt, steps, eE, eB, eth, drift, ms)


def refinement_study(cfg: FieldConfiguration, make_spec, levels: Sequence[int], t_end: float,
                     src: SourceProfile, kappa: float = 1.0):
    """Runs at each resolution in ``levels``; returns summaries and observed orders.

    ``make_spec(n)`` builds the grid for resolution ``n``; the order between
    consecutive levels is ``log(e_coarse/e_fine) / log(n_fine/n_coarse)``.
    """
    runs = [evolve_against_exact(cfg, make_spec(n), t_end, src, kappa) for n in levels]
    orders = [math.log(a.L2_total / b.L2_total) / math.log(nb / na)
              for (a, na), (b, nb) in zip(zip(runs, levels), zip(runs[1:], levels[1:]))]
    return runs, orders


def summaries_csv(runs: Sequence[RunSummary]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in runs:
        w.writerow(r.row())
    return buf.getvalue()
