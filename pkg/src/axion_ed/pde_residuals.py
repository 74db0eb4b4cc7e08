"""Pointwise residuals of the Maxwell-axion field equations.

Pseudoscalar system (kappa is the axion-photon coupling):

    div E = kappa p.B
    d0 E - curl B = kappa (p0 B + p x E)
    div B = 0,  d0 B + curl E = 0
    box theta = -kappa E.B + F

Scalar variant: the couplings become ``kappa p.E`` and
``kappa (p0 E - p x B)`` and the wave equation carries ``kappa (B^2 - E^2)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .fields_core import (
    DEFAULT_STENCIL,
    DomainViolation,
    FieldConfiguration,
    NonFiniteField,
    StencilScheme,
    as_points,
    derivatives_batch,
    stencil_nodes_batch,
)

COMPONENTS = ("gauss", "ampere1", "ampere2", "ampere3", "divB",
              "faraday1", "faraday2", "faraday3", "axion")


@dataclass(frozen=True)
class SourceProfile:
    """Right-hand side F of the axion wave equation.

    ``kind`` is one of Zero, Constant, LinearMass, Exponential, Extended,
    Custom. Extended sources take ``(theta, s)`` with ``s = p_mu p^mu``.
    """

    kind: str = "Zero"
    params: dict = field(default_factory=dict)
    func: Optional[Callable] = None
    potential: Optional[Callable] = None

    @staticmethod
    def zero() -> "SourceProfile":
        return SourceProfile("Zero")

    @staticmethod
    def constant(c: float) -> "SourceProfile":
        return SourceProfile("Constant", {"c": float(c)}, potential=lambda t: -float(c) * np.asarray(t))

    @staticmethod
    def linear_mass(m: float) -> "SourceProfile":
        if m < 0:
            raise ValueError("mass must be non-negative")
        m = float(m)
        return SourceProfile("LinearMass", {"m": m}, potential=lambda t: 0.5 * m * m * np.asarray(t) ** 2)

    @staticmethod
    def exponential(b: float, a: float) -> "SourceProfile":
        b, a = float(b), float(a)
        pot = None if a == 0 else (lambda t: -b / a * np.exp(a * np.asarray(t)))
        return SourceProfile("Exponential", {"b": b, "a": a}, potential=pot)

    @staticmethod
    def extended(f: Callable, name: str = "custom") -> "SourceProfile":
        return SourceProfile("Extended", {"name": name}, func=f)

    @staticmethod
    def custom(f: Callable, potential: Optional[Callable] = None, name: str = "custom") -> "SourceProfile":
        return SourceProfile("Custom", {"name": name}, func=f, potential=potential)

    @property
    def uses_gradient(self) -> bool:
        return self.kind == "Extended"

    def __call__(self, theta, s=None):
        theta = np.asarray(theta, dtype=float)
        k = self.kind
        if k == "Zero":
            return np.zeros_like(theta)
        if k == "Constant":
            return np.full_like(theta, self.params["c"])
        if k == "LinearMass":
            return -self.params["m"] ** 2 * theta
        if k == "Exponential":
            return self.params["b"] * np.exp(self.params["a"] * theta)
        if k == "Extended":
            if s is None:
                raise ValueError("extended source needs p_mu p^mu")
            return np.asarray(self.func(theta, np.asarray(s, dtype=float)), dtype=float)
        if k == "Custom":
            return np.asarray(self.func(theta), dtype=float)
        raise ValueError(f"unknown source kind {k!r}")

    def potential_consistency(self, thetas, h: float = 1e-4) -> float:
        """Max |F(theta) + dV/dtheta| over the sample; 0 when no potential is attached."""
        if self.potential is None or self.kind == "Extended":
            return 0.0
        t = np.asarray(thetas, dtype=float)
        dV = (self.potential(t + h) - self.potential(t - h)) / (2 * h)
        return float(np.max(np.abs(self(t) + dV)))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @staticmethod
    def from_dict(d: dict) -> "SourceProfile":
        """Inverse of ``to_dict`` for the parametric kinds and the named ``p.p`` source."""
        k, p = d.get("kind", "Zero"), d.get("params", {})
        if k == "Zero":
            return SourceProfile.zero()
        if k == "Constant":
            return SourceProfile.constant(p["c"])
        if k == "LinearMass":
            return SourceProfile.linear_mass(p["m"])
        if k == "Exponential":
            return SourceProfile.exponential(p["b"], p["a"])
        if k == "Extended" and p.get("name") == "p.p":
            return SourceProfile.extended(lambda th, s: s, name="p.p")
        raise ValueError(f"cannot rebuild source {d!r} from its description")


@dataclass(frozen=True)
class ResidualVector:
    gauss: float
    ampere: np.ndarray
    divB: float
    faraday: np.ndarray
    axion: float

    @classmethod
    def from_array(cls, a) -> "ResidualVector":
        a = np.asarray(a, dtype=float)
        return cls(float(a[0]), a[1:4].copy(), float(a[4]), a[5:8].copy(), float(a[8]))

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.gauss], self.ampere, [self.divB], self.faraday, [self.axion]])

    def norm(self) -> float:
        return float(np.max(np.abs(self.as_array())))

    def as_dict(self) -> dict:
        return dict(zip(COMPONENTS, self.as_array().tolist()))


# ----------------------------------------------------------------- kernels

def field_derivatives(cfg: FieldConfiguration, X, s: StencilScheme = DEFAULT_STENCIL):
    """Centre values and stencil derivatives of (E, B, theta) at each point.

    Returns ``(vals, d1, d2)`` with ``vals (N, 7)`` and ``d1, d2 (N, 4, 7)``.
    """
    X = as_points(X)
    nodes, h = stencil_nodes_batch(X, s)
    N, M, _ = nodes.shape
    flat = nodes.reshape(N * M, 4)
    ok = cfg.admissible(flat)
    if not np.all(ok):
        bad = flat[~ok][0]
        raise DomainViolation(f"stencil node {bad.tolist()} outside domain of {cfg.family_id}")
    E, B, th = cfg.evaluate(flat, check_domain=False)
    vals = np.concatenate([E, B, th[:, None]], axis=1).reshape(N, M, 7)
    d1, d2 = derivatives_batch(vals, s, h)
    return vals[:, 0, :], d1, d2


def _cross(a, b):
    return np.cross(a, b, axis=-1)


def _curl(d1, off):
    # d1[:, mu, off + a] = d_mu V_a
    return np.stack([d1[:, 2, off + 2] - d1[:, 3, off + 1],
                     d1[:, 3, off + 0] - d1[:, 1, off + 2],
                     d1[:, 1, off + 1] - d1[:, 2, off + 0]], axis=1)


def _div(d1, off):
    return d1[:, 1, off] + d1[:, 2, off + 1] + d1[:, 3, off + 2]


def residual_batch(cfg: FieldConfiguration, X, src: SourceProfile = SourceProfile(),
                   kappa: float = 1.0, s: StencilScheme = DEFAULT_STENCIL,
                   system: str = "pseudoscalar") -> np.ndarray:
    """All nine residual components at each point, shape ``(N, 9)``."""
    X = as_points(X)
    vals, d1, d2 = field_derivatives(cfg, X, s)
    E, B, th = vals[:, 0:3], vals[:, 3:6], vals[:, 6]
    if cfg.gradient is not None:
        p = np.asarray(cfg.gradient(X), dtype=float)
    else:
        p = d1[:, :, 6]
    p0, pv = p[:, 0], p[:, 1:]
    dE0, dB0 = d1[:, 0, 0:3], d1[:, 0, 3:6]
    curlE, curlB = _curl(d1, 0), _curl(d1, 3)
    divE, divB = _div(d1, 0), _div(d1, 3)
    box = d2[:, 0, 6] - d2[:, 1, 6] - d2[:, 2, 6] - d2[:, 3, 6]
    spp = p0 ** 2 - np.sum(pv ** 2, axis=1)
    F = src(th, spp) if src.uses_gradient else src(th)
    if system == "pseudoscalar":
        gauss = divE - kappa * np.sum(pv * B, axis=1)
        ampere = dE0 - curlB - kappa * (p0[:, None] * B + _cross(pv, E))
        axion = box + kappa * np.sum(E * B, axis=1) - F
    elif system == "scalar":
        gauss = divE - kappa * np.sum(pv * E, axis=1)
        ampere = dE0 - curlB - kappa * (p0[:, None] * E - _cross(pv, B))
        axion = box - kappa * (np.sum(B * B, axis=1) - np.sum(E * E, axis=1)) - F
    elif system == "free":
        # vacuum Maxwell; the wave equation uses the gauge-rescaled coupling
        gauss = divE
        ampere = dE0 - curlB
        axion = box - kappa * (np.sum(B * B, axis=1) - np.sum(E * E, axis=1)) * np.exp(2 * kappa * th) - F
    else:
        raise ValueError(f"unknown system {system!r}")
    faraday = dB0 + curlE
    out = np.column_stack([gauss, ampere, divB, faraday, axion])
    if not np.all(np.isfinite(out)):
        raise NonFiniteField(f"non-finite residual for {cfg.family_id}")
    return out


def residual_pseudoscalar(cfg: FieldConfiguration, pt, src: SourceProfile = SourceProfile(),
                          kappa: float = 1.0, s: StencilScheme = DEFAULT_STENCIL) -> ResidualVector:
    return ResidualVector.from_array(residual_batch(cfg, pt, src, kappa, s, "pseudoscalar")[0])


def residual_scalar_variant(cfg: FieldConfiguration, pt, src: SourceProfile = SourceProfile(),
                            kappa: float = 1.0, s: StencilScheme = DEFAULT_STENCIL) -> ResidualVector:
    return ResidualVector.from_array(residual_batch(cfg, pt, src, kappa, s, "scalar")[0])


def gauge_image_residual(image: FieldConfiguration, pt, src: SourceProfile = SourceProfile(),
                         kappa: float = 1.0, s: StencilScheme = DEFAULT_STENCIL) -> ResidualVector:
    """Residual of a gauge image: vacuum Maxwell plus
    ``box theta = kappa (B^2 - E^2) exp(2 kappa theta) + F``."""
    return ResidualVector.from_array(residual_batch(image, pt, src, kappa, s, "free")[0])


def lagrangian_density(cfg: FieldConfiguration, pt, kappa: float = 1.0,
                       V: Optional[Callable] = None, s: StencilScheme = DEFAULT_STENCIL) -> float:
    """1/2 p.p - 1/4 F_{mn}F^{mn} + kappa/4 theta F_{mn}F~^{mn} - V(theta).

    With F^{0a} = E^a and B^a = -1/2 eps^{0abc} F_{bc} (eps^{0123} = +1),
    F_{mn}F^{mn} = 2 (B^2 - E^2) and F_{mn}F~^{mn} = 4 E.B.
    """
    X = as_points(pt)
    E, B, th = cfg.evaluate(X)
    if cfg.gradient is not None:
        p = np.asarray(cfg.gradient(X), dtype=float)[0]
    else:
        _, d1, _ = field_derivatives(cfg, X, s)
        p = d1[0, :, 6]
    E, B, th = E[0], B[0], float(th[0])
    pp = p[0] ** 2 - p[1:] @ p[1:]
    FF = 2.0 * (B @ B - E @ E)
    FFdual = 4.0 * (E @ B)
    pot = float(V(th)) if V is not None else 0.0
    return float(0.5 * pp - 0.25 * FF + 0.25 * kappa * th * FFdual - pot)


def gauge_transform_scalar(cfg: FieldConfiguration, kappa: float = 1.0) -> FieldConfiguration:
    """Rescale (E, B) by exp(-kappa theta).

    Writing the scalar-variant fields as ``E = exp(kappa theta) E'`` (same
    for B) turns its coupled Gauss and Ampere laws into vacuum ones for
    ``E', B'``; the Faraday law survives whenever ``p0 B' + p x E' = 0``.
    """

    def ev(X):
        E, B, th = cfg.evaluator(X)
        w = np.exp(-kappa * np.asarray(th, dtype=float))[:, None]
        return np.asarray(E) * w, np.asarray(B) * w, th

    meta = dict(cfg.metadata)
    meta["gauge_image_of"] = cfg.family_id
    meta["family"] = f"{cfg.family_id}[gauge]"
    return FieldConfiguration(ev, cfg.domain, meta, cfg.gradient)
