"""Bessel J/Y/I/K, Airy Ai/Bi and the principal Lambert W, real arguments only.

Small arguments use power series. Larger ones use Schlaefli / Macdonald
integral representations evaluated with composite Gauss-Legendre rules,
which are accurate for any real order (negative orders are needed for the
Airy connection formulas).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import solve_ivp


class OutOfSupportedRange(ValueError):
    pass


class BelowBranchPoint(ValueError):
    pass


class StiffnessFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class SeriesBudget:
    max_terms: int = 400
    abs_floor: float = 1e-300
    rel_tol: float = 1e-17

    def __post_init__(self):
        if self.rel_tol < 1e-17:
            raise ValueError("rel_tol below double precision")


_BUDGET = SeriesBudget()


@lru_cache(maxsize=None)
def _gl(n: int):
    return np.polynomial.legendre.leggauss(n)


def _quad(f, a: float, b: float, panels: int = 8, n: int = 32) -> float:
    """Composite Gauss-Legendre on [a, b]."""
    x, w = _gl(n)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        total += half * float(np.dot(w, f(0.5 * (hi + lo) + half * x)))
    return total


def _rgamma(z: float) -> float:
    """1/Gamma(z), zero at the poles."""
    if z <= 0 and z == math.floor(z):
        return 0.0
    return 1.0 / math.gamma(z)


def _bessel_series(nu: float, x: float, sign: float, budget: SeriesBudget = _BUDGET) -> float:
    """sum_k sign^k (x/2)^(2k+nu) / (k! Gamma(k+nu+1)); sign=-1 gives J, +1 gives I."""
    half = 0.5 * x
    lead = _rgamma(nu + 1.0)
    k0 = 0
    if lead == 0.0:  # negative integer order: J_{-n} = (-1)^n J_n
        n = int(round(-nu))
        return (sign ** n if sign < 0 else 1.0) * _bessel_series(float(n), x, sign, budget)
    term = lead
    total = term
    q = sign * half * half
    for k in range(1, budget.max_terms):
        term *= q / (k * (k + nu))
        total += term
        if abs(term) <= budget.rel_tol * abs(total) + budget.abs_floor and k > k0 + 2:
            break
    return total * half ** nu


def _tail_limit(x: float, growth: float) -> float:
    """Upper limit T with x*sinh(T) - growth*T beyond ~ 60."""
    t = 1.0
    while x * math.sinh(t) - growth * t < 60.0:
        t *= 1.25
    return t


def _j_integral(nu: float, x: float) -> float:
    a = _quad(lambda t: np.cos(nu * t - x * np.sin(t)), 0.0, math.pi,
              panels=max(4, int(x) // 2 + 2), n=32) / math.pi
    s = math.sin(nu * math.pi)
    if s == 0.0:
        return a
    T = _tail_limit(x, -abs(nu) if nu < 0 else 0.0)
    b = _quad(lambda t: np.exp(-x * np.sinh(t) - nu * t), 0.0, T, panels=16) / math.pi
    return a - s * b


def _y_integral(nu: float, x: float) -> float:
    a = _quad(lambda t: np.sin(x * np.sin(t) - nu * t), 0.0, math.pi,
              panels=max(4, int(x) // 2 + 2), n=32) / math.pi
    T = _tail_limit(x, abs(nu))
    c = math.cos(nu * math.pi)
    b = _quad(lambda t: (np.exp(nu * t) + np.exp(-nu * t) * c) * np.exp(-x * np.sinh(t)),
              0.0, T, panels=24) / math.pi
    return a - b


def _jv(nu: float, x: float) -> float:
    if x <= 8.0:
        return _bessel_series(nu, x, -1.0)
    return _j_integral(nu, x)


def _yv(nu: float, x: float) -> float:
    return _y_integral(nu, x)


def _iv(nu: float, x: float) -> float:
    return _bessel_series(nu, x, 1.0)


def _kv(nu: float, x: float) -> float:
    T = 1.0
    while x * math.cosh(T) - abs(nu) * T - x < 60.0:
        T *= 1.25
    # scale by exp(-x) inside to keep the integrand O(1)
    val = _quad(lambda t: np.exp(-x * (np.cosh(t) - 1.0)) * np.cosh(nu * t), 0.0, T, panels=24)
    return val * math.exp(-x)


def _check_bessel(nu, x):
    if not (0.0 <= nu <= 5.0):
        raise OutOfSupportedRange(f"order {nu} outside [0, 5]")
    if not (0.0 < x <= 50.0):
        raise OutOfSupportedRange(f"argument {x} outside (0, 50]")


def _vectorize(fn):
    def wrapper(nu, x):
        xa = np.asarray(x, dtype=float)
        if xa.ndim == 0:
            _check_bessel(float(nu), float(xa))
            return fn(float(nu), float(xa))
        out = np.empty_like(xa)
        for i, v in np.ndenumerate(xa):
            _check_bessel(float(nu), float(v))
            out[i] = fn(float(nu), float(v))
        return out

    wrapper.__name__ = fn.__name__
    return wrapper


bessel_j = _vectorize(_jv)
bessel_y = _vectorize(_yv)
bessel_i = _vectorize(_iv)
bessel_k = _vectorize(_kv)
bessel_j.__doc__ = "Bessel function of the first kind J_nu(x), 0 <= nu <= 5, 0 < x <= 50."
bessel_y.__doc__ = "Bessel function of the second kind Y_nu(x)."
bessel_i.__doc__ = "Modified Bessel function of the first kind I_nu(x)."
bessel_k.__doc__ = "Modified Bessel function of the second kind K_nu(x)."


# -------------------------------------------------------------------- Airy

_AI0 = 1.0 / (3.0 ** (2.0 / 3.0) * math.gamma(2.0 / 3.0))
_AIP0 = -1.0 / (3.0 ** (1.0 / 3.0) * math.gamma(1.0 / 3.0))
_BI0 = 1.0 / (3.0 ** (1.0 / 6.0) * math.gamma(2.0 / 3.0))
_BIP0 = 3.0 ** (1.0 / 6.0) / math.gamma(1.0 / 3.0)


def _airy_maclaurin(x: float):
    """Even/odd Maclaurin pieces f, g and their derivatives, so Ai = a f + b g."""
    f, g = 1.0, x
    fp, gp = 0.0, 1.0
    tf, tg = 1.0, x
    x3 = x ** 3
    for k in range(1, 200):
        tf *= x3 / ((3 * k - 1) * (3 * k))
        tg *= x3 / ((3 * k) * (3 * k + 1))
        f += tf
        g += tg
        fp += 3 * k * tf / x if x != 0 else 0.0
        gp += (3 * k + 1) * tg / x if x != 0 else 0.0
        if abs(tf) + abs(tg) < 1e-18 * (abs(f) + abs(g)):
            break
    return f, g, fp, gp


def _airy(x: float):
    """(Ai, Ai', Bi, Bi')."""
    if abs(x) <= 2.5:
        f, g, fp, gp = _airy_maclaurin(x)
        return (_AI0 * f + _AIP0 * g, _AI0 * fp + _AIP0 * gp,
                _BI0 * f + _BIP0 * g, _BI0 * fp + _BIP0 * gp)
    if x > 0:
        z = 2.0 / 3.0 * x ** 1.5
        r = math.sqrt(x / 3.0)
        ai = r * _kv(1.0 / 3.0, z) / math.pi
        aip = -x / (math.pi * math.sqrt(3.0)) * _kv(2.0 / 3.0, z)
        bi = r * (_iv(-1.0 / 3.0, z) + _iv(1.0 / 3.0, z))
        bip = x / math.sqrt(3.0) * (_iv(-2.0 / 3.0, z) + _iv(2.0 / 3.0, z))
        return ai, aip, bi, bip
    t = -x
    z = 2.0 / 3.0 * t ** 1.5
    jp, jm = _jv(1.0 / 3.0, z), _jv(-1.0 / 3.0, z)
    jp2, jm2 = _jv(2.0 / 3.0, z), _jv(-2.0 / 3.0, z)
    ai = math.sqrt(t) / 3.0 * (jp + jm)
    aip = t / 3.0 * (jp2 - jm2)
    bi = math.sqrt(t / 3.0) * (jm - jp)
    bip = t / math.sqrt(3.0) * (jm2 + jp2)
    return ai, aip, bi, bip


def _airy_vec(idx):
    def fn(x):
        xa = np.asarray(x, dtype=float)
        if np.any(np.abs(xa) > 15.0):
            raise OutOfSupportedRange("Airy argument outside [-15, 15]")
        if xa.ndim == 0:
            return _airy(float(xa))[idx]
        out = np.empty_like(xa)
        for i, v in np.ndenumerate(xa):
            out[i] = _airy(float(v))[idx]
        return out
    return fn


airy_ai = _airy_vec(0)
airy_ai_prime = _airy_vec(1)
airy_bi = _airy_vec(2)
airy_bi_prime = _airy_vec(3)


# --------------------------------------------------------------- Lambert W

_BRANCH = -1.0 / math.e


def _lambert_scalar(y: float) -> float:
    if y < _BRANCH + 1e-12 and y != _BRANCH:
        if y < _BRANCH:
            raise BelowBranchPoint(f"{y} < -1/e")
    if y == 0.0:
        return 0.0
    if y < -0.25:
        p = math.sqrt(max(0.0, 2.0 * (math.e * y + 1.0)))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif y < 3.0:
        w = math.log1p(y)
    else:
        ly = math.log(y)
        w = ly - math.log(ly)
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - y
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1)
        step = f / denom
        w -= step
        if abs(step) <= 1e-16 * (1.0 + abs(w)):
            break
    return w


def lambert_w(y):
    """Principal branch W0 with W e^W = y, y >= -1/e."""
    ya = np.asarray(y, dtype=float)
    if np.any(ya < _BRANCH):
        raise BelowBranchPoint("argument below -1/e")
    if ya.ndim == 0:
        return _lambert_scalar(float(ya))
    if ya.size <= 8:
        out = np.empty_like(ya)
        for i, v in np.ndenumerate(ya):
            out[i] = _lambert_scalar(float(v))
        return out
    return _lambert_array(ya)


def _lambert_array(y: np.ndarray) -> np.ndarray:
    """Vectorised Halley iteration, same starting guesses as the scalar path."""
    w = np.empty_like(y)
    near = y < -0.25
    mid = (~near) & (y < 3.0)
    big = y >= 3.0
    p = np.sqrt(np.maximum(0.0, 2.0 * (math.e * y[near] + 1.0)))
    w[near] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    w[mid] = np.log1p(y[mid])
    ly = np.log(np.where(big, y, 3.0))[big]
    w[big] = ly - np.log(ly)
    for _ in range(60):
        ew = np.exp(w)
        f = w * ew - y
        wp1 = w + 1.0
        safe = np.where(wp1 == 0.0, 1.0, wp1)
        step = f / (ew * safe - (w + 2.0) * f / (2.0 * safe))
        step = np.where(wp1 == 0.0, 0.0, step)
        w = w - step
        if np.all(np.abs(step) <= 1e-16 * (1.0 + np.abs(w))):
            break
    w[y == 0.0] = 0.0
    return w


# ----------------------------------------------------- ODE-defined values

def ode_defined_value(ode, x0: float, y0, x: float, rtol: float = 1e-10, atol: float = 1e-12):
    """Value at ``x`` of the solution through ``(x0, y0)``.

    ``ode`` is either a callable ``f(x, y)`` (a reduced ODE qualifies) or an
    object exposing ``rhs(x, y, params)`` and ``params``.
    """
    if callable(ode):
        f = ode
    else:
        params = getattr(ode, "params", {})
        f = lambda t, y: ode.rhs(t, y, params)
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if x == x0:
        return y0.copy()
    sol = solve_ivp(f, (x0, x), y0, method="DOP853", rtol=rtol, atol=atol)
    if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
        raise StiffnessFailure(sol.message)
    return sol.y[:, -1]
