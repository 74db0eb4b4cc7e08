"""One-variable function parameters with derivatives, and harmonic pairs.

Families with free functions take them either as named entries of
``LIBRARY`` or as :class:`Fn` objects. A bare callable is accepted too;
its derivative then comes from an 8th-order central difference.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

_D8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


@dataclass(frozen=True)
class Fn:
    name: str
    f: Callable
    df: Optional[Callable] = None

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))

    def d(self, x):
        x = np.asarray(x, dtype=float)
        if self.df is not None:
            return self.df(x)
        h = 1e-2
        return sum(c * self.f(x + (k - 4) * h) for k, c in enumerate(_D8) if c != 0.0) / h


LIBRARY = {
    "zero": Fn("zero", lambda x: np.zeros_like(x), lambda x: np.zeros_like(x)),
    "one": Fn("one", lambda x: np.ones_like(x), lambda x: np.zeros_like(x)),
    "identity": Fn("identity", lambda x: x, lambda x: np.ones_like(x)),
    "sin": Fn("sin", np.sin, np.cos),
    "cos": Fn("cos", np.cos, lambda x: -np.sin(x)),
    "sin2": Fn("sin2", lambda x: np.sin(2 * x), lambda x: 2 * np.cos(2 * x)),
    "half_cos": Fn("half_cos", lambda x: 0.5 * np.cos(x), lambda x: -0.5 * np.sin(x)),
    "tanh": Fn("tanh", np.tanh, lambda x: 1.0 / np.cosh(x) ** 2),
    "sech": Fn("sech", lambda x: 1.0 / np.cosh(x), lambda x: -np.tanh(x) / np.cosh(x)),
    "gauss": Fn("gauss", lambda x: np.exp(-x * x), lambda x: -2 * x * np.exp(-x * x)),
    "exp_decay": Fn("exp_decay", lambda x: np.exp(-x), lambda x: -np.exp(-x)),
    "square": Fn("square", lambda x: x * x, lambda x: 2 * x),
    "neg_sin": Fn("neg_sin", lambda x: -np.sin(x), lambda x: -np.cos(x)),
}


def as_fn(obj) -> Fn:
    if isinstance(obj, Fn):
        return obj
    if isinstance(obj, str):
        try:
            return LIBRARY[obj]
        except KeyError:
            raise KeyError(f"unknown function name {obj!r}; known: {sorted(LIBRARY)}") from None
    if callable(obj):
        return Fn(getattr(obj, "__name__", "callable"), obj)
    raise TypeError(f"cannot interpret {obj!r} as a function of one variable")


def fn_name(obj) -> str:
    return obj if isinstance(obj, str) else as_fn(obj).name


@dataclass(frozen=True)
class PlanePair:
    """Pair (psi1, psi2) of functions of (x1, x2, w)."""

    name: str
    psi1: Callable
    psi2: Callable

    def cr_defect(self, x1, x2, w, h: float = 1e-4):
        """(d1 psi1 + d2 psi2, d1 psi2 - d2 psi1) by 4th-order differences."""
        def d(f, dx, dy):
            c = [(-2, 1 / 12), (-1, -8 / 12), (1, 8 / 12), (2, -1 / 12)]
            return sum(wt * f(x1 + k * h * dx, x2 + k * h * dy, w) for k, wt in c) / h
        return (d(self.psi1, 1, 0) + d(self.psi2, 0, 1),
                d(self.psi2, 1, 0) - d(self.psi1, 0, 1))


PAIRS = {
    "zero": PlanePair("zero", lambda a, b, w: 0 * a, lambda a, b, w: 0 * a),
    "linear": PlanePair("linear", lambda a, b, w: a, lambda a, b, w: -b),
    "quadratic": PlanePair("quadratic",
                           lambda a, b, w: 0.1 * (a * w + a * a - b * b),
                           lambda a, b, w: 0.1 * (-b * w - 2 * a * b)),
    "non_harmonic": PlanePair("non_harmonic", lambda a, b, w: a * a, lambda a, b, w: 0 * a),
}


def as_pair(obj) -> PlanePair:
    if isinstance(obj, PlanePair):
        return obj
    if isinstance(obj, str):
        return PAIRS[obj]
    if isinstance(obj, (tuple, list)) and len(obj) == 2:
        return PlanePair("callable", obj[0], obj[1])
    raise TypeError(f"cannot interpret {obj!r} as a (psi1, psi2) pair")


@dataclass(frozen=True)
class Harmonic2D:
    """Function of (x1, x2) with its gradient."""

    name: str
    f: Callable
    grad: Callable


HARMONIC = {
    "constant": Harmonic2D("constant", lambda a, b: 0 * a, lambda a, b: (0 * a, 0 * a)),
    "x1": Harmonic2D("x1", lambda a, b: a, lambda a, b: (np.ones_like(a), 0 * a)),
    "saddle": Harmonic2D("saddle", lambda a, b: a * a - b * b, lambda a, b: (2 * a, -2 * b)),
}


def as_harmonic(obj) -> Harmonic2D:
    if isinstance(obj, Harmonic2D):
        return obj
    if isinstance(obj, str):
        return HARMONIC[obj]
    raise TypeError(f"cannot interpret {obj!r} as a harmonic function")
