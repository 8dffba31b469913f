"""Manufactured solutions on the unit square.

Every field is a vectorised callable ``(x, y) -> array``; gradients return a
trailing axis of length 2.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

PI = np.pi


@dataclass(frozen=True)
class ManufacturedCase:
    id: str
    u: Callable
    grad: Callable
    lap: Callable
    f: Callable
    regularity: str = "smooth"

    def g(self, x, y):
        return self.u(x, y)

    def phi(self, x, y, normal):
        """Normal derivative along an outward normal (broadcast against ``x``)."""
        gr = self.grad(x, y)
        return gr[..., 0] * normal[..., 0] + gr[..., 1] * normal[..., 1]


def _ex1() -> ManufacturedCase:
    def X(t):
        return t**2 * (1 - t) ** 2

    def dX(t):
        return 2 * t * (1 - t) * (1 - 2 * t)

    def d2X(t):
        return 2 - 12 * t + 12 * t**2

    return ManufacturedCase(
        "ex1",
        u=lambda x, y: X(x) * X(y),
        grad=lambda x, y: np.stack([dX(x) * X(y), X(x) * dX(y)], axis=-1),
        lap=lambda x, y: d2X(x) * X(y) + X(x) * d2X(y),
        f=lambda x, y: 24 * X(y) + 2 * d2X(x) * d2X(y) + 24 * X(x),
    )


def _ex2() -> ManufacturedCase:
    def u(x, y):
        return np.sin(PI * x) * np.sin(PI * y)

    return ManufacturedCase(
        "ex2",
        u=u,
        grad=lambda x, y: PI * np.stack([np.cos(PI * x) * np.sin(PI * y),
                                         np.sin(PI * x) * np.cos(PI * y)], axis=-1),
        lap=lambda x, y: -2 * PI**2 * u(x, y),
        f=lambda x, y: 4 * PI**4 * u(x, y),
    )


def _ex3() -> ManufacturedCase:
    def u(x, y):
        return np.sin(PI * x) * np.cos(PI * y)

    return ManufacturedCase(
        "ex3",
        u=u,
        grad=lambda x, y: PI * np.stack([np.cos(PI * x) * np.cos(PI * y),
                                         -np.sin(PI * x) * np.sin(PI * y)], axis=-1),
        lap=lambda x, y: -2 * PI**2 * u(x, y),
        f=lambda x, y: 4 * PI**4 * u(x, y),
    )


def _polar(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return np.hypot(x, y), np.mod(np.arctan2(y, x), 2 * PI)


def _ex4() -> ManufacturedCase:
    # r^{3/2} (sin(3t/2) - 3 sin(t/2)); singular at the origin corner
    def u(x, y):
        r, t = _polar(x, y)
        return r**1.5 * (np.sin(1.5 * t) - 3 * np.sin(0.5 * t))

    def grad(x, y):
        r, t = _polar(x, y)
        sr = np.sqrt(r)
        ur = 1.5 * sr * (np.sin(1.5 * t) - 3 * np.sin(0.5 * t))
        ut = sr * (1.5 * np.cos(1.5 * t) - 1.5 * np.cos(0.5 * t))  # (1/r) du/dtheta
        c, s = np.cos(t), np.sin(t)
        return np.stack([ur * c - ut * s, ur * s + ut * c], axis=-1)

    def lap(x, y):
        r, t = _polar(x, y)
        with np.errstate(divide="ignore"):
            return -6.0 * np.sin(0.5 * t) / np.sqrt(r)

    return ManufacturedCase("ex4", u=u, grad=grad, lap=lap,
                            f=lambda x, y: np.zeros(np.broadcast(x, y).shape),
                            regularity="H^2.5 (corner singularity at the origin)")


def _zero() -> ManufacturedCase:
    def z(x, y):
        return np.zeros(np.broadcast(x, y).shape)

    return ManufacturedCase("zero", u=z, grad=lambda x, y: np.zeros(np.broadcast(x, y).shape + (2,)),
                            lap=z, f=z)


_CASES = {"ex1": _ex1, "ex2": _ex2, "ex3": _ex3, "ex4": _ex4, "zero": _zero}
CASE_IDS = ("ex1", "ex2", "ex3", "ex4")


def get_case(case_id: str) -> ManufacturedCase:
    try:
        return _CASES[case_id]()
    except KeyError:
        raise ValueError(f"unknown case {case_id!r}; choose from {', '.join(_CASES)}") from None


def polynomial_case(coeffs, name: str = "poly") -> ManufacturedCase:
    """Case for ``u = sum c[a, b] x^a y^b`` with exact derivatives."""
    from numpy.polynomial import polynomial as P

    c = np.asarray(coeffs, dtype=float)
    cx, cy = P.polyder(c, axis=0), P.polyder(c, axis=1)
    cxx, cyy = P.polyder(c, 2, axis=0), P.polyder(c, 2, axis=1)

    def lap(x, y):
        return P.polyval2d(x, y, cxx) + P.polyval2d(x, y, cyy)

    def f(x, y):
        return sum(P.polyval2d(x, y, P.polyder(d, 2, axis=ax)) for d in (cxx, cyy) for ax in (0, 1))

    return ManufacturedCase(
        name,
        u=lambda x, y: P.polyval2d(x, y, c),
        grad=lambda x, y: np.stack([P.polyval2d(x, y, cx), P.polyval2d(x, y, cy)], axis=-1),
        lap=lap,
        f=f,
    )
