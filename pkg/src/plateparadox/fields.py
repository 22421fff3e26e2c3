"""Analytic scalar fields with closed-form derivatives."""
from dataclasses import dataclass
from typing import Callable

import numpy as np


def _pts(points):
    p = np.asarray(points, dtype=float)
    return p.reshape(-1, 2), p.shape[:-1]


@dataclass(frozen=True)
class AnalyticField:
    """Vectorized callables of points with trailing axis 2.

    ``value`` returns shape (...), ``gradient`` (..., 2), ``hessian`` (..., 2, 2).
    """

    value: Callable
    gradient: Callable
    hessian: Callable
    name: str = ""

    def __call__(self, points):
        return self.value(points)


def constant_field(c=1.0):
    c = float(c)
    return AnalyticField(
        lambda p: np.full(np.shape(p)[:-1], c),
        lambda p: np.zeros(np.shape(p)[:-1] + (2,)),
        lambda p: np.zeros(np.shape(p)[:-1] + (2, 2)),
        name=f"const({c:g})",
    )


def polynomial_field(terms, name=""):
    """Field ``sum c * x^p * y^q`` from a mapping ``{(p, q): c}``."""
    terms = {tuple(k): float(v) for k, v in dict(terms).items()}

    def d(p, q, a, b):
        if a > p or b > q:
            return 0.0, 0, 0
        c = 1.0
        for i in range(a):
            c *= p - i
        for i in range(b):
            c *= q - i
        return c, p - a, q - b

    def deriv(points, a, b):
        P = np.asarray(points, dtype=float)
        x, y = P[..., 0], P[..., 1]
        out = np.zeros(P.shape[:-1])
        for (p, q), c in terms.items():
            k, pp, qq = d(p, q, a, b)
            if k:
                out = out + c * k * x ** pp * y ** qq
        return out

    def grad(points):
        return np.stack([deriv(points, 1, 0), deriv(points, 0, 1)], axis=-1)

    def hess(points):
        xx, xy, yy = deriv(points, 2, 0), deriv(points, 1, 1), deriv(points, 0, 2)
        return np.stack([np.stack([xx, xy], -1), np.stack([xy, yy], -1)], -2)

    field = AnalyticField(lambda p: deriv(p, 0, 0), grad, hess, name=name or "poly")
    object.__setattr__(field, "derivative", deriv)
    return field


def as_load(f):
    """Normalize a load given as a number, a callable or None to a callable."""
    if f is None:
        f = 1.0
    if callable(f):
        return f
    c = float(f)
    return lambda p: np.full(np.shape(p)[:-1], c)
