"""Tagged forward-mode dual numbers with arbitrary nesting.

A :class:`Dual` carries a tag; every call to :func:`jacobian` draws a fresh
tag larger than all tags already alive, so inside that call the newest tag is
the outermost layer and any older duals appearing in the inputs behave as
constants.  This avoids perturbation confusion in nested derivatives.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

_tags = itertools.count(1)


class Dual:
    __slots__ = ("tag", "a", "b")

    def __init__(self, tag: int, a, b):
        self.tag = tag
        self.a = a
        self.b = b

    def __repr__(self):
        return f"Dual[{self.tag}]({self.a!r}, {self.b!r})"

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        tag = _top(self, other)
        a1, b1 = _parts(self, tag)
        a2, b2 = _parts(other, tag)
        return Dual(tag, a1 + a2, b1 + b2)

    __radd__ = __add__

    def __sub__(self, other):
        tag = _top(self, other)
        a1, b1 = _parts(self, tag)
        a2, b2 = _parts(other, tag)
        return Dual(tag, a1 - a2, b1 - b2)

    def __rsub__(self, other):
        tag = _top(self, other)
        a1, b1 = _parts(other, tag)
        a2, b2 = _parts(self, tag)
        return Dual(tag, a1 - a2, b1 - b2)

    def __neg__(self):
        return Dual(self.tag, -self.a, -self.b)

    def __pos__(self):
        return self

    def __mul__(self, other):
        tag = _top(self, other)
        a1, b1 = _parts(self, tag)
        a2, b2 = _parts(other, tag)
        return Dual(tag, a1 * a2, a1 * b2 + b1 * a2)

    __rmul__ = __mul__

    def __truediv__(self, other):
        tag = _top(self, other)
        a1, b1 = _parts(self, tag)
        a2, b2 = _parts(other, tag)
        q = a1 / a2
        return Dual(tag, q, (b1 - q * b2) / a2)

    def __rtruediv__(self, other):
        tag = _top(self, other)
        a1, b1 = _parts(other, tag)
        a2, b2 = _parts(self, tag)
        q = a1 / a2
        return Dual(tag, q, (b1 - q * b2) / a2)

    def __pow__(self, k):
        if not isinstance(k, int):
            return exp(log(self) * k)
        if k == 0:
            return 1.0
        if k < 0:
            return 1.0 / self ** (-k)
        return Dual(self.tag, self.a**k, k * self.a ** (k - 1) * self.b)

    # Comparisons look at the real part only (used for branch decisions).
    def __lt__(self, other):
        return primal(self) < primal(other)

    def __gt__(self, other):
        return primal(self) > primal(other)

    def __abs__(self):
        return -self if primal(self) < 0 else self

    def __float__(self):
        return float(primal(self))


def _top(x, y) -> int:
    tx = x.tag if isinstance(x, Dual) else 0
    ty = y.tag if isinstance(y, Dual) else 0
    return max(tx, ty)


def _parts(x, tag):
    if isinstance(x, Dual) and x.tag == tag:
        return x.a, x.b
    return x, 0.0


def primal(x):
    """Strip every dual layer."""
    while isinstance(x, Dual):
        x = x.a
    return x


def sqrt(x):
    if isinstance(x, Dual):
        r = sqrt(x.a)
        return Dual(x.tag, r, x.b / (2.0 * r))
    return math.sqrt(x)


def exp(x):
    if isinstance(x, Dual):
        e = exp(x.a)
        return Dual(x.tag, e, e * x.b)
    return math.exp(x)


def log(x):
    if isinstance(x, Dual):
        return Dual(x.tag, log(x.a), x.b / x.a)
    return math.log(x)


def _split(y, tag):
    if isinstance(y, Dual) and y.tag == tag:
        return y.a, y.b
    return y, 0.0


def jacobian(f, x):
    """Value and Jacobian of ``f`` at ``x`` by one forward sweep per input.

    ``f`` maps a list of scalars to a flat sequence of scalars.  Inputs may
    themselves be duals of older tags; results then carry those tags, which
    is how nested (higher-order) derivatives are formed.  Returns
    ``(value, J)`` as object arrays with ``J[i, j] = d f_i / d x_j``.
    """
    x = list(x)
    tag = next(_tags)
    value, cols = None, []
    for j in range(len(x)):
        seeded = [Dual(tag, xi, 1.0 if i == j else 0.0) for i, xi in enumerate(x)]
        out = list(f(seeded))
        parts = [_split(o, tag) for o in out]
        if value is None:
            value = [p[0] for p in parts]
        cols.append([p[1] for p in parts])
    if value is None:
        value = list(f(x))
    V = np.empty(len(value), dtype=object)
    V[:] = value
    J = np.empty((len(value), len(x)), dtype=object)
    for j, col in enumerate(cols):
        J[:, j] = col
    return V, J


def as_float(a) -> np.ndarray:
    """Convert an object array of plain numbers to float."""
    return np.asarray(a, dtype=object).astype(float)
