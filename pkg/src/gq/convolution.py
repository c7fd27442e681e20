"""Twisted convolution *-algebra of finitely supported functions on a discrete groupoid."""

from __future__ import annotations

import cmath
import math
from collections import defaultdict
from typing import Callable, Iterable, Mapping, NamedTuple, Optional

import numpy as np

from .kernel import DiscreteGroupoid


class AlgebraElement(Mapping):
    """Immutable finite map ``arrow -> complex``; exact zeros are dropped."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Optional[Mapping] = None):
        items = terms.items() if terms is not None else ()
        self._terms = {g: complex(v) for g, v in items if v != 0}

    @classmethod
    def delta(cls, arrow, value: complex = 1.0) -> "AlgebraElement":
        return cls({arrow: value})

    def __getitem__(self, g):
        return self._terms[g]

    def get(self, g, default=0j):
        return self._terms.get(g, default)

    def __iter__(self):
        return iter(self._terms)

    def __len__(self):
        return len(self._terms)

    def __repr__(self):
        return f"AlgebraElement({self._terms!r})"

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        out = dict(self._terms)
        for g, v in other.items():
            out[g] = out.get(g, 0j) + v
        return AlgebraElement(out)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + other.scale(-1.0)

    def scale(self, c: complex) -> "AlgebraElement":
        return AlgebraElement({g: c * v for g, v in self._terms.items()})

    @property
    def support(self) -> frozenset:
        return frozenset(self._terms)


def distance(a: Mapping, b: Mapping) -> float:
    """Max-norm of ``a - b`` over the union of supports."""
    keys = set(a) | set(b)
    return max((abs(a.get(g, 0j) - b.get(g, 0j)) for g in keys), default=0.0)


def _validate(G: DiscreteGroupoid, a: Mapping) -> None:
    for g in a:
        if not G.is_arrow(g):
            raise ValueError(f"invalid arrow in element support: {g!r}")


def convolve(
    G: DiscreteGroupoid,
    a: Mapping,
    b: Mapping,
    zeta: Optional[Callable] = None,
    *,
    validate: bool = True,
) -> AlgebraElement:
    """``(a*b)(g) = sum_{g1 g2 = g} a(g1) b(g2) zeta(g1, g2)``, exact over the supports."""
    if validate:
        _validate(G, a)
        _validate(G, b)
    by_source = defaultdict(list)
    for g2, v2 in b.items():
        by_source[G.source(g2)].append((g2, v2))
    out = defaultdict(complex)
    for g1, v1 in a.items():
        for g2, v2 in by_source.get(G.target(g1), ()):
            w = v1 * v2
            if zeta is not None:
                w *= zeta(g1, g2)
            out[G.compose(g1, g2)] += w
    return AlgebraElement(out)


def involution(G: DiscreteGroupoid, a: Mapping) -> AlgebraElement:
    """``a*(g) = conj(a(g^{-1}))``."""
    return AlgebraElement({G.inverse(g): complex(v).conjugate() for g, v in a.items()})


def weight_phi(G: DiscreteGroupoid, a: Mapping, mu: Callable) -> complex:
    """``phi(a) = sum_x a(eps(x)) mu(x)``."""
    return sum((v * mu(G.source(g)) for g, v in a.items() if G.is_unit_arrow(g)), 0j)


def sigma(a: Mapping, f: Callable) -> AlgebraElement:
    """Modular automorphism ``sigma(a)(g) = exp(f(g)) a(g)``."""
    return AlgebraElement({g: math.exp(f(g)) * v for g, v in a.items()})


class KMSResult(NamedTuple):
    lhs: complex
    rhs: complex
    residual: float


def kms_check(G: DiscreteGroupoid, a: Mapping, b: Mapping, mu: Callable, f: Callable) -> KMSResult:
    """Compare ``phi(a*b)`` with ``phi(b*sigma(a))``."""
    lhs = weight_phi(G, convolve(G, a, b), mu)
    rhs = weight_phi(G, convolve(G, b, sigma(a, f)), mu)
    return KMSResult(lhs, rhs, abs(lhs - rhs))


def restrict(G: DiscreteGroupoid, a: Mapping, predicate: Callable) -> AlgebraElement:
    """Keep the arrows whose source satisfies an invariant unit predicate."""
    return AlgebraElement({g: v for g, v in a.items() if predicate(G.source(g))})


class RegularRep(NamedTuple):
    matrix: np.ndarray
    closed: bool
    escaped: tuple


def regular_rep(
    G: DiscreteGroupoid,
    a: Mapping,
    unit,
    window: Iterable,
    zeta: Optional[Callable] = None,
) -> RegularRep:
    """Matrix of ``xi -> a*xi`` on the span of ``delta_w`` for ``w`` in a window of ``r^{-1}(unit)``.

    ``closed`` is False when some product leaves the window; the matrix then
    only records the in-window coefficients and should not be trusted.
    """
    window = list(dict.fromkeys(window))
    for w in window:
        if G.target(w) != unit:
            raise ValueError(f"window arrow {w!r} does not end at {unit!r}")
    pos = {w: i for i, w in enumerate(window)}
    M = np.zeros((len(window), len(window)), dtype=complex)
    escaped = []
    for j, w in enumerate(window):
        image = convolve(G, a, {w: 1.0}, zeta, validate=False)
        for g, v in image.items():
            i = pos.get(g)
            if i is None:
                escaped.append(g)
            else:
                M[i, j] += v
    return RegularRep(M, not escaped, tuple(escaped))


def square_cocycle(f: Callable) -> Callable:
    """``exp(i f(g1)^2)``: unimodular but not a 2-cocycle (negative control)."""

    def zeta(g1, g2):
        return cmath.exp(1j * f(g1) ** 2)

    return zeta


def random_element(rng: np.random.Generator, arrows, size: int) -> AlgebraElement:
    """Gaussian complex coefficients on ``size`` distinct arrows drawn from ``arrows``."""
    arrows = list(arrows)
    idx = rng.choice(len(arrows), size=min(size, len(arrows)), replace=False)
    vals = rng.standard_normal(len(idx)) + 1j * rng.standard_normal(len(idx))
    return AlgebraElement({arrows[i]: v for i, v in zip(idx, vals)})


# ---------------------------------------------------------------------- JSON


def element_to_json(a: Mapping, encode: Callable) -> list:
    """``[{"arrow": ..., "re": ..., "im": ...}, ...]`` with arrows encoded by ``encode``."""
    return [{"arrow": encode(g), "re": complex(v).real, "im": complex(v).imag} for g, v in a.items()]


def element_from_json(obj, decode: Callable) -> AlgebraElement:
    if not isinstance(obj, list):
        raise ValueError("an algebra element is a JSON list of {arrow, re, im} entries")
    out = {}
    for entry in obj:
        if not isinstance(entry, dict) or set(entry) - {"arrow", "re", "im"} or "arrow" not in entry:
            raise ValueError(f"malformed element entry: {entry!r}")
        re, im = entry.get("re", 0.0), entry.get("im", 0.0)
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (re, im)):
            raise ValueError(f"coefficients must be numbers: {entry!r}")
        g = decode(entry["arrow"])
        out[g] = out.get(g, 0j) + complex(re, im)
    return AlgebraElement(out)
