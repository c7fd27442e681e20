"""Discrete groupoids, extended integers and axiom/cocycle checkers.

A :class:`DiscreteGroupoid` is a bundle of pure callables.  Arrows and units
are hashable value objects chosen by the concrete instance; composition of a
non-composable pair returns ``None``.
"""

from __future__ import annotations

import cmath
import math
import operator
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, NamedTuple, Optional, Sequence

import numpy as np

INT64_MAX = 2**63 - 1
INT64_MIN = -(2**63)


class _Infinity:
    """The point at infinity of the one-point compactified integers."""

    _instance = None
    __slots__ = ()

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())

    def __hash__(self):
        return hash("gq.INF")

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


INF = _Infinity()

ExtInt = Any  # int or INF


def check_int64(value: int) -> int:
    if not INT64_MIN <= value <= INT64_MAX:
        raise OverflowError(f"lattice coordinate {value} outside the 64-bit range")
    return value


def is_ext_int(value) -> bool:
    return value is INF or (isinstance(value, int) and not isinstance(value, bool))


def ext_add(a: ExtInt, b: int) -> ExtInt:
    """Translate an extended integer by a finite integer (INF is fixed)."""
    if a is INF:
        return INF
    return check_int64(a + b)


def ext_sub(a: ExtInt, b: ExtInt) -> ExtInt:
    """Difference with ``INF - finite = INF``; ``x - INF`` is undefined."""
    if b is INF:
        raise ValueError("cannot subtract the point at infinity")
    if a is INF:
        return INF
    return check_int64(a - b)


@dataclass(frozen=True)
class BatchOps:
    """Vectorised mirror of the structure maps on integer row encodings.

    ``source``/``target`` map rows of shape ``(..., d)`` to unit keys of shape
    ``(..., k)``; ``compose`` must broadcast over leading axes and is only
    called on composable rows.  The axiom checker cross-validates these
    against the scalar maps on every pair it sees.
    """

    encode: Callable[[Hashable], Sequence[int]]
    source: Callable[[np.ndarray], np.ndarray]
    target: Callable[[np.ndarray], np.ndarray]
    compose: Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DiscreteGroupoid:
    """Structure maps of a discrete groupoid.

    ``source``/``target`` follow the convention that ``compose(g1, g2)`` is
    defined exactly when ``target(g1) == source(g2)``.
    """

    is_unit: Callable[[Hashable], bool]
    is_arrow: Callable[[Hashable], bool]
    source: Callable[[Hashable], Hashable]
    target: Callable[[Hashable], Hashable]
    compose: Callable[[Hashable, Hashable], Optional[Hashable]]
    inverse: Callable[[Hashable], Hashable]
    unit: Callable[[Hashable], Hashable]
    fiber: Optional[Callable[..., Iterable[Hashable]]] = None
    name: str = "groupoid"
    batch: Optional[BatchOps] = None

    def composable(self, g1, g2) -> bool:
        return self.target(g1) == self.source(g2)

    def is_unit_arrow(self, g) -> bool:
        return g == self.unit(self.source(g))


class Violation(NamedTuple):
    check: str
    witness: tuple
    detail: str = ""


@dataclass
class Report:
    """Outcome of a checker: counts of instances examined plus every violation."""

    name: str
    checked: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    residual: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.violations

    def count(self, key: str, n: int = 1) -> None:
        self.checked[key] = self.checked.get(key, 0) + n

    def fail(self, check: str, witness: tuple, detail: str = "") -> None:
        self.violations.append(Violation(check, witness, detail))

    def merge(self, other: "Report") -> "Report":
        for key, n in other.checked.items():
            self.count(key, n)
        self.violations.extend(other.violations)
        self.residual = max(self.residual, other.residual)
        return self

    def __bool__(self) -> bool:
        return self.passed


def check_groupoid_axioms(
    G: DiscreteGroupoid,
    sample: Iterable,
    *,
    triples: bool = True,
    max_violations: int = 50,
) -> Report:
    """Exhaustively check unit, inverse and associativity laws inside ``sample``.

    Every composable pair and (optionally) every composable triple drawn from
    ``sample`` is examined.  Composites need not lie in the sample.
    """
    arrows = list(dict.fromkeys(sample))
    for g in arrows:
        if not G.is_arrow(g):
            raise ValueError(f"invalid arrow in sample: {g!r}")

    report = Report(f"axioms[{G.name}]")

    def fail(check, witness, detail=""):
        if len(report.violations) < max_violations:
            report.fail(check, witness, detail)
        else:
            report.count("suppressed_violations")

    by_source = defaultdict(list)
    for g in arrows:
        by_source[G.source(g)].append(g)

    for g in arrows:
        report.count("arrows")
        x, y = G.source(g), G.target(g)
        for u in (x, y):
            if not G.is_unit(u):
                fail("unit_validity", (g, u))
        ex, ey = G.unit(x), G.unit(y)
        if not (G.is_arrow(ex) and G.source(ex) == x and G.target(ex) == x):
            fail("unit_embedding", (x,))
        if G.compose(ex, g) != g:
            fail("left_identity", (ex, g))
        if G.compose(g, ey) != g:
            fail("right_identity", (g, ey))
        gi = G.inverse(g)
        if not G.is_arrow(gi) or G.source(gi) != y or G.target(gi) != x:
            fail("inverse_swaps", (g, gi))
            continue
        if G.inverse(gi) != g:
            fail("inverse_involution", (g,))
        if G.compose(g, gi) != ex:
            fail("right_inverse", (g, gi))
        if G.compose(gi, g) != ey:
            fail("left_inverse", (gi, g))

    # Non-composable pairs must be rejected; one foreign source per arrow
    # keeps this linear in the sample size.
    sources = list(by_source)
    for i, g in enumerate(arrows):
        y = G.target(g)
        for other in sources[i % len(sources):] + sources[: i % len(sources)]:
            if other != y:
                h = by_source[other][0]
                report.count("non_composable_pairs")
                if G.compose(g, h) is not None:
                    fail("compose_defined_off_domain", (g, h))
                break

    pair_cache = {}
    for g1 in arrows:
        for g2 in by_source.get(G.target(g1), ()):
            report.count("pairs")
            g12 = G.compose(g1, g2)
            pair_cache[g1, g2] = g12
            if g12 is None:
                fail("compose_undefined", (g1, g2))
                continue
            if not G.is_arrow(g12):
                fail("composite_invalid", (g1, g2, g12))
                continue
            if G.source(g12) != G.source(g1) or G.target(g12) != G.target(g2):
                fail("composite_endpoints", (g1, g2, g12))

    if triples:
        if G.batch is not None:
            _check_associativity_batch(G, arrows, by_source, pair_cache, report, fail)
        else:
            _check_associativity(G, arrows, by_source, pair_cache, report, fail)
    return report


def _check_associativity(G, arrows, by_source, pair_cache, report, fail):
    # (g1 g2) g3 == g1 (g2 g3); composites with the same left factor are
    # memoised per row so each distinct product is formed once.
    for g1 in arrows:
        row = {}
        fiber1 = by_source.get(G.target(g1), ())
        for g2 in fiber1:
            g12 = pair_cache.get((g1, g2))
            if g12 is None:
                continue
            for g3 in by_source.get(G.target(g2), ()):
                g23 = pair_cache.get((g2, g3))
                if g23 is None:
                    continue
                report.count("triples")
                left = G.compose(g12, g3)
                right = row.get(g23)
                if right is None:
                    right = G.compose(g1, g23)
                    row[g23] = right
                if left is None or left != right:
                    fail("associativity", (g1, g2, g3), f"{left!r} != {right!r}")


def _narrow(E: np.ndarray) -> np.ndarray:
    # Sums of three entries must not overflow the chosen width.
    bound = int(np.abs(E).max()) if E.size else 0
    for dtype, limit in ((np.int8, 2**5), (np.int16, 2**13), (np.int32, 2**29)):
        if bound < limit:
            return E.astype(dtype)
    return E


def _rows_equal(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Compare whole rows through a wider view when the byte width allows it.
    width = x.shape[-1] * x.itemsize
    for view in (np.int64, np.int32, np.int16):
        if width % np.dtype(view).itemsize == 0:
            if x.flags.c_contiguous and y.flags.c_contiguous:
                return (x.view(view) == y.view(view)).all(-1)
            break
    return (x == y).all(-1)


def _check_associativity_batch(G, arrows, by_source, pair_cache, report, fail):
    ops = G.batch
    index = {g: i for i, g in enumerate(arrows)}
    E = _narrow(np.asarray([ops.encode(g) for g in arrows], dtype=np.int64))

    # The vectorised maps must reproduce the scalar ones on every pair.
    done = [(index[a], index[b], c) for (a, b), c in pair_cache.items() if c is not None]
    if done:
        i1 = np.fromiter((d[0] for d in done), dtype=np.intp, count=len(done))
        i2 = np.fromiter((d[1] for d in done), dtype=np.intp, count=len(done))
        scalar = np.asarray([ops.encode(d[2]) for d in done], dtype=np.int64)
        report.count("batch_pairs", len(done))
        ok = (ops.compose(E[i1], E[i2]) == scalar).all(-1)
        ok &= (ops.target(E[i1]) == ops.source(E[i2])).all(-1)
        for m in np.flatnonzero(~ok):
            fail("batch_mismatch", (arrows[i1[m]], arrows[i2[m]]))

    incoming = defaultdict(list)
    for i, g in enumerate(arrows):
        incoming[G.target(g)].append(i)
    outgoing = {x: [index[g] for g in gs] for x, gs in by_source.items()}

    for j, g2 in enumerate(arrows):
        ins, outs = incoming.get(G.source(g2)), outgoing.get(G.target(g2))
        if not ins or not outs:
            continue
        a, b, c = E[ins], E[j][None, :], E[outs]
        ab, bc = ops.compose(a, b), ops.compose(b, c)
        report.count("triples", len(ins) * len(outs))
        # Composability of every (ab, c) and (a, bc): all keys on each side
        # must agree with one common unit key.
        left_key, right_key = ops.target(ab), ops.source(c)
        pivot = right_key[:1]
        if not ((left_key == pivot).all() and (right_key == pivot).all()):
            bad = ~(left_key[:, None, :] == right_key[None, :, :]).all(-1)
            for x, y in np.argwhere(bad):
                fail("associativity", (arrows[ins[x]], g2, arrows[outs[y]]), "not composable")
            continue
        left_key, right_key = ops.target(a), ops.source(bc)
        pivot = left_key[:1]
        if not ((left_key == pivot).all() and (right_key == pivot).all()):
            bad = ~(left_key[:, None, :] == right_key[None, :, :]).all(-1)
            for x, y in np.argwhere(bad):
                fail("associativity", (arrows[ins[x]], g2, arrows[outs[y]]), "not composable")
            continue
        left = ops.compose(ab[:, None, :], c[None, :, :])
        right = ops.compose(a[:, None, :], bc[None, :, :])
        ok = _rows_equal(left, right)
        if not ok.all():
            for x, y in np.argwhere(~ok):
                fail("associativity", (arrows[ins[x]], g2, arrows[outs[y]]))


def check_cocycle1(
    G: DiscreteGroupoid,
    f: Callable,
    pairs: Iterable[tuple],
    *,
    tol: float = 0.0,
    max_violations: int = 50,
) -> Report:
    """Check ``f(g1 g2) == f(g1) + f(g2)`` on composable pairs.

    ``tol=0`` demands exact equality (integer-valued cocycles).
    """
    report = Report("cocycle1")
    for g1, g2 in pairs:
        g12 = G.compose(g1, g2)
        if g12 is None:
            raise ValueError(f"pair is not composable: {(g1, g2)!r}")
        report.count("pairs")
        err = abs(f(g12) - f(g1) - f(g2))
        report.residual = max(report.residual, err)
        if err > tol and len(report.violations) < max_violations:
            report.fail("additivity", (g1, g2), f"defect {err:.3e}")
    return report


def cocycle2_defect(G: DiscreteGroupoid, zeta: Callable, triple: tuple) -> complex:
    g1, g2, g3 = triple
    g12, g23 = G.compose(g1, g2), G.compose(g2, g3)
    if g12 is None or g23 is None:
        raise ValueError(f"triple is not composable: {triple!r}")
    return zeta(g1, g23) * zeta(g2, g3) / (zeta(g1, g2) * zeta(g12, g3))


def check_cocycle2(
    G: DiscreteGroupoid,
    zeta: Callable,
    triples: Iterable[tuple],
    *,
    tol: float = 1e-12,
    max_violations: int = 50,
) -> Report:
    """Check the circle-valued 2-cocycle identity on composable triples."""
    report = Report("cocycle2")
    for triple in triples:
        g1, g2, g3 = triple
        for pair in ((g1, g2), (g2, g3)):
            if abs(abs(zeta(*pair)) - 1.0) > tol:
                raise ValueError(f"cocycle value off the unit circle at {pair!r}")
        report.count("triples")
        err = abs(cocycle2_defect(G, zeta, triple) - 1.0)
        report.residual = max(report.residual, err)
        if err > tol and len(report.violations) < max_violations:
            report.fail("multiplicativity", triple, f"defect {err:.3e}")
    return report


def composable_triples(G: DiscreteGroupoid, sample: Iterable) -> list:
    arrows = list(dict.fromkeys(sample))
    by_source = defaultdict(list)
    for g in arrows:
        by_source[G.source(g)].append(g)
    out = []
    for g1 in arrows:
        for g2 in by_source.get(G.target(g1), ()):
            for g3 in by_source.get(G.target(g2), ()):
                out.append((g1, g2, g3))
    return out


def composable_pairs(G: DiscreteGroupoid, sample: Iterable) -> list:
    arrows = list(dict.fromkeys(sample))
    by_source = defaultdict(list)
    for g in arrows:
        by_source[G.source(g)].append(g)
    return [(g1, g2) for g1 in arrows for g2 in by_source.get(G.target(g1), ())]


def bilinear_cocycle(f: Callable, g: Callable, theta: float = 1.0) -> Callable:
    """``zeta(g1, g2) = exp(i theta f(g1) g(g2))`` for additive cocycles f, g."""

    def zeta(a, b):
        return cmath.exp(1j * theta * f(a) * g(b))

    return zeta


def trivial_cocycle(a, b) -> complex:
    return 1.0 + 0j


def check_haar_invariance(
    G: DiscreteGroupoid, gamma, fiber_of_target: Sequence, fiber_of_source: Sequence
) -> Report:
    """Left translation by ``gamma`` as a bijection between truncated fibres.

    ``fiber_of_target`` is a finite part of ``l^{-1}(r(gamma))``;
    ``fiber_of_source`` a finite part of ``l^{-1}(l(gamma))`` large enough to
    contain every translate.  The counting measure is left invariant iff the
    translation is injective with inverse ``iota(gamma)``.
    """
    report = Report("haar")
    src, tgt = G.source(gamma), G.target(gamma)
    allowed = set(fiber_of_source)
    images = set()
    gi = G.inverse(gamma)
    for h in fiber_of_target:
        report.count("translates")
        if G.source(h) != tgt:
            report.fail("fiber_mismatch", (gamma, h))
            continue
        image = G.compose(gamma, h)
        if image is None or G.source(image) != src:
            report.fail("translate_source", (gamma, h))
            continue
        if image not in allowed:
            report.fail("translate_outside_fiber", (gamma, h, image))
        if image in images:
            report.fail("translate_not_injective", (gamma, h))
        images.add(image)
        if G.compose(gi, image) != h:
            report.fail("translate_not_invertible", (gamma, h))
    target_set = set(fiber_of_target)
    for k in allowed:
        back = G.compose(gi, k)
        if back in target_set and k not in images:
            report.fail("translate_not_surjective", (gamma, k))
    return report


class ActionArrow(NamedTuple):
    source: Any
    shift: tuple


def restricted_action_groupoid(
    contains: Callable[[Any], bool],
    act: Callable[[Any, tuple], Any],
    admissible: Optional[Callable[[Any, tuple], bool]] = None,
    *,
    arrow: Callable = ActionArrow,
    name: str = "action",
) -> DiscreteGroupoid:
    """Action groupoid of ``Z^n`` on a subset, cut down by an arrow predicate.

    Arrows are ``arrow(x, g)`` with ``l = x``, ``r = act(x, g)``,
    ``(x, g)(x.g, g') = (x, g + g')`` and ``(x, g)^{-1} = (x.g, -g)``.
    ``admissible`` must be closed under composition and inversion; violations
    surface through :func:`check_groupoid_axioms`.
    """

    def is_arrow(a) -> bool:
        x, g = a
        if not contains(x):
            return False
        if admissible is not None and not admissible(x, g):
            return False
        try:
            return contains(act(x, g))
        except (ValueError, OverflowError):
            return False

    def target(a):
        return act(a[0], a[1])

    def compose(a, b):
        if act(a[0], a[1]) != b[0]:
            return None
        shift = tuple(map(operator.add, a[1], b[1]))
        if shift and (max(shift) > INT64_MAX or min(shift) < INT64_MIN):
            raise OverflowError(f"shift {shift} outside the 64-bit range")
        return arrow(a[0], shift)

    def inverse(a):
        return arrow(act(a[0], a[1]), tuple(-p for p in a[1]))

    def unit(x):
        return arrow(x, (0,) * _dimension(x))

    return DiscreteGroupoid(
        is_unit=contains,
        is_arrow=is_arrow,
        source=lambda a: a[0],
        target=target,
        compose=compose,
        inverse=inverse,
        unit=unit,
        name=name,
    )


def _dimension(x) -> int:
    return len(x.coords) if hasattr(x, "coords") else len(x)


def translation_groupoid(n: int, contains: Optional[Callable] = None) -> DiscreteGroupoid:
    """``Zbar^n`` with the translation action of ``Z^n`` (INF fixed)."""

    def act(x, g):
        return tuple(ext_add(xi, gi) for xi, gi in zip(x, g))

    def default_contains(x):
        return len(x) == n and all(is_ext_int(v) for v in x)

    return restricted_action_groupoid(contains or default_contains, act, name=f"Zbar^{n}")


def close_enough(a: float, b: float, rel: float = 1e-12) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=rel)
