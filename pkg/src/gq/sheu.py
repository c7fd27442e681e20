"""Sheu's groupoids T_n, G and F_{n-1}, and the isomorphisms from BS groupoids.

All three are restricted translation groupoids on extended integers.  An
element ``(j; k)`` has source ``k`` and target ``k + j`` (INF is fixed by
translation).  Quotient classes are stored in canonical form: every
coordinate after the first INF of the base point is INF.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, NamedTuple, Optional

from .cpn import (
    AT,
    BELOW,
    Above,
    ArrowLeaf,
    At,
    Below,
    Params,
    UnitLeaf,
    make_arrow,
    pk_predicate,
)
from .kernel import INF, DiscreteGroupoid, Report, ext_add, is_ext_int


class DomainError(ValueError):
    pass


class SheuTElement(NamedTuple):
    j: tuple
    k: tuple


class SheuGElement(NamedTuple):
    j: int
    k1: object
    k2: object


class SheuFElement(NamedTuple):
    z: int
    x: tuple
    w: tuple


def canonical(k: Iterable) -> tuple:
    """Erase every coordinate after the first INF."""
    out, hit = [], False
    for v in k:
        hit = hit or v is INF
        out.append(INF if hit else v)
    return tuple(out)


def _finite_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _in_nbar(v) -> bool:
    return v is INF or (_finite_int(v) and v >= 0)


def _translate(k: tuple, j: tuple) -> tuple:
    return tuple(ext_add(a, b) for a, b in zip(k, j))


# ------------------------------------------------------------------ T_n


def t_member(e) -> bool:
    """``(j;k)`` lies in the restricted quotient groupoid T_n (canonical form)."""
    if not isinstance(e, SheuTElement) or len(e.j) != len(e.k):
        return False
    if not all(_finite_int(v) for v in e.j) or not all(is_ext_int(v) for v in e.k):
        return False
    if canonical(e.k) != e.k:
        return False
    for jj, kk in zip(e.j, e.k):
        if not _in_nbar(kk) or not _in_nbar(ext_add(kk, jj)):
            return False
    for i, kk in enumerate(e.k):
        if kk is INF:
            if sum(e.j[: i + 1]) != 0 or any(e.j[i + 1 :]):
                return False
            break
    return True


def t_groupoid(n: int) -> DiscreteGroupoid:
    def compose(a, b):
        if _translate(a.k, a.j) != b.k:
            return None
        return SheuTElement(tuple(x + y for x, y in zip(a.j, b.j)), a.k)

    return DiscreteGroupoid(
        is_unit=lambda k: len(k) == n and canonical(k) == k and all(_in_nbar(v) for v in k),
        is_arrow=lambda e: len(e.j) == n and t_member(e),
        source=lambda e: e.k,
        target=lambda e: _translate(e.k, e.j),
        compose=compose,
        inverse=lambda e: SheuTElement(tuple(-v for v in e.j), _translate(e.k, e.j)),
        unit=lambda k: SheuTElement((0,) * len(k), k),
        name=f"T_{n}",
    )


def _levels(unit: UnitLeaf) -> list:
    return [INF if c.branch == AT else c.level for c in unit.coords]


def _differences(seq: list) -> list:
    """``(a_1, a_2 - a_1, ...)``; entries past the first INF become INF."""
    out, prev = [], 0
    for v in seq:
        if v is INF or prev is INF:
            out.append(INF)
        else:
            out.append(v - prev)
        prev = v
    return out


def _partial_sums(seq: Iterable, start=0) -> list:
    out, acc = [], start
    for v in seq:
        acc = INF if (acc is INF or v is INF) else acc + v
        out.append(acc)
    return out


def phi_standard(params: Params, arrow: ArrowLeaf) -> SheuTElement:
    """``(q, p) -> (p_1, p_2 - p_1, ...; q_1, q_2 - q_1, ...)``, t = 0 only."""
    if params.t != 0.0:
        raise DomainError("phi_standard is defined for t = 0 only")
    q = _levels(arrow.source)
    return SheuTElement(tuple(_differences(list(arrow.shift))), canonical(_differences(q)))


def phi_standard_inverse(params: Params, e: SheuTElement) -> ArrowLeaf:
    if params.t != 0.0:
        raise DomainError("phi_standard is defined for t = 0 only")
    q = _partial_sums(e.k)
    p = _partial_sums(e.j)
    coords = [At if v is INF else Below(v) for v in q]
    return make_arrow(params, UnitLeaf(tuple(coords)), p)


def t_window(n: int, max_level: int, max_shift: int) -> set:
    """In-window part of T_n, enumerated straight from the membership rule.

    Window: base and translated base have partial sums ``<= max_level`` and
    the partial sums of ``j`` are bounded by ``max_shift``.
    """
    out = set()
    ks = []
    for first_inf in range(n + 1):
        for head in itertools.product(range(max_level + 1), repeat=first_inf):
            ks.append(tuple(head) + (INF,) * (n - first_inf))
    span = range(-2 * max_shift, 2 * max_shift + 1)
    for k in ks:
        for j in itertools.product(span, repeat=n):
            e = SheuTElement(tuple(j), k)
            if not t_member(e):
                continue
            if any(abs(v) > max_shift for v in _partial_sums(j)):
                continue
            tgt = _translate(k, j)
            if any(v is not INF and v > max_level for v in _partial_sums(k)):
                continue
            if any(v is not INF and v > max_level for v in _partial_sums(tgt)):
                continue
            out.add(e)
    return out


# -------------------------------------------------------------------- G


def g_member(e) -> bool:
    if not isinstance(e, SheuGElement) or not _finite_int(e.j):
        return False
    if not (is_ext_int(e.k1) and is_ext_int(e.k2)):
        return False
    if e.k1 is not INF and e.k2 is not INF:
        return False
    return all(_in_nbar(v) and _in_nbar(ext_add(v, e.j)) for v in (e.k1, e.k2))


def g_groupoid() -> DiscreteGroupoid:
    def compose(a, b):
        if (ext_add(a.k1, a.j), ext_add(a.k2, a.j)) != (b.k1, b.k2):
            return None
        return SheuGElement(a.j + b.j, a.k1, a.k2)

    return DiscreteGroupoid(
        is_unit=lambda k: len(k) == 2 and INF in k and all(_in_nbar(v) for v in k),
        is_arrow=g_member,
        source=lambda e: (e.k1, e.k2),
        target=lambda e: (ext_add(e.k1, e.j), ext_add(e.k2, e.j)),
        compose=compose,
        inverse=lambda e: SheuGElement(-e.j, ext_add(e.k1, e.j), ext_add(e.k2, e.j)),
        unit=lambda k: SheuGElement(0, k[0], k[1]),
        name="G",
    )


def _interior(params: Params, name: str) -> None:
    if not params.interior:
        raise DomainError(f"{name} needs 0 < t < 1, got t={params.t}")


def phi_cp1(params: Params, arrow: ArrowLeaf) -> SheuGElement:
    """Component-wise shift by the smallest admissible level."""
    if params.n != 1:
        raise DomainError("phi_cp1 is defined for n = 1 only")
    _interior(params, "phi_cp1")
    (c,), (p,) = arrow.source.coords, arrow.shift
    if c.branch == BELOW:
        return SheuGElement(p, INF, c.level - params.m_min_below)
    if c.branch == AT:
        return SheuGElement(p, INF, INF)
    return SheuGElement(p, c.level - params.m_min_above, INF)


def phi_cp1_inverse(params: Params, e: SheuGElement) -> ArrowLeaf:
    if params.n != 1:
        raise DomainError("phi_cp1 is defined for n = 1 only")
    _interior(params, "phi_cp1")
    if e.k1 is INF and e.k2 is INF:
        coord = At
    elif e.k1 is INF:
        coord = Below(e.k2 + params.m_min_below)
    else:
        coord = Above(e.k1 + params.m_min_above)
    return make_arrow(params, UnitLeaf((coord,)), (e.j,))


# -------------------------------------------------------------------- F


def f_member(e) -> bool:
    if not isinstance(e, SheuFElement) or len(e.x) != len(e.w) or not _finite_int(e.z):
        return False
    if not all(_finite_int(v) for v in e.x) or not all(is_ext_int(v) for v in e.w):
        return False
    if canonical(e.w) != e.w:
        return False
    for xx, ww in zip(e.x, e.w):
        if not _in_nbar(ww) or not _in_nbar(ext_add(ww, xx)):
            return False
    for i, ww in enumerate(e.w):
        if ww is INF:
            if e.z != -sum(e.x) or any(e.x[i + 1 :]):
                return False
            break
    return True


def f_groupoid(m: int) -> DiscreteGroupoid:
    """F_m: ``Z`` acting trivially times ``Z^m`` translating ``Nbar^m``."""

    def compose(a, b):
        if _translate(a.w, a.x) != b.w:
            return None
        return SheuFElement(a.z + b.z, tuple(u + v for u, v in zip(a.x, b.x)), a.w)

    return DiscreteGroupoid(
        is_unit=lambda w: len(w) == m and canonical(w) == w and all(_in_nbar(v) for v in w),
        is_arrow=lambda e: len(e.w) == m and f_member(e),
        source=lambda e: e.w,
        target=lambda e: _translate(e.w, e.x),
        compose=compose,
        inverse=lambda e: SheuFElement(-e.z, tuple(-v for v in e.x), _translate(e.w, e.x)),
        unit=lambda w: SheuFElement(0, (0,) * len(w), w),
        name=f"F_{m}",
    )


def phi_spheres(params: Params, arrow: ArrowLeaf) -> SheuFElement:
    """``(-p_n; p_1, p_2 - p_1, ...; q_1 - q_b, q_2 - q_1, ...)`` on P_n(t)."""
    _interior(params, "phi_spheres")
    if not pk_predicate(params.n)(arrow.source):
        raise DomainError("arrow is not in P_n(t): last coordinate must be At")
    n = params.n
    q = _levels(arrow.source)[: n - 1]
    p = list(arrow.shift)
    w = _differences(q)
    if w and w[0] is not INF:
        w[0] = w[0] - params.m_min_below
    return SheuFElement(-p[-1], tuple(_differences(p[: n - 1])), canonical(w))


def phi_spheres_inverse(params: Params, e: SheuFElement) -> ArrowLeaf:
    _interior(params, "phi_spheres")
    q = _partial_sums(e.w, params.m_min_below)
    p = _partial_sums(e.x) + [-e.z]
    coords = [At if v is INF else Below(v) for v in q] + [At]
    return make_arrow(params, UnitLeaf(tuple(coords)), p)


# ---------------------------------------------------------------- verifier


def verify_morphism(
    phi: Callable,
    G: DiscreteGroupoid,
    H: DiscreteGroupoid,
    window: Iterable,
    *,
    inverse: Optional[Callable] = None,
    expected_image: Optional[set] = None,
    max_violations: int = 50,
) -> Report:
    """Check that ``phi`` is an injective groupoid morphism on ``window``.

    ``inverse`` adds a round-trip check; ``expected_image`` (an independently
    enumerated set of H-arrows) adds a surjectivity check.
    """
    arrows = list(dict.fromkeys(window))
    report = Report(f"morphism[{G.name}->{H.name}]")

    def fail(check, witness, detail=""):
        if len(report.violations) < max_violations:
            report.fail(check, witness, detail)

    def image(g):
        try:
            return phi(g)
        except (ValueError, OverflowError) as exc:
            fail("map_undefined", (g,), str(exc))
            return None

    images = {}
    for g in arrows:
        report.count("arrows")
        h = image(g)
        if h is None:
            continue
        images[g] = h
        if not H.is_arrow(h):
            fail("image_membership", (g, h))
            continue
        for x, end in ((G.source(g), H.source), (G.target(g), H.target)):
            hu = image(G.unit(x))
            if hu is None:
                continue
            if not H.is_unit_arrow(hu):
                fail("unit_to_unit", (x, hu))
            elif H.source(hu) != end(h):
                fail("endpoints_intertwined", (g, h))
        gi = image(G.inverse(g))
        if gi is not None and gi != H.inverse(h):
            fail("inverse_preserved", (g, h, gi))
        if inverse is not None:
            try:
                back = inverse(h)
            except (ValueError, OverflowError) as exc:
                fail("round_trip", (g, h), str(exc))
            else:
                if back != g:
                    fail("round_trip", (g, h, back))

    seen = {}
    for g, h in images.items():
        if h in seen:
            fail("injectivity", (seen[h], g, h))
        seen[h] = g

    by_source = {}
    for g in arrows:
        by_source.setdefault(G.source(g), []).append(g)
    for g1 in arrows:
        for g2 in by_source.get(G.target(g1), ()):
            report.count("pairs")
            h1, h2 = images.get(g1), images.get(g2)
            if h1 is None or h2 is None:
                continue
            g12 = G.compose(g1, g2)
            lhs = image(g12)
            rhs = H.compose(h1, h2)
            if lhs is None or lhs != rhs:
                fail("composition_preserved", (g1, g2), f"{lhs!r} != {rhs!r}")

    if expected_image is not None:
        report.count("expected_image", len(expected_image))
        got = set(images.values())
        for h in sorted(expected_image - got, key=repr):
            fail("surjectivity", (h,))
        for h in sorted(got - expected_image, key=repr):
            fail("image_outside_window", (h,))
    return report


def identity_map(g):
    return g


# ---------------------------------------------------------------------- JSON


def _ext_json(v):
    return "inf" if v is INF else v


def _ext_from(v):
    if v == "inf":
        return INF
    if not _finite_int(v):
        raise ValueError(f"expected integer or 'inf', got {v!r}")
    return v


def element_to_json(e) -> dict:
    if isinstance(e, SheuTElement):
        return {"j": list(e.j), "k": [_ext_json(v) for v in e.k]}
    if isinstance(e, SheuGElement):
        return {"j": e.j, "k1": _ext_json(e.k1), "k2": _ext_json(e.k2)}
    if isinstance(e, SheuFElement):
        return {"z": e.z, "x": list(e.x), "w": [_ext_json(v) for v in e.w]}
    raise TypeError(f"not a Sheu element: {e!r}")


def element_from_json(obj):
    if "z" in obj:
        return SheuFElement(obj["z"], tuple(obj["x"]), tuple(_ext_from(v) for v in obj["w"]))
    if "k1" in obj:
        return SheuGElement(obj["j"], _ext_from(obj["k1"]), _ext_from(obj["k2"]))
    return SheuTElement(tuple(obj["j"]), tuple(_ext_from(v) for v in obj["k"]))
