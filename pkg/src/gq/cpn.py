"""Bohr-Sommerfeld groupoid of the Poisson pencil on CP_n.

Units are points of the lattice Delta_n^Z(t): each coordinate
``c_k = 1 - t -/+ exp(-hbar m)`` is stored as a branch-tagged level, so
membership, composition and the shift constraints are exact integer
statements.  Real coordinates are derived views.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Optional

import numpy as np

from .kernel import BatchOps, DiscreteGroupoid, check_int64, restricted_action_groupoid

BELOW, AT, ABOVE = -1, 0, 1
_BRANCH_NAMES = {BELOW: "Below", AT: "At", ABOVE: "Above"}


class InvalidUnitError(ValueError):
    pass


class InvalidArrowError(ValueError):
    pass


class Coord(NamedTuple):
    """One lattice coordinate: ``Below(m)``, ``At`` or ``Above(m)``."""

    branch: int
    level: Optional[int] = None

    def __repr__(self):
        if self.branch == AT:
            return "At"
        return f"{_BRANCH_NAMES[self.branch]}({self.level})"


def Below(m: int) -> Coord:
    return Coord(BELOW, check_int64(int(m)))


def Above(m: int) -> Coord:
    return Coord(ABOVE, check_int64(int(m)))


At = Coord(AT, None)


class UnitLeaf(NamedTuple):
    coords: tuple


class ArrowLeaf(NamedTuple):
    source: UnitLeaf
    shift: tuple


class StratumLabel(NamedTuple):
    r: int
    s: int


def _threshold(x: float, tol: float) -> int:
    nearest = round(x)
    if abs(x - nearest) <= tol:
        return int(nearest)
    return math.ceil(x)


@dataclass(frozen=True)
class Params:
    """Lattice parameters: dimension ``n``, pencil parameter ``t``, ``hbar``.

    ``tol`` is the tie tolerance for the level thresholds.
    """

    n: int
    t: float
    hbar: float
    tol: float = 1e-12

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"t must lie in [0, 1], got {self.t!r}")
        if not self.hbar > 0.0:
            raise ValueError(f"hbar must be positive, got {self.hbar!r}")
        if not self.tol > 0.0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")

    @functools.cached_property
    def m_min_below(self) -> Optional[int]:
        """Smallest level with ``hbar m >= -log(1 - t)``; None at t = 1."""
        if self.t >= 1.0:
            return None
        return _threshold(-math.log1p(-self.t) / self.hbar, self.tol)

    @functools.cached_property
    def m_min_above(self) -> Optional[int]:
        """Smallest level with ``hbar m >= -log(t)``; None at t = 0."""
        if self.t <= 0.0:
            return None
        return _threshold(-math.log(self.t) / self.hbar, self.tol)

    @property
    def interior(self) -> bool:
        return 0.0 < self.t < 1.0

    def dual(self) -> "Params":
        return replace(self, t=1.0 - self.t)


# ---------------------------------------------------------------- validation


def unit_errors(params: Params, unit: UnitLeaf) -> list:
    coords = unit.coords
    errors = []
    if len(coords) != params.n:
        return [f"expected {params.n} coordinates, got {len(coords)}"]
    for k, c in enumerate(coords):
        if not isinstance(c, Coord) or c.branch not in _BRANCH_NAMES:
            errors.append(f"coordinate {k + 1} is not a branch coordinate: {c!r}")
            continue
        if c.branch == AT:
            if c.level is not None:
                errors.append(f"coordinate {k + 1}: At carries no level")
            continue
        if not isinstance(c.level, int):
            errors.append(f"coordinate {k + 1}: level must be an integer")
            continue
        bound = params.m_min_below if c.branch == BELOW else params.m_min_above
        if bound is None:
            errors.append(f"coordinate {k + 1}: {c!r} impossible at t={params.t}")
        elif c.level < bound:
            errors.append(f"coordinate {k + 1}: {c!r} below threshold {bound}")
    if errors:
        return errors
    for k in range(params.n - 1):
        a, b = coords[k], coords[k + 1]
        if a.branch > b.branch:
            errors.append(f"block order violated at {k + 1}: {a!r} before {b!r}")
        elif a.branch == b.branch == BELOW and a.level > b.level:
            errors.append(f"Below levels must be nondecreasing at {k + 1}")
        elif a.branch == b.branch == ABOVE and a.level < b.level:
            errors.append(f"Above levels must be nonincreasing at {k + 1}")
    return errors


def is_valid_unit(params: Params, unit) -> bool:
    return isinstance(unit, UnitLeaf) and not unit_errors(params, unit)


def make_unit(params: Params, coords: Iterable[Coord]) -> UnitLeaf:
    unit = UnitLeaf(tuple(coords))
    errors = unit_errors(params, unit)
    if errors:
        raise InvalidUnitError("; ".join(errors))
    return unit


@functools.lru_cache(maxsize=65536)
def at_block(unit: UnitLeaf) -> range:
    idx = [k for k, c in enumerate(unit.coords) if c.branch == AT]
    return range(idx[0], idx[-1] + 1) if idx else range(0)


def _shift_unit(unit: UnitLeaf, shift) -> UnitLeaf:
    return UnitLeaf(
        tuple(
            c if c.branch == AT else Coord(c.branch, check_int64(c.level + p))
            for c, p in zip(unit.coords, shift)
        )
    )


def shift_admissible(params: Params, unit: UnitLeaf, shift) -> bool:
    """At-block rule: constant shift inside the block for t in (0,1), zero at t in {0,1}."""
    block = [shift[k] for k in at_block(unit)]
    if not block:
        return True
    if params.interior:
        return all(p == block[0] for p in block)
    return all(p == 0 for p in block)


def arrow_errors(params: Params, arrow) -> list:
    if not isinstance(arrow, ArrowLeaf):
        return [f"not an arrow: {arrow!r}"]
    errors = unit_errors(params, arrow.source)
    if errors:
        return ["source: " + e for e in errors]
    shift = arrow.shift
    if len(shift) != params.n or not all(
        isinstance(p, int) and not isinstance(p, bool) for p in shift
    ):
        return [f"shift must be {params.n} integers, got {shift!r}"]
    if not shift_admissible(params, arrow.source, shift):
        errors.append(f"shift {shift} violates the At-block rule")
    errors.extend("target: " + e for e in unit_errors(params, _shift_unit(arrow.source, shift)))
    return errors


def is_valid_arrow(params: Params, arrow) -> bool:
    return not arrow_errors(params, arrow)


def make_arrow(params: Params, source: UnitLeaf, shift) -> ArrowLeaf:
    arrow = ArrowLeaf(source, tuple(int(p) for p in shift))
    errors = arrow_errors(params, arrow)
    if errors:
        raise InvalidArrowError("; ".join(errors))
    return arrow


# ------------------------------------------------------------ real coordinates


def coord_value(params: Params, c: Coord) -> float:
    base = 1.0 - params.t
    if c.branch == AT:
        return base
    gap = math.exp(-params.hbar * c.level)
    return base - gap if c.branch == BELOW else base + gap


def c_values(params: Params, unit: UnitLeaf) -> tuple:
    return tuple(coord_value(params, c) for c in unit.coords)


def target(params: Params, arrow: ArrowLeaf) -> UnitLeaf:
    return _shift_unit(arrow.source, arrow.shift)


def action_formula(params: Params, c: Iterable[float], h: Iterable[float]) -> tuple:
    """Real R^n-action ``r(c, h)_i = 1 - t + exp(-h_i)(c_i + t - 1)``."""
    t = params.t
    return tuple(1.0 - t + math.exp(-hi) * (ci + t - 1.0) for ci, hi in zip(c, h))


def stratum(unit: UnitLeaf) -> StratumLabel:
    r = sum(1 for c in unit.coords if c.branch == BELOW)
    s = sum(1 for c in unit.coords if c.branch == ABOVE)
    return StratumLabel(r, s)


def modular_data(params: Params, arrow: ArrowLeaf) -> tuple:
    """Modular cocycle ``f_FS = hbar * sum(p)`` and ``D = exp(f_FS)``."""
    f = params.hbar * sum(arrow.shift)
    return f, math.exp(f)


def modular_cocycle(params: Params):
    return lambda arrow: params.hbar * sum(arrow.shift)


def measure_mu(params: Params, unit: UnitLeaf) -> float:
    """Quasi-invariant measure ``prod_k |c_k - 1 + t|``; zero off the maximal stratum."""
    if any(c.branch == AT for c in unit.coords):
        return 0.0
    return math.exp(-params.hbar * sum(c.level for c in unit.coords))


# ------------------------------------------------------------------ groupoid


def structure_maps(params: Params) -> DiscreteGroupoid:
    n = params.n

    @functools.lru_cache(maxsize=None)
    def unit_ok(u) -> bool:
        return is_valid_unit(params, u)

    act = functools.lru_cache(maxsize=None)(_shift_unit)

    @functools.lru_cache(maxsize=None)
    def is_arrow(a) -> bool:
        if not isinstance(a, ArrowLeaf) or not unit_ok(a.source):
            return False
        shift = a.shift
        if len(shift) != n or not all(type(p) is int for p in shift):
            return False
        if not shift_admissible(params, a.source, shift):
            return False
        try:
            return unit_ok(act(a.source, shift))
        except OverflowError:
            return False

    G = restricted_action_groupoid(
        contains=unit_ok,
        act=act,
        arrow=ArrowLeaf,
        name=f"G_bs(n={n},t={params.t})",
    )
    return replace(
        G,
        is_arrow=is_arrow,
        fiber=lambda unit, max_shift: fiber(params, unit, max_shift),
        batch=_batch_ops(n),
    )


def _batch_ops(n: int) -> BatchOps:
    # Row layout: [branch_1..n | level_1..n | shift_1..n], level 0 on At.
    @functools.lru_cache(maxsize=None)
    def unit_row(u):
        return tuple(c.branch for c in u.coords) + tuple(
            0 if c.level is None else c.level for c in u.coords
        )

    def encode(a):
        return unit_row(a.source) + a.shift

    def source(rows):
        return rows[..., : 2 * n]

    def target(rows):
        branch = rows[..., :n]
        moved = rows[..., n : 2 * n] + rows[..., 2 * n :] * (branch != 0)
        return np.concatenate([branch, moved], axis=-1)

    def compose(r1, r2):
        shape = np.broadcast_shapes(r1.shape, r2.shape)
        out = np.empty(shape, dtype=np.result_type(r1, r2))
        out[..., : 2 * n] = r1[..., : 2 * n]
        np.add(r1[..., 2 * n :], r2[..., 2 * n :], out=out[..., 2 * n :])
        return out

    return BatchOps(encode=encode, source=source, target=target, compose=compose)


def _levels(lo: int, hi: int, k: int, increasing: bool) -> list:
    if k == 0:
        return [()]
    if hi < lo:
        return []
    combos = list(itertools.combinations_with_replacement(range(lo, hi + 1), k))
    return combos if increasing else [tuple(reversed(c)) for c in combos]


def _sort_key(unit: UnitLeaf):
    return tuple((c.branch, c.level if c.level is not None else 0) for c in unit.coords)


def enumerate_units(params: Params, max_level: int) -> list:
    n = params.n
    lo_b, lo_a = params.m_min_below, params.m_min_above
    units = []
    for r in range(n + 1):
        if r and lo_b is None:
            continue
        for s in range(n - r + 1):
            if s and lo_a is None:
                continue
            below = _levels(lo_b, max_level, r, True) if r else [()]
            above = _levels(lo_a, max_level, s, False) if s else [()]
            middle = (At,) * (n - r - s)
            for bl in below:
                for ab in above:
                    units.append(
                        UnitLeaf(tuple(Below(m) for m in bl) + middle + tuple(Above(m) for m in ab))
                    )
    units.sort(key=_sort_key)
    return units


def _pattern(unit: UnitLeaf) -> tuple:
    return tuple(c.branch for c in unit.coords)


def _at_shifts(params: Params, unit: UnitLeaf, max_shift: int) -> list:
    if not len(at_block(unit)):
        return [0]
    return list(range(-max_shift, max_shift + 1)) if params.interior else [0]


def enumerate_window(params: Params, max_level: int, max_shift: int) -> tuple:
    """All units with finite levels <= max_level and all arrows among them with |p_i| <= max_shift."""
    units = enumerate_units(params, max_level)
    by_pattern = {}
    for u in units:
        by_pattern.setdefault(_pattern(u), []).append(u)
    arrows = []
    for u in units:
        block = at_block(u)
        for v in by_pattern[_pattern(u)]:
            base = [
                0 if a.branch == AT else b.level - a.level for a, b in zip(u.coords, v.coords)
            ]
            if any(abs(p) > max_shift for p in base):
                continue
            for s in _at_shifts(params, u, max_shift):
                shift = list(base)
                for k in block:
                    shift[k] = s
                arrows.append(ArrowLeaf(u, tuple(shift)))
    arrows.sort(key=lambda a: (_sort_key(a.source), a.shift))
    return units, arrows


def fiber(params: Params, unit: UnitLeaf, max_shift: int) -> list:
    """Arrows with source ``unit`` and ``|p_i| <= max_shift`` (no level bound on targets)."""
    block = set(at_block(unit))
    finite = [k for k in range(params.n) if k not in block]
    out = []
    for free in itertools.product(range(-max_shift, max_shift + 1), repeat=len(finite)):
        for s in _at_shifts(params, unit, max_shift):
            shift = [s] * params.n
            for k, p in zip(finite, free):
                shift[k] = p
            arrow = ArrowLeaf(unit, tuple(shift))
            if is_valid_arrow(params, arrow):
                out.append(arrow)
    return out


def pk_predicate(k: int):
    return lambda unit: unit.coords[k - 1].branch == AT


def pk_subgroupoid(params: Params, k: int) -> tuple:
    """Restriction to ``c_k = 1 - t`` (coordinate k is At); returns (predicate, groupoid)."""
    if not 1 <= k <= params.n:
        raise ValueError(f"k must lie in 1..{params.n}, got {k}")
    pred = pk_predicate(k)
    G = structure_maps(params)
    return pred, replace(
        G,
        is_unit=lambda u: G.is_unit(u) and pred(u),
        is_arrow=lambda a: G.is_arrow(a) and pred(a.source),
        name=f"P_{k}({params.t})",
    )


def _swap(c: Coord) -> Coord:
    return Coord(-c.branch, c.level)


def psi_unit(unit: UnitLeaf) -> UnitLeaf:
    return UnitLeaf(tuple(_swap(c) for c in reversed(unit.coords)))


def psi_dual(params: Params, arrow: ArrowLeaf) -> ArrowLeaf:
    """Arrow of G_bs(t) to the matching arrow of G_bs(1 - t)."""
    return ArrowLeaf(psi_unit(arrow.source), tuple(reversed(arrow.shift)))


# ----------------------------------------------------------------------- JSON


def unit_to_json(unit: UnitLeaf) -> dict:
    coords = []
    for c in unit.coords:
        if c.branch == AT:
            coords.append({"b": "at"})
        else:
            coords.append({"b": "lo" if c.branch == BELOW else "hi", "m": c.level})
    return {"coords": coords}


def unit_from_json(obj) -> UnitLeaf:
    coords = []
    for entry in obj["coords"]:
        b = entry["b"]
        if b == "at":
            coords.append(At)
        elif b in ("lo", "hi"):
            m = entry["m"]
            if not isinstance(m, int) or isinstance(m, bool):
                raise ValueError(f"level must be an integer, got {m!r}")
            coords.append(Below(m) if b == "lo" else Above(m))
        else:
            raise ValueError(f"unknown branch tag {b!r}")
    return UnitLeaf(tuple(coords))


def arrow_to_json(arrow: ArrowLeaf) -> dict:
    return {"src": unit_to_json(arrow.source), "p": list(arrow.shift)}


def arrow_from_json(obj) -> ArrowLeaf:
    p = obj["p"]
    if not all(isinstance(v, int) and not isinstance(v, bool) for v in p):
        raise ValueError(f"shift must be integers, got {p!r}")
    return ArrowLeaf(unit_from_json(obj["src"]), tuple(p))


def params_to_json(params: Params) -> dict:
    return {"n": params.n, "t": params.t, "hbar": params.hbar, "tol": params.tol}


def params_from_json(obj) -> Params:
    return Params(int(obj["n"]), float(obj["t"]), float(obj["hbar"]), float(obj.get("tol", 1e-12)))
