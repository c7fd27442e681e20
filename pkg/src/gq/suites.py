"""Verification suites behind ``gq verify``; each returns a JSON-ready report dict.

Report schema (all suites)::

    {"suite": str, "config": {...}, "passed": bool, "max_residual": float,
     "checks": [{"name", "passed", "residual", "tolerance", "counts",
                 "witnesses", "detail"}]}

``residual`` is ``null`` for checks without a numerical residual and for
negative controls (whose whole point is a large defect); ``max_residual``
ranges over the remaining checks.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import convolution as cv
from . import cpn, sheu
from .kernel import (
    Report,
    bilinear_cocycle,
    check_cocycle1,
    check_cocycle2,
    check_groupoid_axioms,
    composable_pairs,
    composable_triples,
)
from .poisson import lie, tensors

SUITES = ("groupoid", "sheu", "algebra", "poisson", "cross")


@dataclass(frozen=True)
class SuiteConfig:
    n: int = 2
    t: float = 0.5
    hbar: float = math.log(2.0)
    tol: float = 1e-12
    max_level: int = 2
    max_shift: int = 2
    samples: int = 100
    seed: Optional[int] = 0

    def params(self) -> cpn.Params:
        return cpn.Params(self.n, self.t, self.hbar, self.tol)


def _check(name, passed, residual=None, tolerance=None, counts=None, witnesses=(), detail=""):
    return {
        "name": name,
        "passed": bool(passed),
        "residual": None if residual is None else float(residual),
        "tolerance": tolerance,
        "counts": dict(counts or {}),
        "witnesses": [repr(w) for w in list(witnesses)[:10]],
        "detail": detail,
    }


def _from_report(name, report: Report, tolerance=None, residual=None):
    return _check(
        name,
        report.passed,
        residual,
        tolerance,
        report.checked,
        [(v.check,) + tuple(v.witness) for v in report.violations],
        "; ".join(sorted({v.detail for v in report.violations if v.detail}))[:500],
    )


def _finish(suite, config, checks, **extra):
    res = [c["residual"] for c in checks if c["residual"] is not None]
    out = {
        "suite": suite,
        "config": asdict(config),
        "passed": all(c["passed"] for c in checks),
        "max_residual": max(res, default=0.0),
        "checks": checks,
    }
    out.update(extra)
    return out


def _rng(config: SuiteConfig, stream: int = 0) -> np.random.Generator:
    seed = 0 if config.seed is None else config.seed
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(stream + 1)[stream])


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-300) if (a or b) else 0.0


# ------------------------------------------------------------ groupoid


def action_equivalence(params: cpn.Params, arrows, tol: float = 1e-12):
    """Integer target rule vs the real action formula with ``h = hbar * p``."""
    worst, bad = 0.0, []
    for a in arrows:
        direct = cpn.action_formula(params, cpn.c_values(params, a.source), [params.hbar * p for p in a.shift])
        rule = cpn.c_values(params, cpn.target(params, a))
        err = max((abs(x - y) for x, y in zip(direct, rule)), default=0.0)
        worst = max(worst, err)
        if err > tol:
            bad.append(a)
    return worst, bad


def measure_identity(params: cpn.Params, arrows, tol: float = 1e-12):
    """``mu(l) = exp(f_FS) mu(r)`` with relative tolerance; both sides vanish off the top stratum."""
    worst, bad = 0.0, []
    for a in arrows:
        _, D = cpn.modular_data(params, a)
        lhs = cpn.measure_mu(params, a.source)
        rhs = D * cpn.measure_mu(params, cpn.target(params, a))
        err = _rel(lhs, rhs)
        worst = max(worst, err)
        if err > tol:
            bad.append(a)
    return worst, bad


def psi_duality_report(params: cpn.Params, max_level: int, max_shift: int) -> Report:
    """psi_dual as an isomorphism G_bs(t) -> G_bs(1 - t) on a window."""
    dual = params.dual()
    G, H = cpn.structure_maps(params), cpn.structure_maps(dual)
    _, arrows = cpn.enumerate_window(params, max_level, max_shift)
    _, dual_arrows = cpn.enumerate_window(dual, max_level, max_shift)

    def back(h):
        return cpn.psi_dual(dual, h)

    report = sheu.verify_morphism(
        lambda g: cpn.psi_dual(params, g), G, H, arrows, inverse=back, expected_image=set(dual_arrows)
    )
    report.name = f"psi_dual[t={params.t}]"
    if abs(params.t - 0.5) <= params.tol:
        for g in arrows:
            report.count("involution")
            if cpn.psi_dual(params, cpn.psi_dual(params, g)) != g:
                report.fail("involutive", (g,))
    return report


def groupoid_suite(config: SuiteConfig) -> dict:
    params = config.params()
    G = cpn.structure_maps(params)
    start = time.perf_counter()
    units, arrows = cpn.enumerate_window(params, config.max_level, config.max_shift)
    checks = []
    checks.append(_from_report("axioms", check_groupoid_axioms(G, arrows)))
    worst, bad = action_equivalence(params, arrows)
    checks.append(_check("action_formula", not bad, worst, 1e-12, {"arrows": len(arrows)}, bad))
    pairs = composable_pairs(G, arrows)
    checks.append(
        _from_report(
            "modular_cocycle",
            check_cocycle1(G, lambda a: sum(a.shift), pairs),
        )
    )
    worst, bad = measure_identity(params, arrows)
    checks.append(_check("measure_identity", not bad, worst, 1e-12, {"arrows": len(arrows)}, bad))
    for k in range(1, params.n + 1):
        pred, P = cpn.pk_subgroupoid(params, k)
        sub = [a for a in arrows if pred(a.source)]
        rep = check_groupoid_axioms(P, sub) if sub else Report(f"P_{k}")
        for a in sub:
            if not pred(cpn.target(params, a)):
                rep.fail("closure", (a,))
        checks.append(_from_report(f"P_{k}_closure", rep))
    checks.append(_from_report("psi_duality", psi_duality_report(params, config.max_level, config.max_shift)))
    return _finish(
        "groupoid",
        config,
        checks,
        units=len(units),
        arrows=len(arrows),
        seconds=round(time.perf_counter() - start, 3),
    )


# ---------------------------------------------------------------- sheu


def sheu_reports(params: cpn.Params, max_level: int, max_shift: int) -> dict:
    """Every applicable isomorphism for these parameters, keyed by name."""
    G = cpn.structure_maps(params)
    out = {}
    n, t = params.n, params.t
    if t == 0.0:
        _, arrows = cpn.enumerate_window(params, max_level, max_shift)
        out["phi_standard"] = sheu.verify_morphism(
            lambda a: sheu.phi_standard(params, a),
            G,
            sheu.t_groupoid(n),
            arrows,
            inverse=lambda e: sheu.phi_standard_inverse(params, e),
            expected_image=sheu.t_window(n, max_level, max_shift),
        )
    if params.interior:
        if n == 1:
            _, arrows = cpn.enumerate_window(params, max_level, max_shift)
            out["phi_cp1"] = sheu.verify_morphism(
                lambda a: sheu.phi_cp1(params, a),
                G,
                sheu.g_groupoid(),
                arrows,
                inverse=lambda e: sheu.phi_cp1_inverse(params, e),
            )
        pred, P = cpn.pk_subgroupoid(params, n)
        _, arrows = cpn.enumerate_window(params, max_level, max_shift)
        arrows = [a for a in arrows if pred(a.source)]
        out["phi_spheres"] = sheu.verify_morphism(
            lambda a: sheu.phi_spheres(params, a),
            P,
            sheu.f_groupoid(n - 1),
            arrows,
            inverse=lambda e: sheu.phi_spheres_inverse(params, e),
        )
    return out


def sheu_suite(config: SuiteConfig) -> dict:
    params = config.params()
    reports = sheu_reports(params, config.max_level, config.max_shift)
    checks = [_from_report(name, rep) for name, rep in reports.items()]
    if not checks:
        checks.append(_check("applicable_maps", True, detail="no isomorphism applies at these parameters"))
    return _finish("sheu", config, checks)


# ------------------------------------------------------------- algebra


def algebra_checks(params: cpn.Params, arrows, rng, samples: int, *, max_support: int = 50, tol: float = 1e-12):
    G = cpn.structure_maps(params)
    checks = []

    def support():
        return int(rng.integers(1, max_support + 1))

    def mixed(size):
        a = cv.random_element(rng, arrows, size)
        b = cv.random_element(rng, arrows, size)
        return b + cv.involution(G, a).scale(complex(rng.standard_normal(), rng.standard_normal())), a

    f1 = lambda g: g.shift[0]
    f2 = lambda g: g.shift[-1]
    zeta = bilinear_cocycle(f1, f2, 0.37)
    bad_zeta = cv.square_cocycle(f1)
    assoc = star = twisted = 0.0
    bad_defect = 0.0
    assoc_bad, star_bad, tw_bad = [], [], []
    for _ in range(samples):
        a = cv.random_element(rng, arrows, support())
        b, a2 = mixed(support())
        c = cv.random_element(rng, arrows, support())
        ab = cv.convolve(G, a, b)
        e = cv.distance(cv.convolve(G, ab, c), cv.convolve(G, a, cv.convolve(G, b, c)))
        assoc = max(assoc, e)
        if e > tol:
            assoc_bad.append((a, b, c))
        s1 = cv.distance(cv.involution(G, cv.involution(G, a)), a)
        s2 = cv.distance(cv.involution(G, ab), cv.convolve(G, cv.involution(G, b), cv.involution(G, a)))
        star = max(star, s1, s2)
        if max(s1, s2) > tol:
            star_bad.append((a, b))
        e = cv.distance(
            cv.convolve(G, cv.convolve(G, a, b, zeta), c, zeta),
            cv.convolve(G, a, cv.convolve(G, b, c, zeta), zeta),
        )
        twisted = max(twisted, e)
        if e > tol:
            tw_bad.append((a, b, c))
        bad_defect = max(
            bad_defect,
            cv.distance(
                cv.convolve(G, cv.convolve(G, a, b, bad_zeta), c, bad_zeta),
                cv.convolve(G, a, cv.convolve(G, b, c, bad_zeta), bad_zeta),
            ),
        )
    counts = {"triples": samples}
    checks.append(_check("associativity", not assoc_bad, assoc, tol, counts, assoc_bad))
    checks.append(_check("star_identities", not star_bad, star, tol, counts, star_bad))
    checks.append(_check("twisted_associativity", not tw_bad, twisted, tol, counts, tw_bad))
    checks.append(
        _check(
            "invalid_cocycle_detected",
            bad_defect > 1e-6,
            None,
            None,
            counts,
            detail=f"square-phase twist breaks associativity, defect {bad_defect:.3e}",
        )
    )
    # the same two twists judged directly by the cocycle checker
    triples = composable_triples(G, arrows[: min(len(arrows), 200)])
    checks.append(_from_report("cocycle2_bilinear", check_cocycle2(G, zeta, triples), 1e-12))
    neg = check_cocycle2(G, bad_zeta, triples)
    checks.append(
        _check(
            "cocycle2_square_rejected",
            not neg.passed,
            None,
            None,
            neg.checked,
            detail=f"{len(neg.violations)} violations recorded as expected",
        )
    )

    mu = lambda x: cpn.measure_mu(params, x)
    f = cpn.modular_cocycle(params)
    kms, kms_bad, nonzero = 0.0, [], 0
    for _ in range(samples):
        b, a = mixed(support())
        r = cv.kms_check(G, a, b, mu, f)
        nonzero += abs(r.lhs) > 0
        err = r.residual / max(1.0, abs(r.lhs))
        kms = max(kms, err)
        if err > tol:
            kms_bad.append((a, b))
    checks.append(_check("kms", not kms_bad, kms, tol, {"pairs": samples, "nonzero_weights": nonzero}, kms_bad))

    for k in range(1, params.n + 1):
        pred, _ = cpn.pk_subgroupoid(params, k)
        inside = [g for g in arrows if pred(g.source)]
        outside = [g for g in arrows if not pred(g.source)]
        hom, ideal = 0.0, 0.0
        for _ in range(max(1, samples // 10)):
            b, a = mixed(support())
            lhs = cv.restrict(G, cv.convolve(G, a, b), pred)
            rhs = cv.convolve(G, cv.restrict(G, a, pred), cv.restrict(G, b, pred))
            star_r = cv.distance(cv.restrict(G, cv.involution(G, a), pred), cv.involution(G, cv.restrict(G, a, pred)))
            hom = max(hom, cv.distance(lhs, rhs), star_r)
            if outside:
                off = cv.random_element(rng, outside, support())
                ideal = max(
                    ideal,
                    max((abs(v) for v in cv.restrict(G, cv.convolve(G, off, b), pred).values()), default=0.0),
                    max((abs(v) for v in cv.restrict(G, cv.convolve(G, b, off), pred).values()), default=0.0),
                )
        checks.append(
            _check(
                f"restrict_P_{k}",
                hom <= tol and ideal == 0.0,
                max(hom, ideal),
                tol,
                {"inside": len(inside), "outside": len(outside)},
            )
        )
    return checks


def regular_rep_check(params: cpn.Params, rng, samples: int, max_level: int, tol: float = 1e-12):
    """Multiplicativity of the finite-window left regular representation at a top-stratum unit."""
    G = cpn.structure_maps(params)
    units = [u for u in cpn.enumerate_units(params, max_level) if all(c.branch != cpn.AT for c in u.coords)]
    if not units:
        return _check("regular_rep", True, detail="no top-stratum unit in window")
    x = units[len(units) // 2]
    lvl = lambda u: max(c.level for c in u.coords)
    window = [G.inverse(g) for g in cpn.fiber(params, x, 2 * max_level + 4) if lvl(G.target(g)) <= max_level]
    srcs = {G.source(w) for w in window}
    # arrows between window sources, w1 * w2^{-1}
    pool = sorted({G.compose(w1, G.inverse(w2)) for w1 in window for w2 in window}, key=repr)
    worst, closed_all = 0.0, True
    for _ in range(samples):
        a = cv.random_element(rng, pool, int(rng.integers(1, 6)))
        b = cv.random_element(rng, pool, int(rng.integers(1, 6)))
        ra, rb = cv.regular_rep(G, a, x, window), cv.regular_rep(G, b, x, window)
        rab = cv.regular_rep(G, cv.convolve(G, a, b), x, window)
        closed_all &= ra.closed and rb.closed and rab.closed
        worst = max(worst, float(np.abs(rab.matrix - ra.matrix @ rb.matrix).max()))
    ident = sum((cv.AlgebraElement.delta(G.unit(s)) for s in srcs), cv.AlgebraElement())
    eye = cv.regular_rep(G, ident, x, window)
    worst = max(worst, float(np.abs(eye.matrix - np.eye(len(window))).max()))
    return _check(
        "regular_rep",
        closed_all and worst <= tol,
        worst,
        tol,
        {"window": len(window), "samples": samples},
        detail="" if closed_all else "window closure violated",
    )


def algebra_suite(config: SuiteConfig) -> dict:
    params = config.params()
    _, arrows = cpn.enumerate_window(params, config.max_level, config.max_shift)
    rng = _rng(config, 1)
    checks = algebra_checks(params, arrows, rng, config.samples)
    checks.append(regular_rep_check(params, rng, max(1, config.samples // 10), config.max_level))
    return _finish("algebra", config, checks, arrows=len(arrows))


# -------------------------------------------------------------- poisson


def random_chart_point(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def poisson_checks(n: int, ts, samples: int, rng, *, t_ref: float = 0.7):
    """Identity suite at ``samples`` random points for each t; one point data per point serves every t."""
    tol = tensors.IDENTITY_TOLERANCES
    worst = {t: {} for t in ts}
    modular_drift, skipped = 0.0, 0
    for _ in range(samples):
        y = random_chart_point(rng, n)
        data = tensors.point_data(y)
        ref = tensors.modular_field(tensors.tensors_at(y, t_ref, data))
        for t in ts:
            r = tensors.identity_suite(y, t, data)
            skipped += r.skipped
            for k, v in r.residuals.items():
                worst[t][k] = max(worst[t].get(k, 0.0), v)
            modular_drift = max(
                modular_drift, float(np.abs(tensors.modular_field(tensors.tensors_at(y, t, data)) - ref).max())
            )
    checks = []
    for t in ts:
        for k, v in worst[t].items():
            checks.append(_check(f"t={t}:{k}", v <= tol[k], v, tol[k], {"points": samples}))
    checks.append(_check("modular_t_independent", modular_drift <= 1e-6, modular_drift, 1e-6, {"points": samples}))
    return checks, skipped


def su2_checks(ys):
    worst = [0.0, 0.0, 0.0, 0.0]
    kappa = None
    for y in ys:
        r = lie.su2_check(y)
        kappa = r.kappa
        worst = [max(w, v) for w, v in zip(worst, (r.residual, r.theta_residual, r.omega_residual, r.gram_residual))]
    return [
        _check("su2_tensor", worst[0] <= 1e-8, worst[0], 1e-8, {"points": len(ys)}, detail=f"normalisation {kappa:.12g}"),
        _check("su2_theta_independent", worst[1] <= 1e-8, worst[1], 1e-8),
        _check("su2_kirillov_form", worst[2] <= 1e-8, worst[2], 1e-8),
        _check("su2_dual_basis", worst[3] <= 1e-12, worst[3], 1e-12),
    ]


def poisson_suite(config: SuiteConfig) -> dict:
    rng = _rng(config, 2)
    checks, skipped = poisson_checks(config.n, (config.t,), config.samples, rng)
    ys = [0j, 10 + 0j] + [complex(v) for v in random_chart_point(rng, 8)]
    checks += su2_checks(ys)
    return _finish("poisson", config, checks, skipped_local_hamiltonian=skipped)


# ---------------------------------------------------------------- cross


def cross_checks(n: int, t: float, samples: int, rng, tol: float = 1e-8):
    worst = {"raction": 0.0, "reconstruction": 0.0, "iwasawa": 0.0, "cocycle": 0.0, "composed": 0.0}
    literal = 0.0
    invariance_bad, membership_bad = [], []
    for i in range(samples):
        k = 1 + i % n
        g = lie.block_su(rng, n, k) if i % 4 == 0 else lie.random_su(rng, n)
        xi = lie.random_xi(rng, n)
        r = lie.raction_crosscheck(g, xi, t, tol=tol)
        worst["raction"] = max(worst["raction"], r.residual)
        worst["reconstruction"] = max(worst["reconstruction"], r.reconstruction)
        literal = max(literal, r.literal_residual)
        if not r.invariance_ok or (i % 4 == 0 and abs(r.c_src[k - 1] - (1 - t)) > tol):
            invariance_bad.append(i)
        d = lie.random_sl(rng, n)
        for order in ("SU.SB", "SB.SU"):
            f1, f2 = lie.iwasawa(d, order)
            u, b = (f1, f2) if order == "SU.SB" else (f2, f1)
            worst["iwasawa"] = max(worst["iwasawa"], float(np.abs(f1 @ f2 - d).max()))
            if not (lie.is_su(u) and lie.is_sb(b)):
                membership_bad.append((i, order))
        g1, g2 = lie.random_sb(rng, n, 0.5), lie.random_sb(rng, n, 0.5)
        worst["cocycle"] = max(
            worst["cocycle"],
            float(np.abs(lie.momentum_h(g1 @ g2) - lie.momentum_h(g1) - lie.momentum_h(g2)).max()),
        )
        e1 = lie.build_element(g, xi, t)
        e2 = lie.build_element(e1.u0, lie.random_xi(rng, n), t)
        e12 = lie.compose_elements(e1, e2)
        h = lie.tensor_normalization() * lie.momentum_h(e12.gamma)
        lhs = lie.momentum_c(e12.u0, t)
        rhs = lie.action_formula(lie.momentum_c(g, t), h, t)
        worst["composed"] = max(
            worst["composed"],
            float(np.abs(lhs - rhs).max()),
            float(np.abs(g @ e12.gamma - e12.lam @ e12.u0).max()),
        )
    counts = {"samples": samples}
    return [
        _check("raction", worst["raction"] <= tol, worst["raction"], tol, counts,
               detail=f"unnormalised cocycle residual {literal:.3e}"),
        _check("P_k_invariance", not invariance_bad, None, tol, counts, invariance_bad),
        _check("element_reconstruction", worst["reconstruction"] <= 1e-10, worst["reconstruction"], 1e-10, counts),
        _check("iwasawa", worst["iwasawa"] <= 1e-10 and not membership_bad, worst["iwasawa"], 1e-10, counts, membership_bad),
        _check("sb_cocycle_additive", worst["cocycle"] <= 1e-10, worst["cocycle"], 1e-10, counts),
        _check("composed_element", worst["composed"] <= tol, worst["composed"], tol, counts),
    ]


def cross_suite(config: SuiteConfig) -> dict:
    rng = _rng(config, 3)
    return _finish("cross", config, cross_checks(config.n, config.t, config.samples, rng))


# ------------------------------------------------------------------ all

_RUNNERS = {
    "groupoid": groupoid_suite,
    "sheu": sheu_suite,
    "algebra": algebra_suite,
    "poisson": poisson_suite,
    "cross": cross_suite,
}


def run_suite(name: str, config: SuiteConfig) -> dict:
    if name == "all":
        parts = [(s, _RUNNERS[s](config)) for s in SUITES]
        checks = [dict(c, name=f"{s}.{c['name']}") for s, rep in parts for c in rep["checks"]]
        return _finish("all", config, checks)
    try:
        runner = _RUNNERS[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}") from None
    return runner(config)
