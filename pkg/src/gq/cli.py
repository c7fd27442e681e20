"""``gq`` command line: enumerate, verify, convolve.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

from . import convolution as cv
from . import cpn
from .kernel import bilinear_cocycle, trivial_cocycle
from .suites import SUITES, SuiteConfig, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
RANDOMIZED = {"algebra", "poisson", "cross", "all"}


class UsageError(Exception):
    pass


def parse_hbar(text: str) -> float:
    if text.strip().lower() == "ln2":
        return math.log(2.0)
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"hbar must be a positive number or 'ln2', got {text!r}")
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"hbar must be a positive number, got {text!r}")
    return v


def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text!r}")
    return v


def _add_params(p, *, n_required=True, t_required=True):
    p.add_argument("--n", type=int, required=n_required, default=None if n_required else 2)
    p.add_argument("--t", type=float, required=t_required, default=None if t_required else 0.5)
    p.add_argument("--hbar", type=parse_hbar, default=math.log(2.0), help="decimal or 'ln2' (default)")
    p.add_argument("--tol", type=float, default=1e-12)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gq", description="Bohr-Sommerfeld groupoids of CP_n")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", help="list Bohr-Sommerfeld units (and optionally arrows) in a window")
    _add_params(p)
    p.add_argument("--max-level", type=_nonneg, default=2)
    p.add_argument("--max-shift", type=_nonneg, default=None, help="also list arrows with |shift| <= this")
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", dest="fmt", action="store_const", const="json")
    fmt.add_argument("--csv", dest="fmt", action="store_const", const="csv")
    fmt.add_argument("--svg", dest="fmt", action="store_const", const="svg")
    p.add_argument("--output", "-o")

    p = sub.add_parser("verify", help="run a verification suite and print a JSON report")
    p.add_argument("--suite", choices=SUITES + ("all",), required=True)
    _add_params(p, n_required=False, t_required=False)
    p.add_argument("--max-level", type=_nonneg, default=2)
    p.add_argument("--max-shift", type=_nonneg, default=2)
    p.add_argument("--samples", type=_nonneg, default=100)
    p.add_argument("--seed", type=int, default=None, help="falls back to $GQ_SEED")
    p.add_argument("--output", "-o")

    p = sub.add_parser("convolve", help="convolve two algebra elements given as JSON files")
    _add_params(p)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--cocycle")
    p.add_argument("--kms", action="store_true", help="also report phi(a*b), phi(b*sigma(a)) and the residual")
    p.add_argument("--output", "-o")
    return parser


def _params(args) -> cpn.Params:
    try:
        return cpn.Params(args.n, args.t, args.hbar, args.tol)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None


def _emit(text: str, path) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------- enumerate


def _unit_record(params, u):
    r, s = cpn.stratum(u)
    return {**cpn.unit_to_json(u), "label": repr(u.coords), "c": list(cpn.c_values(params, u)), "stratum": [r, s]}


def render_svg(params: cpn.Params, units, size: int = 320) -> str:
    """Dots at the c-coordinates of the units inside the simplex 0 <= c_1 <= ... <= c_n <= 1."""
    pad = 20
    span = size - 2 * pad
    X = lambda v: pad + v * span
    Y = lambda v: size - pad - v * span
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f"<title>n={params.n} t={params.t} hbar={params.hbar:.6g}</title>",
    ]
    if params.n == 1:
        y0 = size / 2
        parts.append(f'<line x1="{X(0)}" y1="{y0}" x2="{X(1)}" y2="{y0}" stroke="black"/>')
        wall = X(1 - params.t)
        parts.append(f'<line x1="{wall}" y1="{y0 - 8}" x2="{wall}" y2="{y0 + 8}" stroke="grey"/>')
        pts = [(X(cpn.c_values(params, u)[0]), y0) for u in units]
    else:
        corners = [(X(0), Y(0)), (X(0), Y(1)), (X(1), Y(1))]
        poly = " ".join(f"{a:.2f},{b:.2f}" for a, b in corners)
        parts.append(f'<polygon points="{poly}" fill="none" stroke="black"/>')
        pts = [(X(c[0]), Y(c[1])) for c in (cpn.c_values(params, u) for u in units)]
    for x, y in pts:
        parts.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="3" fill="black"/>')
    parts.append("</svg>\n")
    return "\n".join(parts)


def cmd_enumerate(args) -> int:
    params = _params(args)
    if args.fmt == "svg" and params.n not in (1, 2):
        raise UsageError("--svg is available for n = 1 and n = 2 only; use --csv")
    if args.max_shift is not None:
        units, arrows = cpn.enumerate_window(params, args.max_level, args.max_shift)
    else:
        units, arrows = cpn.enumerate_units(params, args.max_level), None
    if args.fmt == "json":
        out = {
            "params": cpn.params_to_json(params),
            "max_level": args.max_level,
            "count": len(units),
            "units": [_unit_record(params, u) for u in units],
        }
        if arrows is not None:
            out["max_shift"] = args.max_shift
            out["arrow_count"] = len(arrows)
            out["arrows"] = [cpn.arrow_to_json(a) for a in arrows]
        text = json.dumps(out, indent=1) + "\n"
    elif args.fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "label"] + [f"c{k}" for k in range(1, params.n + 1)] + ["r", "s"])
        for i, u in enumerate(units):
            rec = _unit_record(params, u)
            w.writerow([i, rec["label"]] + [repr(c) for c in rec["c"]] + rec["stratum"])
        text = buf.getvalue()
    elif args.fmt == "svg":
        text = render_svg(params, units)
    else:
        lines = [repr(u.coords) for u in units]
        lines.append(f"units: {len(units)}")
        if arrows is not None:
            lines.append(f"arrows: {len(arrows)}")
        text = "\n".join(lines) + "\n"
    _emit(text, args.output)
    return EXIT_OK


# -------------------------------------------------------------- verify


def resolve_seed(seed, env=None):
    if seed is not None:
        return seed
    raw = (os.environ if env is None else env).get("GQ_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"GQ_SEED must be an integer, got {raw!r}") from None


def cmd_verify(args) -> int:
    seed = resolve_seed(args.seed)
    if args.suite in RANDOMIZED and seed is None:
        raise UsageError(f"suite {args.suite!r} is randomized: pass --seed or set GQ_SEED")
    if not 1 <= args.n <= 8:
        raise UsageError(f"--n must lie in 1..8, got {args.n}")
    _params(args)
    config = SuiteConfig(
        n=args.n,
        t=args.t,
        hbar=args.hbar,
        tol=args.tol,
        max_level=args.max_level,
        max_shift=args.max_shift,
        samples=args.samples,
        seed=seed,
    )
    report = run_suite(args.suite, config)
    _emit(json.dumps(report, indent=1) + "\n", args.output)
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ------------------------------------------------------------ convolve


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def load_element(path, params: cpn.Params) -> cv.AlgebraElement:
    try:
        a = cv.element_from_json(_load_json(path), cpn.arrow_from_json)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None
    for g in a:
        try:
            errs = cpn.arrow_errors(params, g)
        except OverflowError as exc:
            errs = [str(exc)]
        if errs:
            raise UsageError(f"{path}: invalid arrow {g!r}: {'; '.join(map(str, errs))}")
    return a


def cocycle_from_json(obj, n: int):
    """``{"kind": "trivial"}``, ``{"kind": "bilinear", "theta", "i", "j"}`` or ``{"kind": "square", "i"}``.

    Bilinear: ``exp(i theta p_i(g1) p_j(g2))`` (0-based shift components), a
    genuine 2-cocycle.  Square: ``exp(i p_i(g1)^2)``, which is not.
    """
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError("cocycle must be an object with a 'kind' field")
    kind = obj["kind"]

    def index(key):
        v = obj.get(key, 0)
        if not isinstance(v, int) or not 0 <= v < n:
            raise ValueError(f"cocycle index {key!r} must be an integer in 0..{n - 1}")
        return v

    if kind == "trivial":
        return trivial_cocycle
    if kind == "bilinear":
        i, j = index("i"), index("j")
        theta = float(obj.get("theta", 1.0))
        return bilinear_cocycle(lambda g: g.shift[i], lambda g: g.shift[j], theta)
    if kind == "square":
        i = index("i")
        return cv.square_cocycle(lambda g: g.shift[i])
    raise ValueError(f"unknown cocycle kind {kind!r}")


def cmd_convolve(args) -> int:
    params = _params(args)
    G = cpn.structure_maps(params)
    a = load_element(args.a, params)
    b = load_element(args.b, params)
    zeta = None
    if args.cocycle:
        try:
            zeta = cocycle_from_json(_load_json(args.cocycle), params.n)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"{args.cocycle}: {exc}") from None
    product = cv.convolve(G, a, b, zeta, validate=False)
    payload = cv.element_to_json(product, cpn.arrow_to_json)
    code = EXIT_OK
    if args.kms:
        r = cv.kms_check(G, a, b, lambda x: cpn.measure_mu(params, x), cpn.modular_cocycle(params))
        ok = r.residual <= params.tol * max(1.0, abs(r.lhs), abs(r.rhs))
        payload = {
            "product": payload,
            "kms": {
                "phi_ab": [r.lhs.real, r.lhs.imag],
                "phi_b_sigma_a": [r.rhs.real, r.rhs.imag],
                "residual": r.residual,
                "passed": ok,
            },
        }
        code = EXIT_OK if ok else EXIT_FAIL
    _emit(json.dumps(payload, indent=1) + "\n", args.output)
    return code


COMMANDS = {"enumerate": cmd_enumerate, "verify": cmd_verify, "convolve": cmd_convolve}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"gq {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
