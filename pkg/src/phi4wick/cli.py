"""Command-line front end.

Subcommands: bell, wick, coproduct, verify, counterterms, valuate, scaling.
Exit codes: 0 ok, 1 mismatch, 2 bad input, 3 size limit. RENORM_THREADS caps
the worker threads used by the numeric backends.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from typing import List, Optional, Sequence

from .errors import DomainError, Phi4WickError, SizeLimitError
from .exact_algebra import Poly, X, as_rational

log = logging.getLogger("phi4wick")

EXIT_OK, EXIT_MISMATCH, EXIT_BAD_INPUT, EXIT_SIZE = 0, 1, 2, 3


class BadInput(Exception):
    pass


def exact_rational(text: str) -> Fraction:
    """'p/q' or an integer; decimals are refused where exactness matters."""
    text = text.strip()
    if any(ch in text.lower() for ch in ".e"):
        raise BadInput(f"expected an exact rational like 18/5, got {text!r}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise BadInput(f"cannot parse rational {text!r}") from exc


def any_number(text: str) -> Fraction:
    try:
        return as_rational(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise BadInput(f"cannot parse number {text!r}") from exc


def int_list(text: str) -> List[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise BadInput(f"expected a comma-separated list of integers, got {text!r}") from exc


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _render_poly(p: Poly, fmt: str) -> str:
    if fmt == "latex":
        return p.to_latex()
    if fmt == "json":
        return json.dumps(p.to_json())
    return str(p)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_bell(args) -> int:
    from .wick import bell_complete, bell_partial

    if args.n < 0:
        raise BadInput("n must be non-negative")
    if args.k is None:
        p = bell_complete(args.n)
    else:
        if not 1 <= args.k <= args.n:
            raise BadInput(f"need 1 <= k <= n, got n={args.n}, k={args.k}")
        p = bell_partial(args.n, args.k)
    _emit(_render_poly(p, args.format), args.output)
    return EXIT_OK


def _parse_sigma(text: Optional[str], n: int):
    from .wick import CumulantSpec

    if not text:
        return CumulantSpec.formal(max(n, 2))
    sigma = {}
    for item in text.split(","):
        if "=" not in item:
            raise BadInput(f"sigma entries look like 2=1/3, got {item!r}")
        p, v = item.split("=", 1)
        sigma[int(p)] = any_number(v)
    return CumulantSpec(sigma)


def cmd_wick(args) -> int:
    from .exact_algebra import Functional
    from .wick import wick_map, wick_map_xy

    if args.n < 0:
        raise BadInput("n must be non-negative")
    if args.gaussian is not None:
        c = any_number(args.gaussian)
        moments = [Fraction(0)] * (args.n + 1)
        for k in range(0, args.n + 1, 2):
            dbl = 1
            for j in range(k - 1, 0, -2):
                dbl *= j
            moments[k] = dbl * c ** (k // 2)
        p = wick_map(Functional(moments), args.n)
    else:
        p = wick_map_xy(_parse_sigma(args.sigma, args.n), args.n)
    _emit(_render_poly(p, args.format), args.output)
    return EXIT_OK


def cmd_coproduct(args) -> int:
    from .multiindex import (
        GENERAL_ORACLE_MAX_N,
        coproduct_mi_closed,
        coproduct_mi_extended,
        coproduct_mi_general,
        format_tensor,
        mi_tensor_to_json,
    )

    d = exact_rational(args.d)
    if args.n < 2:
        raise BadInput("n must be >= 2")
    if args.n > GENERAL_ORACLE_MAX_N:
        raise SizeLimitError(f"coproduct tables are limited to n <= {GENERAL_ORACLE_MAX_N}")
    table = coproduct_mi_extended(args.n, d) if args.extended else coproduct_mi_closed(args.n, d)
    status = None
    if args.oracle:
        oracle = coproduct_mi_general(args.n, d)
        status = "MATCH" if oracle == table else "MISMATCH"
    if args.format == "json":
        out = {"n": args.n, "d": str(d), "terms": mi_tensor_to_json(table)}
        if status:
            out["oracle"] = status
        text = json.dumps(out, indent=2)
    elif args.format == "latex":
        rows = []
        for (left, right), c in sorted(table.items(), key=lambda kv: kv[0]):
            lf = r" \cdot ".join(_mi_latex(m) for m in left)
            rows.append(f"{c}\\, {lf} \\otimes {_mi_latex(right)}")
        text = " + ".join(rows) if rows else "0"
        if status:
            text += f"\n% oracle: {status}"
    else:
        text = format_tensor(table)
        if status:
            text += f"\noracle: {status}"
    _emit(text, args.output)
    return EXIT_MISMATCH if status == "MISMATCH" else EXIT_OK


def _mi_latex(m) -> str:
    return " ".join(f"z_{{{k}}}" + (f"^{{{c}}}" if c > 1 else "") for k, c in m.beta) or "1"


def cmd_verify(args) -> int:
    from .verify import VERIFY_MAX_N, perturb_first_coefficient, verify

    d = exact_rational(args.d)
    if args.nmax > VERIFY_MAX_N:
        raise SizeLimitError(f"verify supports nmax <= {VERIFY_MAX_N}")
    if args.nmax < 1:
        raise BadInput("nmax must be >= 1")
    mutation = perturb_first_coefficient(1, args.mutate_index) if args.mutate else None
    seeds = range(args.seed, args.seed + args.seeds)
    reports = [r for s in seeds for r in verify(args.nmax, d, s, mutation)]
    ok = all(r.ok for r in reports)
    if args.format == "json":
        text = json.dumps({"d": str(d), "ok": ok, "reports": [r.to_dict() for r in reports]}, indent=2)
    else:
        lines = []
        for r in reports:
            flags = " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in r.checks.items())
            lines.append(f"seed={r.seed} n={r.n} d={d}: {'MATCH' if r.ok else 'MISMATCH'} ({flags})")
            for name, rows in r.diffs.items():
                for row in rows:
                    lines.append(f"    {name}: {row}")
        lines.append("ALL MATCH" if ok else "MISMATCH")
        text = "\n".join(lines)
    _emit(text, args.output)
    return EXIT_OK if ok else EXIT_MISMATCH


def _config(args):
    from .valuation import ValuationConfig

    return ValuationConfig(
        d=float(any_number(args.d)),
        m=float(any_number(args.m)),
        N=getattr(args, "N", 0),
        s=None if args.s is None else float(any_number(args.s)),
        grid_size=args.M,
    )


def cmd_counterterms(args) -> int:
    from .valuation import counterterm_report

    cfg = _config(args)
    rep = counterterm_report(cfg, float(any_number(args.alpha)))
    if args.format == "json":
        text = rep.to_json()
    else:
        lines = [
            f"d={rep.d} N={rep.N} m={rep.m} s={rep.s} alpha={rep.alpha}",
            f"n*_m={rep.n_star_m} n*_e={rep.n_star_e}",
        ]
        lines += [f"sigma_{n} = {v if v is not None else 'GAP'}" for n, v in rep.sigma.items()]
        lines.append(f"beta = {rep.beta}")
        lines += [f"Pi_N A P(X^{n}) = {v if v is not None else 'GAP'}" for n, v in rep.gamma_terms.items()]
        lines.append(f"gamma = {rep.gamma}")
        lines += [f"gap: {g}" for g in rep.gaps]
        text = "\n".join(lines)
    _emit(text, args.output)
    return EXIT_OK


def cmd_valuate(args) -> int:
    from .feynman import bphz_valuation, degree, parse_graph
    from .valuation import numeric_character, pi_momentum, pi_xspace

    cfg = _config(args)
    try:
        g = parse_graph(args.graph)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise BadInput(str(exc)) from exc
    if args.backend == "xspace":
        value = pi_xspace(g, cfg)
    elif args.backend == "momentum":
        value = pi_momentum(g, cfg)
    else:
        value = numeric_character(cfg)(g)
    out = {"graph": g.to_json(), "degree": str(degree(g, cfg.d_exact)), "N": cfg.N, "value": value}
    if args.bphz:
        out["bphz"] = bphz_valuation(numeric_character(cfg), g, cfg.d_exact)
    _emit(json.dumps(out, indent=2) if args.format == "json" else "\n".join(f"{k}: {v}" for k, v in out.items()), args.output)
    return EXIT_OK


def cmd_scaling(args) -> int:
    from .feynman import parse_graph
    from .valuation import scaling_csv, scaling_series

    cfg = _config(args)
    try:
        g = parse_graph(args.graph)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        raise BadInput(str(exc)) from exc
    Ns = int_list(args.Ns)
    if not Ns or min(Ns) < 0:
        raise BadInput("need a non-empty list of non-negative cutoffs")
    _emit(scaling_csv(scaling_series(g, cfg, Ns)).rstrip("\n"), args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phi4wick", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, formats=("text", "latex", "json")):
        sp.add_argument("--format", choices=formats, default=formats[0])
        sp.add_argument("--output", "-o", help="write to this file instead of stdout")

    sp = sub.add_parser("bell", help="complete or partial Bell polynomial")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int)
    common(sp)
    sp.set_defaults(func=cmd_bell)

    sp = sub.add_parser("wick", help="Wick map of X^n")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--sigma", help="cumulant coefficients, e.g. 2=1,3=1/2 (default: formal)")
    sp.add_argument("--gaussian", help="Gaussian variance c: prints the Hermite polynomial")
    common(sp)
    sp.set_defaults(func=cmd_wick)

    sp = sub.add_parser("coproduct", help="reduced multi-index coproduct of z4^n")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", required=True, help="dimension as an exact rational, e.g. 18/5")
    sp.add_argument("--oracle", action="store_true", help="cross-check against the E-coefficient oracle")
    sp.add_argument("--extended", action="store_true", help="use the extended form (p up to n-1)")
    common(sp)
    sp.set_defaults(func=cmd_coproduct)

    sp = sub.add_parser("verify", help="check both renormalisation routes agree")
    sp.add_argument("--nmax", type=int, default=4)
    sp.add_argument("--d", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    sp.add_argument("--mutate", action="store_true", help="perturb one coproduct coefficient (self-test)")
    sp.add_argument("--mutate-index", type=int, default=0)
    common(sp, ("text", "json"))
    sp.set_defaults(func=cmd_verify)

    def numeric(sp, cutoff_list=False):
        sp.add_argument("--d", required=True)
        if cutoff_list:
            sp.add_argument("--N", dest="Ns", default="2,4,8,16", help="comma-separated cutoffs")
        else:
            sp.add_argument("--N", type=int, default=4)
        sp.add_argument("--M", type=int, help="quadrature grid size (default: alias-free)")
        sp.add_argument("--m", default="1")
        sp.add_argument("--s", help="override the propagator exponent (default (7-d)/4)")

    sp = sub.add_parser("counterterms", help="sigma_n, beta and gamma at one cutoff")
    numeric(sp)
    sp.add_argument("--alpha", default="1")
    common(sp, ("json", "text"))
    sp.set_defaults(func=cmd_counterterms)

    sp = sub.add_parser("valuate", help="numeric value of one graph")
    numeric(sp)
    sp.add_argument("--graph", required=True, help="registry name or graph JSON")
    sp.add_argument("--backend", choices=("auto", "xspace", "momentum"), default="auto")
    sp.add_argument("--bphz", action="store_true", help="also report the renormalised value")
    common(sp, ("json", "text"))
    sp.set_defaults(func=cmd_valuate)

    sp = sub.add_parser("scaling", help="CSV of (N, value) for one graph")
    numeric(sp, cutoff_list=True)
    sp.add_argument("--graph", required=True)
    common(sp, ("csv",))
    sp.set_defaults(func=cmd_scaling)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_BAD_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except SizeLimitError as exc:
        print(f"size limit: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except (BadInput, DomainError, ValueError, Phi4WickError) as exc:
        print(f"bad input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
