"""Command-line front end.

Exit codes: 0 success, 1 invariant failure or table mismatch, 2 undecided,
64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import arithmetic as ar
from . import threshold as th
from . import verify
from .group import NotInDomain, Signature, make_domain_point
from .integrand import DEFAULT_SEED, DetPower, KAverageConfig, WeightSpec, parse_poly
from .quadrature import NotConverged, QuadConfig

EXIT_OK, EXIT_FAIL, EXIT_UNDECIDED, EXIT_USAGE = 0, 1, 2, 64

POLY_HELP = """polynomial grammar:
  det^l                  (det z)^l, requires p = q
  const c                constant c (complex literal, e.g. 2 or (1+2j))
  sum: c*z[r][s]^e*...   sum of monomials, 1-based indices, terms joined by + or -
                         e.g. "sum: z[1][1] + (0.5-1j)*z[1][2]^2*z[2][1]"
"""


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _int_range(text: str) -> range:
    if ".." in text:
        lo, hi = text.split("..")
        return range(int(lo), int(hi) + 1)
    return range(int(text), int(text) + 1)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get("THREADS", "1")))


def _quad_cfg(args) -> QuadConfig:
    return QuadConfig(rel_tol=args.rel_tol, max_points_per_axis=args.max_points)


def _signature(args) -> Signature:
    q = args.q if args.q is not None else args.p
    try:
        return Signature(args.p, q)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_n0(args) -> int:
    sig = _signature(args)
    try:
        weight = WeightSpec(sig, args.m)
        poly = DetPower(args.l) if args.f is None else parse_poly(args.f, sig)
        if args.f is None:
            poly.check(sig)
        query = th.N0Query(
            weight, poly, cfg=_quad_cfg(args), margin=args.margin,
            kavg=KAverageConfig(samples=args.samples, seed=args.seed), path=args.path,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    try:
        res = th.find_n0(query)
    except th.Undecided as exc:
        print(f"undecided: {exc}")
        return EXIT_UNDECIDED
    except NotConverged as exc:
        print(f"undecided: {exc}")
        return EXIT_UNDECIDED
    if args.json:
        print(json.dumps({
            "n0": res.n0, "ratio_at_n0": res.ratio_at_n0, "ratio_below": res.ratio_below,
            "margin": res.decided_margin, "abs_err": res.abs_err,
        }))
    else:
        print(f"n0={res.n0}")
        below = "n/a" if res.ratio_below is None else f"{res.ratio_below:.12f}"
        print(f"ratio_at_n0={res.ratio_at_n0:.12f} ratio_below={below} margin={res.decided_margin:.3e}")
    return EXIT_OK


def cmd_table(args) -> int:
    p = args.p
    if args.m is None or args.l is None:
        if p not in th.PUBLISHED_RANGES:
            raise UsageError("give --m and --l ranges for p outside {1, 2}")
    m_range = _int_range(args.m) if args.m else th.PUBLISHED_RANGES[p][0]
    l_range = _int_range(args.l) if args.l else th.PUBLISHED_RANGES[p][1]
    if min(m_range) < 2 * (2 * p) - 1:
        raise UsageError(f"m must be >= {4 * p - 1} for p = q = {p}")
    cells = th.reproduce_table(
        p, m_range, l_range, cfg=_quad_cfg(args), margin=args.margin, path=args.path,
        threads=_threads(args),
    )
    undecided = [c for c in cells if c.n0 is None]
    if args.check_paper:
        if p not in th.PUBLISHED:
            raise UsageError("no published table for this p")
        hits, total, mismatches = th.compare_published(p, cells)
        print(f"{hits}/{total} match")
        for line in mismatches:
            print(line)
        for c in undecided:
            print(f"  {c.note}")
        if undecided:
            return EXIT_UNDECIDED
        return EXIT_OK if not mismatches else EXIT_FAIL
    sys.stdout.write(th.to_json(cells) + "\n" if args.format == "json" else th.to_csv(cells))
    return EXIT_UNDECIDED if undecided else EXIT_OK


def cmd_verify(args) -> int:
    checks = verify.run(args.suite, args.seed)
    failed = 0
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {c.detail}")
        failed += not c.passed
    print(f"{len(checks) - failed} passed, {failed} failed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def _parse_z(args, sig: Signature) -> np.ndarray:
    if args.z_json:
        rows = json.loads(args.z_json)
        return np.array([[complex(re, im) for re, im in row] for row in rows])
    parts = [float(v) for v in args.z.split(",")]
    if len(parts) != 2 or (sig.p, sig.q) != (1, 1):
        raise UsageError("--z re,im is for p = q = 1; use --z-json otherwise")
    return np.array([[complex(parts[0], parts[1])]])


def cmd_poincare(args) -> int:
    sig = _signature(args)
    if sig.p != sig.q:
        raise UsageError("Poincare series of det powers need p = q")
    if args.N < 3:
        raise UsageError("level N must be >= 3")
    try:
        WeightSpec(sig, args.m)
        z = make_domain_point(sig, _parse_z(args, sig))
    except (ValueError, NotInDomain) as exc:
        raise UsageError(str(exc)) from exc
    bounds = sorted(int(b) for b in args.bounds.split(","))
    elems = ar.enumerate_gamma(sig, args.N, bounds[-1])
    for b in bounds:
        rep = ar.truncated_poincare(sig, args.N, args.m, args.l, z, b, elems)
        print(json.dumps({
            "bound": rep.bound, "terms_used": rep.terms_used,
            "partial_value": [rep.partial_value.real, rep.partial_value.imag],
            "tail_indicator": rep.tail_indicator,
        }))
    return EXIT_OK


def cmd_enumerate(args) -> int:
    sig = _signature(args)
    try:
        elems = ar.enumerate_gamma(sig, args.N, args.bound, cap=args.cap)
    except ar.BoundTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for e in elems:
        print(e.to_json(args.N))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="supq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def quad_flags(sp):
        sp.add_argument("--margin", type=float, default=th.DEFAULT_MARGIN)
        sp.add_argument("--rel-tol", type=float, default=1e-10)
        sp.add_argument("--max-points", type=int, default=400)
        sp.add_argument("--path", choices=["quadrature", "incomplete_beta"], default="quadrature")

    sp = sub.add_parser("n0", help="minimal level N_0 for one weight and polynomial",
                        epilog=POLY_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--q", type=int)
    sp.add_argument("--m", type=int, required=True)
    poly = sp.add_mutually_exclusive_group(required=True)
    poly.add_argument("--l", type=int, help="use det^l")
    poly.add_argument("--f", help="polynomial spec (see below)")
    sp.add_argument("--samples", type=int, default=2000, help="Haar samples for Monte Carlo K-averages")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--json", action="store_true")
    quad_flags(sp)
    sp.set_defaults(func=cmd_n0)

    sp = sub.add_parser("table", help="grid of N_0(chi_m, det^l) for p = q")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--m", help="range a..b")
    sp.add_argument("--l", help="range a..b")
    sp.add_argument("--check-paper", action="store_true", help="compare with the published grid")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.add_argument("--threads", type=int)
    quad_flags(sp)
    sp.set_defaults(func=cmd_table)

    sp = sub.add_parser("verify", help="run a seeded invariant suite")
    sp.add_argument("--suite", choices=["group", "rootdata", "quadrature", "lemmas", "all"], default="all")
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("poincare", help="truncated Poincare series over a congruence subgroup")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--q", type=int)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--l", type=int, default=0)
    zg = sp.add_mutually_exclusive_group(required=True)
    zg.add_argument("--z", help="re,im (p = q = 1)")
    zg.add_argument("--z-json", help="p x q matrix as JSON rows of [re, im] pairs")
    sp.add_argument("--bounds", required=True, help="comma-separated norm bounds")
    sp.set_defaults(func=cmd_poincare)

    sp = sub.add_parser("enumerate", help="list congruence-subgroup elements as JSON lines")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--q", type=int)
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--bound", type=int, required=True)
    sp.add_argument("--cap", type=int, default=ar.DEFAULT_CANDIDATE_CAP)
    sp.set_defaults(func=cmd_enumerate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"supq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
