"""Entry point: command-line access to characters, counts and verification suites.

Usage::

    python main.py --type B2 roots
    python main.py --type G2 euler --beta 3,2 --r 3,1
    python main.py --type B2 xvar --beta 1,1
    python main.py --type B3 --json cluster-vars
    python main.py --config run.json verify 1c
    python main.py --summary        # rebuild reports/verification_summary.md
"""

import argparse
import json
import logging
import sys

import cache
import config
from algebra_h import find_rigid, find_rigid_with_retries, hom_dim, is_rigid, module_to_dict
from builtin_types import builtin_lift, builtin_name_of, get_builtin, list_builtin_names
from cartan_core import CartanDatum, coxeter_data, exchange_matrix, positive_roots
from cc_formula import (
    verify_convolution,
    verify_ext_order,
    verify_filtrations,
    verify_g_vectors,
    verify_nonrigid,
    verify_prop41,
    verify_symmetrizer_independence,
    verify_thm1b,
    verify_thm1c,
    verify_thm1d,
    x_module,
)
from cluster_engine import exchange_graph
from errors import ConfigError, InterpolationMismatch, LfccError
from grassmannian import count_poly_gr, f_polynomial
from run_config import load_run_config
from summary import summarize_saved_reports, write_summary

logging.basicConfig(
    level=getattr(logging, config.LOG_LEVEL.upper(), logging.INFO),
    format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    datefmt="%H:%M:%S",
    stream=sys.stderr,
)
logger = logging.getLogger(__name__)

SUITES = ("1c", "1b", "1d", "sym", "prop41", "filt", "g", "ext", "conv", "nonrigid")


def _int_tuple(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Cluster characters of locally free modules over H(C, D, Omega)"
    )
    source = parser.add_mutually_exclusive_group()
    source.add_argument("--type", help=f"Builtin type: {', '.join(list_builtin_names())}")
    source.add_argument("--config", help="JSON run config with an explicit Cartan datum")
    parser.add_argument("--primes", type=_int_tuple, help="Primes used for point counting, e.g. 2,3,5,7")
    parser.add_argument("--seed", type=int, default=None, help="Seed for the rigid-module search")
    parser.add_argument("--json", action="store_true", help="Print machine-readable JSON")
    parser.add_argument("--cache", help="Directory of the point-count cache")
    parser.add_argument("--summary", action="store_true",
                        help="Rebuild the markdown summary from saved reports and exit")

    sub = parser.add_subparsers(dest="command")
    sub.add_parser("roots", help="Positive roots, exchange matrix and Coxeter data")

    euler = sub.add_parser("euler", help="Euler characteristic of a locally free quiver Grassmannian")
    euler.add_argument("--beta", type=_int_tuple, required=True)
    euler.add_argument("--r", type=_int_tuple, required=True)

    for name, text in (("fpoly", "F-polynomial of a module"), ("xvar", "Cluster character of a module")):
        cmd = sub.add_parser(name, help=text)
        target = cmd.add_mutually_exclusive_group(required=True)
        target.add_argument("--beta", type=_int_tuple, help="Rigid module M(beta)")
        target.add_argument("--module", help="Builtin integer-lift module, e.g. G2-M2")

    sub.add_parser("cluster-vars", help="All cluster variables with g-vectors and F-polynomials")

    find = sub.add_parser("find-module", help="Search for the rigid module M(beta)")
    find.add_argument("--beta", type=_int_tuple, required=True)
    find.add_argument("--q", type=int, default=None,
                      help="Field to search over (default: the search prime, then the retry primes)")

    verify = sub.add_parser("verify", help="Run verification suites")
    verify.add_argument("which", choices=(*SUITES, "all"))
    verify.add_argument("--k", type=int, default=2, help="Symmetrizer scale factor (sym)")
    verify.add_argument("--trials", type=int, default=5, help="Random pairs (1b, conv)")
    verify.add_argument("--cap", type=int, default=2, help="Multiplicity cap (1d)")
    verify.add_argument("--max-bound", type=int, default=None,
                        help="Skip items whose degree bound exceeds this (default: check everything)")
    verify.add_argument("--q", type=int, default=config.SEARCH_PRIME, help="Field for module searches (1d, filt, ext)")
    return parser


def _resolve(args) -> tuple[CartanDatum, str, tuple[int, ...] | None, int, str]:
    """Datum, its display label, primes, seed and cache directory."""
    if args.config:
        run = load_run_config(args.config)
        datum = run.datum()
        primes, seed, cache_dir = run.primes, run.rng_seed, run.cache_dir
    elif args.type:
        try:
            datum = get_builtin(args.type).datum()
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
        primes, seed, cache_dir = None, config.RNG_SEED, None
    else:
        raise ConfigError("give --type NAME or --config FILE")
    if args.primes is not None:
        primes = args.primes
    if args.seed is not None:
        seed = args.seed
    cache_dir = args.cache or cache_dir or config.CACHE_DIR
    label = builtin_name_of(datum) or datum.label()
    return datum, label, tuple(primes) if primes else None, seed, cache_dir


def _spec_from(args):
    if getattr(args, "module", None):
        try:
            return builtin_lift(args.module)
        except KeyError as exc:
            raise ConfigError(str(exc.args[0])) from exc
    return args.beta


# ---------------------------------------------------------------------------
# Commands: each returns (payload for --json, human-readable text)
# ---------------------------------------------------------------------------


def cmd_roots(datum: CartanDatum, label: str, args, primes, seed) -> tuple[dict, str]:
    roots = positive_roots(datum)
    b = exchange_matrix(datum)
    cox = coxeter_data(datum)
    payload = {
        "roots": [list(r) for r in roots],
        "exchange_matrix": [list(row) for row in b],
        "iplus": list(cox.iplus),
        "coxeter_number": cox.h,
        "jminus": list(cox.jminus),
    }
    lines = [f"Type {label}: {len(roots)} positive roots, h = {cox.h}"]
    lines += [f"  {k:2d}  {r}" for k, r in enumerate(roots, 1)]
    lines.append("Exchange matrix:")
    lines += [f"  {list(row)}" for row in b]
    lines.append(f"(+)-admissible sequence: {cox.iplus}")
    return payload, "\n".join(lines)


def cmd_euler(datum: CartanDatum, label: str, args, primes, seed) -> tuple[dict, str]:
    poly = count_poly_gr(datum, args.beta, args.r, primes, seed)
    payload = {
        "beta": list(args.beta),
        "r": list(args.r),
        "euler_characteristic": poly.euler_characteristic,
        "count_polynomial": list(poly.coefficients),
        "samples": [list(s) for s in poly.samples],
    }
    text = "\n".join([
        f"chi = {poly.euler_characteristic}",
        f"count polynomial: {poly}",
        "samples: " + ", ".join(f"q={q}: {c}" for q, c in poly.samples),
    ])
    return payload, text


def cmd_fpoly(datum: CartanDatum, label: str, args, primes, seed) -> tuple[dict, str]:
    f = f_polynomial(datum, _spec_from(args), primes, seed)
    payload = {"rank": list(f.rank), "coefficients": [[list(r), c] for r, c in sorted(f.coefficients.items())]}
    return payload, str(f)


def cmd_xvar(datum: CartanDatum, label: str, args, primes, seed) -> tuple[dict, str]:
    result = x_module(datum, _spec_from(args), primes, seed)
    payload = {
        "module": result.spec.label(),
        "x": str(result.x),
        "terms": result.x.to_pairs(),
        "g_vector": list(result.g_vector),
        "f_polynomial": [[list(r), c] for r, c in sorted(result.f_polynomial.coefficients.items())],
    }
    text = "\n".join([str(result.x), f"g = {result.g_vector}", f"F = {result.f_polynomial}"])
    return payload, text


def cmd_cluster_vars(datum: CartanDatum, label: str, args, primes, seed) -> tuple[dict, str]:
    graph = exchange_graph(datum)
    payload = {
        "clusters": [sorted(c) for c in graph.clusters],
        "variables": [
            {
                "index": rec.index,
                "x": str(rec.value),
                "terms": rec.value.to_pairs(),
                "denominator": list(rec.denominator),
                "g_vector": list(rec.g_vector),
                "f_polynomial": rec.f_polynomial.to_pairs(),
                "root": list(rec.root) if rec.root else None,
            }
            for rec in graph.variables
        ],
    }
    lines = [f"Type {label}: {len(graph.variables)} cluster variables, {len(graph.clusters)} clusters"]
    for rec in graph.variables:
        tag = f"x{rec.root}" if rec.root else f"u{rec.index + 1}"
        lines.append(f"  {tag:<16} g={rec.g_vector}  {rec.value}")
    return payload, "\n".join(lines)


def cmd_find_module(datum: CartanDatum, label: str, args, primes, seed) -> tuple[dict, str]:
    if args.q is None:
        module = find_rigid_with_retries(datum, args.beta, seed)
    else:
        module = find_rigid(datum, args.beta, args.q, seed)
    payload = {
        "beta": list(args.beta),
        "q": module.q,
        "module": module_to_dict(module),
        "end_dimension": hom_dim(module, module),
        "rigid": is_rigid(datum, module),
    }
    return payload, json.dumps(payload["module"], sort_keys=True)


def cmd_verify(datum: CartanDatum, label: str, args, primes, seed) -> tuple[dict, str]:
    runners = {
        "1c": lambda: verify_thm1c(datum, primes, seed, label=label),
        "1b": lambda: verify_thm1b(datum, args.trials, primes, seed, label=label),
        "1d": lambda: verify_thm1d(datum, args.cap, args.q, primes, seed, label=label),
        "sym": lambda: verify_symmetrizer_independence(datum, args.k, primes, seed, args.max_bound, label=label),
        "prop41": lambda: verify_prop41(datum, primes, seed, args.max_bound, label=label),
        "filt": lambda: verify_filtrations(datum, args.q, seed, label=label),
        "g": lambda: verify_g_vectors(datum, label=label),
        "ext": lambda: verify_ext_order(datum, args.q, seed, label=label),
        "conv": lambda: verify_convolution(datum, args.trials, primes, seed, label=label),
        "nonrigid": lambda: verify_nonrigid(datum, primes, seed, label=label),
    }
    selected = SUITES if args.which == "all" else (args.which,)
    reports = []
    for name in selected:
        report = runners[name]()
        report.save()
        reports.append(report)
    write_summary(reports)
    payload = {"passed": all(r.passed for r in reports), "reports": [r.to_dict(include_timing=False) for r in reports]}
    return payload, "\n\n".join(r.to_readable_text() for r in reports)


COMMANDS = {
    "roots": cmd_roots,
    "euler": cmd_euler,
    "fpoly": cmd_fpoly,
    "xvar": cmd_xvar,
    "cluster-vars": cmd_cluster_vars,
    "find-module": cmd_find_module,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.summary:
        path = summarize_saved_reports()
        print(path)
        return 0
    if not args.command:
        parser.print_help()
        return 2

    problems = config.validate()
    if problems:
        for problem in problems:
            logger.error("Configuration problem: %s", problem)
        return ConfigError.exit_code

    try:
        datum, label, primes, seed, cache_dir = _resolve(args)
        cache.configure(cache_dir)
        payload, text = COMMANDS[args.command](datum, label, args, primes, seed)
    except InterpolationMismatch as exc:
        logger.error("InterpolationMismatch: %s", exc)
        logger.error("Samples: %s", exc.samples)
        logger.error("Context: %s", json.dumps(exc.context, sort_keys=True))
        return exc.exit_code
    except LfccError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code

    if args.json:
        document = {"schema": config.SCHEMA_VERSION, "command": args.command, "type": label, **payload}
        print(json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        print(text)
    if args.command == "verify" and not payload["passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
