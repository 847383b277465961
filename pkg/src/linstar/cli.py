"""Command-line interface.

Exit codes: 0 ok, 2 usage or input error, 3 dimension mismatch,
4 Jacobi failure, 5 tolerance breach.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

from .algebra import JacobiError, Polynomial, bundled_algebras, jacobi_check, load_algebra
from .graphs import GraphKeyError, enumerate_graphs, is_restricted, linear_nonzero, parse_key
from .weights import ANGLE_MAPS, WeightCache, WeightDimensionError, get_angle_map, get_or_compute

EXIT_OK, EXIT_USAGE, EXIT_DIMENSION, EXIT_JACOBI, EXIT_TOLERANCE = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    command: str
    algebra: str | None = None
    order: int = 2
    variant: str = "restricted"
    angle: str = "harmonic"
    samples: int = 10**6
    seed: int = 0
    cache: str | None = None
    output: str | None = None
    table: str | None = None
    max_degree: int = 2
    abs_tol: float = 0.0
    n_sigma: float = 3.0
    drop_below_sigma: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.variant not in ("full", "restricted"):
            raise CliError(f"variant must be 'full' or 'restricted', not {self.variant!r}")
        for name in ("samples", "n_sigma"):
            if getattr(self, name) <= 0:
                raise CliError(f"--{name.replace('_', '-')} must be positive")
        for name in ("order", "max_degree", "abs_tol", "seed"):
            if getattr(self, name) < 0:
                raise CliError(f"--{name.replace('_', '-')} must be non-negative")
        if self.workers < 1:
            raise CliError("--workers must be at least 1")
        if self.angle not in ANGLE_MAPS:
            raise CliError(f"unknown angle map {self.angle!r}; known: {', '.join(sorted(ANGLE_MAPS))}")


def _emit(args, payload, text: str):
    print(json.dumps(payload, indent=1, default=str) if args.json else text)


def _cache(path):
    return WeightCache(path) if path else None


def _load_table(path):
    from .star import StarProductTable

    if not path or not Path(path).is_file():
        raise CliError(f"table file {path!r} not found")
    try:
        return StarProductTable.load(path)
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read table {path!r}: {exc}") from None


# ---------------------------------------------------------------------------
# commands


def cmd_enumerate(args) -> int:
    if args.n < 1 or args.m < 0:
        raise CliError("need --n >= 1 and --m >= 0")
    edges = 2 * args.n + args.m - 2 if args.edges is None else args.edges
    if edges < 0:
        raise CliError("edge count must be non-negative")
    graphs = enumerate_graphs(args.n, args.m, edges)
    if args.restricted:
        graphs = [g for g in graphs if is_restricted(g)]
    if args.linear:
        graphs = [g for g in graphs if linear_nonzero(g)]
    keys = [g.key for g in graphs]
    _emit(args, {"n": args.n, "m": args.m, "edges": edges, "count": len(keys), "graphs": keys},
          "\n".join([f"{len(keys)} graphs", *keys]))
    return EXIT_OK


def cmd_weight(args) -> int:
    cfg = RunConfig("weight", samples=args.samples, seed=args.seed, angle=args.angle, cache=args.cache)
    try:
        g = parse_key(args.key)
    except GraphKeyError as exc:
        raise CliError(str(exc)) from None
    try:
        w = get_or_compute(g, get_angle_map(cfg.angle), cfg.samples, cfg.seed, _cache(cfg.cache))
    except WeightDimensionError as exc:
        raise CliError(str(exc), EXIT_DIMENSION) from None
    # the weight carries 1/prod #Star(k)!; also report the bare angle integral
    norm = math.prod(math.factorial(d) for d in g.out_degrees)
    doc = {**asdict(w), "angle_integral": w.value * norm, "angle_integral_std_error": w.std_error * norm}
    _emit(args, doc, f"{w.graph_key}  weight {w.value:.8f} ± {w.std_error:.2e}  "
                     f"angle integral {w.value * norm:.8f} ± {w.std_error * norm:.2e}  "
                     f"({w.samples} samples, seed {w.seed}, {w.angle_map})")
    return EXIT_OK


def _algebra(source):
    try:
        return load_algebra(source)
    except FileNotFoundError as exc:
        raise CliError(str(exc)) from None
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CliError(f"invalid algebra config {source!r}: {exc}") from None


def cmd_star(args) -> int:
    from .star import build_table, star_multiply

    cfg = RunConfig("star", algebra=args.algebra, order=args.order, variant=args.variant, angle=args.angle,
                    samples=args.samples, seed=args.seed, cache=args.cache, output=args.output,
                    drop_below_sigma=args.drop_below_sigma, workers=args.workers)
    L = _algebra(cfg.algebra)
    try:
        t = build_table(L, cfg.order, cfg.variant, get_angle_map(cfg.angle), cfg.samples, cfg.seed,
                        _cache(cfg.cache), cfg.drop_below_sigma, cfg.workers)
    except JacobiError as exc:
        raise CliError(str(exc), EXIT_JACOBI) from None
    out = Path(cfg.output or f"{L.name or 'algebra'}-{cfg.variant}-N{cfg.order}.json")
    t.save(out)
    xs = [Polynomial.variable(L.dim, i) for i in range(L.dim)]
    products = []
    for i in range(L.dim):
        for j in range(L.dim):
            s = star_multiply(t, xs[i], xs[j])
            products.append({"f": str(xs[i]), "g": str(xs[j]), "series": str(s),
                             "coefficients": [{str(Polynomial.monomial(e)): v for e, v in c.items()}
                                              for c in s.coefficients]})
    lines = [f"table: {out} ({', '.join(f'order {n}: {len(r)} graphs' for n, r in enumerate(t.entries))})"]
    lines += [f"{p['f']} * {p['g']} = {p['series']}" for p in products]
    _emit(args, {"table": str(out), "graphs_per_order": [len(r) for r in t.entries],
                 "budget_per_order": [t.budget(n) for n in range(t.order + 1)], "products": products},
          "\n".join(lines))
    return EXIT_OK


def cmd_assoc(args) -> int:
    from .star import associativity_report

    cfg = RunConfig("assoc", table=args.table, max_degree=args.max_degree, abs_tol=args.abs_tol,
                    n_sigma=args.n_sigma)
    t = _load_table(cfg.table)
    r = associativity_report(t, cfg.max_degree, cfg.abs_tol, cfg.n_sigma)
    lines = [f"{r['algebra']} {r['variant']} N={r['order']}: {r['triples']} triples of degree <= {cfg.max_degree}"]
    for o in r["orders"]:
        lines.append(f"order {o['order']}: max|defect| {o['max_abs']:.3e} (sigma {o['sigma_at_max']:.2e}), "
                     f"worst ratio {o['worst_ratio']:.3f}, {'pass' if o['pass'] else 'FAIL'}")
    _emit(args, r, "\n".join(lines))
    return EXIT_OK if r["pass"] else EXIT_TOLERANCE


def cmd_compare(args) -> int:
    from .cbh import compare_tables, format_comparison

    cfg = RunConfig("cbh-compare", table=args.table, max_degree=args.max_degree, abs_tol=args.abs_tol,
                    n_sigma=args.n_sigma)
    t = _load_table(cfg.table)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        r = compare_tables(t, cfg.max_degree, abs_tol=cfg.abs_tol, n_sigma=cfg.n_sigma)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    _emit(args, r, format_comparison(r))
    return EXIT_OK if r["pass"] else EXIT_TOLERANCE


def cmd_algebras(args) -> int:
    if args.show:
        L = _algebra(args.show)
        ok, bad = jacobi_check(L)
        doc = {**L.to_config(), "jacobi": ok}
        _emit(args, doc, json.dumps(doc, indent=1))
        return EXIT_OK if ok else EXIT_JACOBI
    rows = []
    for name in bundled_algebras():
        L = load_algebra(name)
        rows.append({"name": name, "dim": L.dim, "abelian": L.is_abelian(), "jacobi": jacobi_check(L)[0]})
    _emit(args, rows, "\n".join(f"{r['name']:<12} dim {r['dim']}" + ("  abelian" if r["abelian"] else "")
                                for r in rows))
    return EXIT_OK


def cmd_cache(args) -> int:
    path = Path(args.cache)
    if args.clear:
        if path.exists():
            path.unlink()
        _emit(args, {"cleared": str(path)}, f"cleared {path}")
        return EXIT_OK
    entries = WeightCache(path).load() if path.exists() else []
    _emit(args, [asdict(w) for w in entries],
          "\n".join([f"{len(entries)} entries in {path}",
                     *(f"{w.graph_key}  {w.angle_map}  {w.value:.8f} ± {w.std_error:.1e}  "
                       f"n={w.samples} seed={w.seed}" for w in entries)]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")

    p = argparse.ArgumentParser(prog="linstar", description="Graph star products for linear Poisson structures.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("enumerate", parents=[common], help="list admissible graphs")
    e.add_argument("--n", type=int, required=True, help="aerial vertices")
    e.add_argument("--m", type=int, required=True, help="ground vertices")
    e.add_argument("--edges", type=int, default=None, help="edge count (default 2n+m-2)")
    e.add_argument("--restricted", action="store_true", help="keep graphs with a forest of aerial edges")
    e.add_argument("--linear", action="store_true", help="drop graphs with aerial in-degree >= 2")
    e.set_defaults(func=cmd_enumerate)

    w = sub.add_parser("weight", parents=[common], help="integrate one graph weight")
    w.add_argument("key", help="graph key, e.g. '1;2;g1,g2'")
    w.add_argument("--samples", type=int, default=10**6)
    w.add_argument("--seed", type=int, default=0)
    w.add_argument("--angle", default="harmonic")
    w.add_argument("--cache", default=None, help="weight cache file")
    w.set_defaults(func=cmd_weight)

    s = sub.add_parser("star", parents=[common], help="build a star-product table")
    s.add_argument("--algebra", required=True, help="bundled name or JSON config path")
    s.add_argument("--order", type=int, default=2)
    s.add_argument("--variant", choices=["full", "restricted"], default="restricted")
    s.add_argument("--angle", default="harmonic")
    s.add_argument("--samples", type=int, default=10**6)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cache", default=None)
    s.add_argument("--output", default=None, help="table JSON path")
    s.add_argument("--drop-below-sigma", type=float, default=None, metavar="K",
                   help="drop weights with |w| < K * std_error")
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_star)

    for name, func, help_ in (("assoc", cmd_assoc, "associativity defects of a table"),
                              ("cbh-compare", cmd_compare, "compare a table with the Gutt product")):
        a = sub.add_parser(name, parents=[common], help=help_, aliases=["compare"] if name == "cbh-compare" else [])
        a.add_argument("--table", required=True)
        a.add_argument("--max-degree", type=int, default=2)
        a.add_argument("--abs-tol", type=float, default=0.0, help="absolute floor of the budget")
        a.add_argument("--n-sigma", type=float, default=3.0)
        a.set_defaults(func=func)

    g = sub.add_parser("algebras", parents=[common], help="list bundled Lie algebras")
    g.add_argument("--show", default=None, help="print one algebra config")
    g.set_defaults(func=cmd_algebras)

    c = sub.add_parser("cache", parents=[common], help="inspect or clear a weight cache")
    c.add_argument("--cache", required=True)
    c.add_argument("--clear", action="store_true")
    c.set_defaults(func=cmd_cache)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
