"""Restricted vs full star products on so(3): associativity and CBH agreement.

    python3 scripts/run_headline.py --samples 1000000 --cache weights.txt --out results/
"""

import argparse
import json
import time
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

from linstar.algebra import load_algebra
from linstar.cbh import compare_tables, format_comparison
from linstar.star import associativity_report, build_table
from linstar.weights import WeightCache


@dataclass
class Config:
    algebras: tuple = ("so3", "heisenberg", "sl2")
    order: int = 2
    samples: int = 10**6
    seed: int = 0
    max_degree: int = 2
    abs_tol: float = 5e-2
    cache: str | None = None
    out: str = "results"


def main(cfg: Config):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cache = WeightCache(cfg.cache) if cfg.cache else None
    summary = {"config": asdict(cfg), "runs": []}
    for name in cfg.algebras:
        for variant in ("restricted", "full"):
            start = time.perf_counter()
            t = build_table(load_algebra(name), cfg.order, variant, samples=cfg.samples, seed=cfg.seed, cache=cache)
            built = time.perf_counter() - start
            t.save(out / f"{name}-{variant}-N{cfg.order}.json")
            assoc = associativity_report(t, cfg.max_degree, cfg.abs_tol)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                cmp = compare_tables(t, cfg.max_degree, abs_tol=cfg.abs_tol)
            (out / f"{name}-{variant}-cbh.txt").write_text(format_comparison(cmp) + "\n")
            row = {
                "algebra": name,
                "variant": variant,
                "graphs": [len(r) for r in t.entries],
                "build_seconds": round(built, 1),
                "assoc_max_abs": [o["max_abs"] for o in assoc["orders"]],
                "assoc_pass": assoc["pass"],
                "cbh_max_abs_diff": [o["max_abs_diff"] for o in cmp["orders"]],
                "cbh_pass": cmp["pass"],
            }
            summary["runs"].append(row)
            print(f"{name:<11} {variant:<10} graphs {row['graphs']}  assoc {'ok' if assoc['pass'] else 'FAIL'} "
                  f"(max {max(row['assoc_max_abs']):.1e})  cbh {'equal' if cmp['pass'] else 'differs'} "
                  f"(max {max(row['cbh_max_abs_diff']):.1e})  {built:.0f} s")
    (out / "summary.json").write_text(json.dumps(summary, indent=1) + "\n")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--algebras", nargs="+", default=list(Config.algebras))
    p.add_argument("--order", type=int, default=Config.order)
    p.add_argument("--samples", type=int, default=Config.samples)
    p.add_argument("--seed", type=int, default=Config.seed)
    p.add_argument("--max-degree", type=int, default=Config.max_degree)
    p.add_argument("--abs-tol", type=float, default=Config.abs_tol)
    p.add_argument("--cache", default=None)
    p.add_argument("--out", default=Config.out)
    a = p.parse_args()
    main(Config(tuple(a.algebras), a.order, a.samples, a.seed, a.max_degree, a.abs_tol, a.cache, a.out))
