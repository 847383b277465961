"""Convergence of quasi-Monte Carlo weights against known values.

Prints value, standard error and z-score per sample size for a few graphs
with closed-form weights, in both gauges.

    python3 scripts/weight_convergence.py --max-log2 20
"""

import argparse
from dataclasses import dataclass

from linstar.graphs import parse_key
from linstar.weights import compute_weight

KNOWN = {
    "1;2;g1,g2": 1 / 4,
    "2;2;g1,g2;g1,g2": 1 / 16,
    "2;2;2,g1;g1,g2": -1 / 48,
    "2;2;g1,2;g1,g2": 1 / 48,
}


@dataclass
class Config:
    min_log2: int = 12
    max_log2: int = 20
    seed: int = 0


def main(cfg: Config):
    print(f"{'graph':<18} {'gauge':<9} {'samples':>8} {'value':>12} {'std_error':>10} {'z':>6}")
    for key, exact in KNOWN.items():
        g = parse_key(key)
        for gauge in ("standard", "alternate"):
            for k in range(cfg.min_log2, cfg.max_log2 + 1, 2):
                w = compute_weight(g, samples=2**k, seed=cfg.seed, gauge=gauge)
                z = (w.value - exact) / w.std_error if w.std_error else 0.0
                print(f"{key:<18} {gauge:<9} {w.samples:>8} {w.value:>12.8f} {w.std_error:>10.2e} {z:>6.2f}")


if __name__ == "__main__":
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--min-log2", type=int, default=Config.min_log2)
    p.add_argument("--max-log2", type=int, default=Config.max_log2)
    p.add_argument("--seed", type=int, default=Config.seed)
    a = p.parse_args()
    main(Config(a.min_log2, a.max_log2, a.seed))
