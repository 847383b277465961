"""Star products assembled from graph weights and operators.

For a linear Poisson bivector ``alpha`` the product is

    f * g = f g + sum_{n >= 1} hbar^n B_n(f, g),
    B_n = (1/n!) sum_Gamma W_Gamma U_Gamma(alpha, ..., alpha)

with Gamma running over graphs with ``n`` aerial vertices, two ground
vertices and ``2n`` edges.  The ``restricted`` variant keeps only graphs
whose aerial edges form a forest.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Mapping

from .algebra import (
    Exponent,
    JacobiError,
    LieAlgebra,
    Polynomial,
    format_monomial,
    jacobi_check,
    monomials,
    poisson_bivector,
)
from .graphs import (
    AdmissibleGraph,
    enumerate_graphs,
    ground_covered,
    is_restricted,
    linear_nonzero,
    parse_key,
)
from .measured import Measured, mpoly_add, weighted_sum
from .operators import apply_terms, graph_operator_terms
from .weights import HARMONIC, AngleMap, Weight, WeightCache, compute_weight, get_angle_map

VARIANTS = ("full", "restricted")
# absolute slack for double rounding when a coefficient carries no weight error
BUDGET_FLOOR = 1e-9


@dataclass
class HbarSeries:
    """Truncated series in hbar; entry ``n`` maps exponents to coefficients.

    ``errors`` (same shape) holds propagated weight standard errors, or is
    ``None`` for exact series.
    """

    dim: int
    order: int
    coefficients: list[dict[Exponent, object]]
    errors: list[dict[Exponent, float]] | None = None

    def coefficient(self, n: int, exp: Exponent):
        return self.coefficients[n].get(tuple(exp), 0)

    def error(self, n: int, exp: Exponent) -> float:
        return self.errors[n].get(tuple(exp), 0.0) if self.errors else 0.0

    def max_abs(self, n: int) -> float:
        return max((abs(float(c)) for c in self.coefficients[n].values()), default=0.0)

    def is_zero(self, n: int) -> bool:
        return not any(self.coefficients[n].values())

    def polynomial(self, n: int) -> Polynomial:
        """Order-``n`` coefficient as a polynomial (floats are converted exactly)."""
        return Polynomial(self.dim, {e: Fraction(c) for e, c in self.coefficients[n].items()})

    def __str__(self):
        parts = []
        for n, coeffs in enumerate(self.coefficients):
            if not coeffs:
                continue
            terms = []
            for exp in sorted(coeffs, key=lambda e: (-sum(e), tuple(-x for x in e))):
                c = coeffs[exp]
                mono = format_monomial(exp) or "1"
                if self.errors and self.errors[n].get(exp, 0.0):
                    terms.append(f"({float(c):.6g}±{self.errors[n].get(exp, 0.0):.1e})*{mono}")
                else:
                    terms.append(f"({c})*{mono}")
            body = " + ".join(terms)
            parts.append(body if n == 0 else f"hbar^{n}*[{body}]" if n > 1 else f"hbar*[{body}]")
        return " + ".join(parts) or "0"


@dataclass(frozen=True)
class TableEntry:
    graph: AdmissibleGraph
    weight: Weight


@dataclass
class StarProductTable:
    algebra: LieAlgebra
    variant: str
    order: int
    angle_map: str
    samples: int
    seed: int
    entries: list[list[TableEntry]]
    _terms: dict = field(default_factory=dict, repr=False)
    _mono: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def sigmas(self) -> dict[str, float]:
        return {e.graph.key: e.weight.std_error for row in self.entries for e in row}

    def budget(self, n: int) -> float:
        """Root-sum-square of the weight errors at order ``n``."""
        return math.sqrt(math.fsum(e.weight.std_error ** 2 for e in self.entries[n]))

    def terms(self, g: AdmissibleGraph):
        key = g.key
        if key not in self._terms:
            alpha = poisson_bivector(self.algebra)
            self._terms[key] = graph_operator_terms(g, [alpha] * g.n, self.dim)
        return self._terms[key]

    def with_weights(self, values: Mapping[str, float]) -> "StarProductTable":
        """Copy with some weight values replaced (used to inject faults)."""
        rows = [[TableEntry(e.graph, replace(e.weight, value=values.get(e.graph.key, e.weight.value)))
                 for e in row] for row in self.entries]
        return replace(self, entries=rows, _terms=dict(self._terms), _mono={})

    # serialization --------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "algebra": self.algebra.name,
            "algebra_config": self.algebra.to_config(),
            "variant": self.variant,
            "order": self.order,
            "angle_map": self.angle_map,
            "samples": self.samples,
            "seed": self.seed,
            "orders": [
                {
                    "order": n,
                    "std_error_budget": self.budget(n),
                    "graphs": [
                        {"graph_key": e.graph.key, "weight": e.weight.value,
                         "std_error": e.weight.std_error, "samples": e.weight.samples}
                        for e in row
                    ],
                }
                for n, row in enumerate(self.entries)
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1) + "\n")

    @classmethod
    def from_json(cls, doc: Mapping) -> "StarProductTable":
        algebra = LieAlgebra.from_config(doc["algebra_config"])
        rows = []
        for block in doc["orders"]:
            row = []
            for item in block["graphs"]:
                g = parse_key(item["graph_key"])
                w = Weight(item["graph_key"], doc["angle_map"], float(item["weight"]),
                           float(item["std_error"]), int(item.get("samples", doc["samples"])), int(doc["seed"]))
                row.append(TableEntry(g, w))
            rows.append(row)
        return cls(algebra, doc["variant"], int(doc["order"]), doc["angle_map"],
                   int(doc["samples"]), int(doc["seed"]), rows)

    @classmethod
    def load(cls, path: str | Path) -> "StarProductTable":
        return cls.from_json(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------------------
# table construction


def candidate_graphs(L: LieAlgebra, n: int, variant: str) -> list[AdmissibleGraph]:
    """Order-``n`` graphs that can contribute for the linear bivector of ``L``.

    Filters, in order: two edges per aerial vertex (bivector degree),
    restricted class (if requested), in-degree <= 1 on aerial vertices,
    every ground vertex hit, and a non-vanishing operator.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    alpha = poisson_bivector(L)
    out = []
    for g in enumerate_graphs(n, 2, 2 * n):
        if g.out_degrees != (2,) * n:
            continue
        if variant == "restricted" and not is_restricted(g):
            continue
        if not linear_nonzero(g) or not ground_covered(g):
            continue
        if not graph_operator_terms(g, [alpha] * n, L.dim):
            continue
        out.append(g)
    return out


def _weight_job(args):
    g, angle_id, samples, seed = args
    return compute_weight(g, get_angle_map(angle_id), samples, seed)


def build_table(L: LieAlgebra, order: int = 2, variant: str = "restricted", angle: AngleMap = HARMONIC,
                samples: int = 10**6, seed: int = 0, cache: WeightCache | None = None,
                drop_below_sigma: float | None = None, workers: int = 1) -> StarProductTable:
    ok, bad = jacobi_check(L)
    if not ok:
        raise JacobiError(L, bad)
    if order < 0:
        raise ValueError("order must be non-negative")
    graphs = [candidate_graphs(L, n, variant) if n else [] for n in range(order + 1)]

    weights: dict[str, Weight] = {}
    todo = []
    for g in itertools.chain.from_iterable(graphs):
        hit = cache.get(g.key, angle.identifier, seed=seed) if cache is not None else None
        if hit is not None and hit.samples >= samples:
            weights[g.key] = hit
        else:
            todo.append(g)
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_weight_job, [(g, angle.identifier, samples, seed) for g in todo]))
    else:
        results = [compute_weight(g, angle, samples, seed) for g in todo]
    for w in results:
        weights[w.graph_key] = w
        if cache is not None:
            cache.put(w)

    rows = []
    for gs in graphs:
        row = []
        for g in gs:
            w = weights[g.key]
            if drop_below_sigma is not None and abs(w.value) < drop_below_sigma * w.std_error:
                continue
            row.append(TableEntry(g, w))
        rows.append(row)
    return StarProductTable(L, variant, order, angle.identifier, samples, seed, rows)


# ---------------------------------------------------------------------------
# products


def _monomial_star(t: StarProductTable, ea: Exponent, eb: Exponent) -> list[dict]:
    key = (ea, eb)
    if key not in t._mono:
        fa = Polynomial.monomial(ea)
        fb = Polynomial.monomial(eb)
        out = [{tuple(x + y for x, y in zip(ea, eb)): Measured(1.0)}]
        for n in range(1, t.order + 1):
            contribs = []
            for e in t.entries[n]:
                p = apply_terms(t.terms(e.graph), [fa, fb], t.dim)
                if p:
                    contribs.append((e.graph.key, e.weight.value, p))
            out.append(weighted_sum(contribs, Fraction(1, math.factorial(n))))
        t._mono[key] = out
    return t._mono[key]


def _star_series(t: StarProductTable, F: list[dict], G: list[dict]) -> list[dict]:
    N = t.order
    out: list[dict] = [{} for _ in range(N + 1)]
    for i, Fi in enumerate(F):
        for j, Gj in enumerate(G):
            if i + j > N:
                continue
            for ea, ca in Fi.items():
                for eb, cb in Gj.items():
                    c = ca * cb
                    prods = _monomial_star(t, ea, eb)
                    for n in range(N + 1 - i - j):
                        out[i + j + n] = mpoly_add(out[i + j + n], prods[n], c)
    return out


def _as_series(t: StarProductTable, f: Polynomial) -> list[dict]:
    if f.dim != t.dim:
        raise ValueError(f"dimension mismatch: table has {t.dim}, polynomial has {f.dim}")
    return [{e: Measured(float(c)) for e, c in f.items()}]


def _to_hbar(t: StarProductTable, series: list[dict]) -> HbarSeries:
    sig = t.sigmas
    coeffs = [{e: c.value for e, c in s.items()} for s in series]
    errors = [{e: c.std(sig) for e, c in s.items()} for s in series]
    return HbarSeries(t.dim, t.order, coeffs, errors)


def _sub(a: list[dict], b: list[dict]) -> list[dict]:
    return [mpoly_add(x, y, -1.0) for x, y in zip(a, b)]


def star_multiply(t: StarProductTable, f: Polynomial, g: Polynomial) -> HbarSeries:
    return _to_hbar(t, _star_series(t, _as_series(t, f), _as_series(t, g)))


def commutator_check(t: StarProductTable, f: Polynomial, g: Polynomial) -> HbarSeries:
    """``f*g - g*f``; its hbar^1 part should be the Poisson bracket."""
    F, G = _as_series(t, f), _as_series(t, g)
    return _to_hbar(t, _sub(_star_series(t, F, G), _star_series(t, G, F)))


def associativity_defect(t: StarProductTable, f: Polynomial, g: Polynomial, h: Polynomial) -> HbarSeries:
    """``(f*g)*h - f*(g*h)`` truncated at the table order."""
    F, G, H = (_as_series(t, p) for p in (f, g, h))
    left = _star_series(t, _star_series(t, F, G), H)
    right = _star_series(t, F, _star_series(t, G, H))
    return _to_hbar(t, _sub(left, right))


def budget(sigma: float, abs_tol: float, n_sigma: float = 3.0) -> float:
    return max(abs_tol, n_sigma * sigma, BUDGET_FLOOR)


def within_budget(value: float, sigma: float, abs_tol: float, n_sigma: float = 3.0) -> bool:
    return abs(value) < budget(sigma, abs_tol, n_sigma)


def associativity_report(t: StarProductTable, max_degree: int = 2, abs_tol: float = 5e-2,
                         n_sigma: float = 3.0) -> dict:
    """Worst defect per order over all monomial triples of degree <= ``max_degree``."""
    monos = [Polynomial.monomial(e) for e in monomials(t.dim, max_degree)]
    orders = [{"order": n, "max_abs": 0.0, "sigma_at_max": 0.0, "worst_ratio": 0.0, "worst_triple": None}
              for n in range(t.order + 1)]
    count = 0
    for f, g, h in itertools.product(monos, repeat=3):
        d = associativity_defect(t, f, g, h)
        count += 1
        for n in range(t.order + 1):
            rec = orders[n]
            for exp, c in d.coefficients[n].items():
                sigma = d.error(n, exp)
                ratio = abs(c) / budget(sigma, abs_tol, n_sigma)
                if abs(c) > rec["max_abs"]:
                    rec["max_abs"], rec["sigma_at_max"] = abs(c), sigma
                if ratio > rec["worst_ratio"]:
                    rec["worst_ratio"] = ratio
                    rec["worst_triple"] = [str(f), str(g), str(h)]
    for rec in orders:
        rec["pass"] = rec["worst_ratio"] < 1.0
    return {
        "algebra": t.algebra.name,
        "variant": t.variant,
        "order": t.order,
        "max_degree": max_degree,
        "abs_tol": abs_tol,
        "n_sigma": n_sigma,
        "triples": count,
        "orders": orders,
        "pass": all(r["pass"] for r in orders),
    }
