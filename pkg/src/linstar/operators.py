"""Polydifferential operators of admissible graphs, evaluated exactly.

For a graph with fields ``gamma_1..gamma_n`` on the aerial vertices and
functions ``f_1..f_m`` on the ground vertices, the operator is a sum over
all assignments of coordinate indices to edges.  Each aerial vertex carries
the coefficient of its field contracted with the indices on its out-star,
every vertex is differentiated along the indices of its incoming edges, and
the vertex factors are multiplied.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Sequence

from .algebra import Exponent, Polynomial, PolyVectorField
from .graphs import AdmissibleGraph


def _check_inputs(g: AdmissibleGraph, fields: Sequence[PolyVectorField], dim: int):
    if len(fields) != g.n:
        raise ValueError(f"graph has {g.n} aerial vertices but {len(fields)} fields were given")
    if any(f.dim != dim for f in fields):
        raise ValueError("field dimension mismatch")


def graph_operator_terms(g: AdmissibleGraph, fields: Sequence[PolyVectorField],
                         dim: int | None = None) -> dict[tuple[Exponent, ...], Polynomial]:
    """Symbolic form of the operator as ``{(a_1, ..., a_m): coefficient}``.

    The operator acts as ``sum coefficient * prod_j d^{a_j} f_j`` where
    ``a_j`` is the derivative multi-index applied to the j-th ground slot.
    Empty when some ``#Star(i)`` differs from the degree of ``fields[i]``.
    """
    dim = fields[0].dim if fields else dim
    if dim is None:
        raise ValueError("dimension needed when the graph has no aerial vertices")
    _check_inputs(g, fields, dim)
    if any(len(star) != f.degree for star, f in zip(g.stars, fields)):
        return {}
    incoming: list[list[int]] = [[] for _ in range(g.n + g.m)]
    for r, (_, t) in enumerate(g.edges):
        incoming[t].append(r)
    star_rows = []
    r = 0
    for star in g.stars:
        star_rows.append(list(range(r, r + len(star))))
        r += len(star)

    # candidate index tuples per aerial vertex with non-zero coefficient
    options = []
    for k, f in enumerate(fields):
        opts = []
        for idx in itertools.product(range(dim), repeat=len(g.stars[k])):
            coef = f.coefficient(idx)
            if coef:
                opts.append((idx, coef))
        if not opts:
            return {}
        options.append(opts)

    out: dict[tuple[Exponent, ...], Polynomial] = {}
    assignment = [0] * g.edge_count
    for choice in itertools.product(*options):
        for k, (idx, _) in enumerate(choice):
            for row, i in zip(star_rows[k], idx):
                assignment[row] = i
        prod = Polynomial.constant(dim)
        for k, (_, coef) in enumerate(choice):
            orders = [0] * dim
            for row in incoming[k]:
                orders[assignment[row]] += 1
            term = coef.derivative(tuple(orders)) if incoming[k] else coef
            if not term:
                prod = None
                break
            prod = prod * term
        if prod is None:
            continue
        slots = []
        for j in range(g.m):
            orders = [0] * dim
            for row in incoming[g.n + j]:
                orders[assignment[row]] += 1
            slots.append(tuple(orders))
        key = tuple(slots)
        out[key] = out[key] + prod if key in out else prod
    return {k: v for k, v in out.items() if v}


def apply_terms(terms: dict[tuple[Exponent, ...], Polynomial], functions: Sequence[Polynomial],
                dim: int) -> Polynomial:
    out = Polynomial.zero(dim)
    for slots, coef in terms.items():
        prod = coef
        for a, f in zip(slots, functions):
            d = f.derivative(a)
            if not d:
                prod = None
                break
            prod = prod * d
        if prod is not None:
            out = out + prod
    return out


def evaluate_graph_operator(g: AdmissibleGraph, fields: Sequence[PolyVectorField],
                            functions: Sequence[Polynomial]) -> Polynomial:
    """The function ``U_Gamma(gamma_1 ... gamma_n)(f_1 ... f_m)`` as an exact polynomial."""
    if len(functions) != g.m:
        raise ValueError(f"graph has {g.m} ground vertices but {len(functions)} functions were given")
    dims = {f.dim for f in fields} | {f.dim for f in functions}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch among inputs: {sorted(dims)}")
    dim = dims.pop()
    return apply_terms(graph_operator_terms(g, fields, dim), functions, dim)


def hkr_direct(gamma: PolyVectorField, functions: Sequence[Polynomial]) -> Polynomial:
    """Exact HKR operator ``(1/k!) sum_I <gamma, dx^I> d_{I_1} f_1 ... d_{I_k} f_k``."""
    k = gamma.degree
    if len(functions) != k:
        raise ValueError(f"degree-{k} field needs {k} functions, got {len(functions)}")
    out = Polynomial.zero(gamma.dim)
    for idx in itertools.product(range(gamma.dim), repeat=k):
        coef = gamma.coefficient(idx)
        if not coef:
            continue
        term = coef
        for i, f in zip(idx, functions):
            term = term * f.partial(i)
        out = out + term
    return out * Fraction(1, math.factorial(k))


def hkr_component(gamma: PolyVectorField, functions: Sequence[Polynomial], samples: int = 10**5,
                  seed: int = 0, cache=None):
    """First Taylor component ``U_1(gamma)`` assembled from one-vertex graphs.

    Sums ``W_Gamma * U_Gamma(gamma)`` over the graphs with one aerial
    vertex, ``k = deg(gamma)`` ground vertices and ``k`` edges.  Returns a
    :class:`~linstar.measured.NumericPolynomial` whose errors come from the
    weight integration; compare with :func:`hkr_direct`.
    """
    from .graphs import enumerate_graphs
    from .measured import NumericPolynomial, weighted_sum
    from .weights import HARMONIC, get_or_compute

    k = gamma.degree
    if len(functions) != k:
        raise ValueError(f"degree-{k} field needs {k} functions, got {len(functions)}")
    contribs, sigmas = [], {}
    for g in enumerate_graphs(1, k, k):
        p = evaluate_graph_operator(g, [gamma], functions)
        if not p:
            continue
        w = get_or_compute(g, HARMONIC, samples, seed, cache)
        contribs.append((g.key, w.value, p))
        sigmas[g.key] = w.std_error
    return NumericPolynomial.from_measured(gamma.dim, weighted_sum(contribs), sigmas)
