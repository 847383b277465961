"""Graph star products for linear Poisson structures, with a CBH oracle."""

from .algebra import LieAlgebra, Polynomial, PolyVectorField, jacobi_check, load_algebra, poisson_bivector
from .graphs import AdmissibleGraph, enumerate_graphs, is_restricted, parse_key
from .weights import WeightCache, compute_weight
from .star import StarProductTable, associativity_defect, build_table, star_multiply
from .cbh import bch_series, compare_tables, gutt_star

__all__ = [
    "AdmissibleGraph",
    "LieAlgebra",
    "PolyVectorField",
    "Polynomial",
    "StarProductTable",
    "WeightCache",
    "associativity_defect",
    "bch_series",
    "build_table",
    "compare_tables",
    "compute_weight",
    "enumerate_graphs",
    "gutt_star",
    "is_restricted",
    "jacobi_check",
    "load_algebra",
    "parse_key",
    "poisson_bivector",
    "star_multiply",
]
