import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from linstar.algebra import (
    JacobiError,
    LieAlgebra,
    Polynomial,
    PolyVectorField,
    bundled_algebras,
    jacobi_check,
    load_algebra,
    monomials,
    poisson_bivector,
    poisson_bracket,
    schouten_bracket_bivectors,
)

small = st.integers(-3, 3).map(Fraction)


@st.composite
def polynomials(draw, dim=3, max_degree=3):
    exps = draw(st.lists(st.tuples(*[st.integers(0, max_degree)] * dim), max_size=4))
    return Polynomial(dim, {e: draw(small) for e in exps})


@st.composite
def structure_constants(draw, dim=3):
    brackets = {}
    for i, j in itertools.combinations(range(dim), 2):
        for k in range(dim):
            c = draw(st.integers(-2, 2))
            if c:
                brackets[(i, j)] = {**brackets.get((i, j), {}), k: c}
    return LieAlgebra.from_brackets(dim, brackets)


# polynomials ---------------------------------------------------------------

def test_polynomial_basics():
    x1, x2, x3 = (Polynomial.variable(3, i) for i in range(3))
    p = (x1 + 2 * x2) * x3 - x3 * x1
    assert p == 2 * x2 * x3
    assert p.degree() == 2
    assert (x1 ** 3).partial(0) == 3 * x1 ** 2
    assert (x1 ** 2 * x2).derivative((2, 1, 0)) == 2
    assert str(x1 * x2 - x3) == "x1*x2 - x3"
    assert Polynomial.zero(3).degree() == -1 or not Polynomial.zero(3)


def test_polynomial_dimension_mismatch():
    with pytest.raises(ValueError):
        Polynomial.variable(2, 0) + Polynomial.variable(3, 0)


@given(polynomials(), polynomials(), polynomials())
def test_ring_axioms(a, b, c):
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a


@given(polynomials(), polynomials(), st.integers(0, 2))
def test_leibniz(a, b, i):
    assert (a * b).partial(i) == a.partial(i) * b + a * b.partial(i)


def test_monomial_count():
    assert len(monomials(3, 2)) == 10
    assert len(monomials(3, 2, min_degree=2)) == 6


# Lie algebras ----------------------------------------------------------------

def test_bundled_algebras_satisfy_jacobi():
    for name in bundled_algebras():
        ok, bad = jacobi_check(load_algebra(name))
        assert ok and not bad, name


def test_so3_brackets():
    L = load_algebra("so3")
    x1, x2, x3 = (Polynomial.variable(3, i) for i in range(3))
    pi = poisson_bivector(L)
    assert poisson_bracket(pi, x1, x2) == x3
    assert poisson_bracket(pi, x2, x3) == x1
    assert poisson_bracket(pi, x3, x1) == x2


def test_antisymmetry_enforced():
    with pytest.raises(ValueError):
        LieAlgebra(2, {(0, 1, 0): Fraction(1)})


def test_jacobi_witness():
    L = LieAlgebra.from_brackets(3, {(0, 1): {2: 1}, (1, 2): {0: 1}, (0, 2): {2: 1}}, name="bad")
    ok, bad = jacobi_check(L)
    assert not ok and bad
    err = JacobiError(L, bad)
    assert "bad" in str(err)


def test_config_roundtrip(tmp_path):
    for name in bundled_algebras():
        L = load_algebra(name)
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(L.to_config()))
        assert load_algebra(path) == L


def test_missing_algebra():
    with pytest.raises(FileNotFoundError):
        load_algebra("no-such-algebra")


@given(structure_constants())
def test_jacobi_matches_schouten(L):
    pi = poisson_bivector(L)
    ok, _ = jacobi_check(L)
    assert ok == schouten_bracket_bivectors(pi, pi).is_zero()


def test_schouten_rejects_wrong_degree():
    L = load_algebra("so3")
    v = PolyVectorField(3, 1, {(0,): Polynomial.variable(3, 1)})
    with pytest.raises(ValueError):
        schouten_bracket_bivectors(poisson_bivector(L), v)


def test_polyvector_skew_identification():
    x2 = Polynomial.variable(3, 1)
    g = PolyVectorField(3, 2, {(0, 2): x2})
    assert g.coefficient((0, 2)) == x2
    assert g.coefficient((2, 0)) == -x2
    assert not g.coefficient((0, 0))
