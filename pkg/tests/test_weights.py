import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from linstar.graphs import enumerate_graphs, ground_covered, parse_key
from linstar.weights import (
    HARMONIC,
    Configuration,
    WeightCache,
    WeightDimensionError,
    compute_weight,
    get_angle_map,
    harmonic_angle,
    harmonic_angle_gradient,
    integrand,
    weight_prefactor,
)

coord = st.floats(-5, 5, allow_nan=False)
height = st.floats(0.05, 5, allow_nan=False)


def wrap(a):
    return (a + math.pi) % (2 * math.pi) - math.pi


# angle map -------------------------------------------------------------------

def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        p = complex(rng.uniform(-3, 3), rng.uniform(0.1, 3))
        q = complex(rng.uniform(-3, 3), rng.uniform(0.0, 3) if rng.random() < 0.5 else 0.0)
        if abs(p - q) < 0.05:
            continue
        grad = np.array(harmonic_angle_gradient(p, q))
        h = 1e-6
        fd = []
        for dp, dq in ((h, 0), (1j * h, 0), (0, h), (0, 1j * h)):
            hi = HARMONIC.angle(p + dp, q + dq)
            lo = HARMONIC.angle(p - dp, q - dq)
            fd.append(wrap(hi - lo) / (2 * h))
        worst = max(worst, np.linalg.norm(grad - fd) / np.linalg.norm(grad))
    assert worst < 1e-5


@given(coord, height, coord, st.floats(0, 5), st.floats(0.1, 10), coord)
def test_angle_invariant_under_affine_group(px, py, qx, qy, a, b):
    p, q = complex(px, py), complex(qx, qy)
    if abs(p - q) < 1e-3:
        return
    before = harmonic_angle(p, q)
    after = harmonic_angle(a * p + b, a * q + b)
    assert abs(wrap(before - after)) < 1e-9


@given(coord, height, coord)
def test_angle_to_real_point_doubles_argument(px, py, q):
    p = complex(px, py)
    expected = 2 * math.atan2(-py, q - px)
    assert abs(wrap(harmonic_angle(p, q) - expected)) < 1e-9


def test_angle_edge_cases():
    with pytest.raises(ValueError):
        harmonic_angle(1j, 1j)
    with pytest.raises(ValueError):
        harmonic_angle_gradient(0.5j, 0.5j)
    assert harmonic_angle(0.0, 1.0) == 0.0
    # straight up the geodesic from p: angle 0
    assert abs(wrap(harmonic_angle(1j, 2j))) < 1e-12
    with pytest.raises(ValueError):
        get_angle_map("nope")


# integrand ---------------------------------------------------------------------

def random_configuration(rng, n, m):
    aerial = [complex(0.5, 1.0) if m == 1 else 1j] if m < 2 else []
    if m == 1:
        th = rng.uniform(0.1, math.pi - 0.1)
        aerial = [complex(math.cos(th), math.sin(th))]
    while len(aerial) < n:
        aerial.append(complex(rng.uniform(-2, 3), rng.uniform(0.1, 2)))
    ground = [0.0, 1.0] + sorted(rng.uniform(1.1, 4, size=max(m - 2, 0)).tolist()) if m >= 2 else [0.0][:m]
    return Configuration(tuple(aerial), tuple(ground))


@pytest.mark.parametrize("key", ["1;2;g1,g2", "2;2;2,g1;g1,g2", "2;2;g1,g2;1,g2", "2;3;g1,g3;g2,1,g3"])
def test_row_swap_flips_sign(key):
    g = parse_key(key)
    rng = np.random.default_rng(1)
    for _ in range(20):
        c = random_configuration(rng, g.n, g.m)
        edges = list(g.edges)
        i, j = rng.choice(len(edges), size=2, replace=False)
        swapped = list(edges)
        swapped[i], swapped[j] = swapped[j], swapped[i]
        a = integrand(g, c)
        b = integrand(g, c, edges=swapped)
        assert b == pytest.approx(-a, rel=1e-12, abs=1e-14)


def test_dimension_check():
    with pytest.raises(WeightDimensionError, match="2n\\+m-2 = 2"):
        compute_weight(parse_key("1;2;g1"))
    with pytest.raises(WeightDimensionError):
        integrand(parse_key("1;1;"), Configuration((1j,), (0.0,)))


def test_prefactor():
    assert weight_prefactor(parse_key("1;2;g1,g2")) == pytest.approx(1 / (2 * (2 * math.pi) ** 2))


# weights -------------------------------------------------------------------------

def within(w, expected, k=4.0):
    return abs(w.value - expected) < k * w.std_error + 1e-12


def test_zero_dimensional_weights_exact():
    assert compute_weight(parse_key("1;0;")).value == 1.0
    w = compute_weight(parse_key("1;1;g1"))
    assert w.value == pytest.approx(1.0, abs=1e-14) and w.std_error == 0.0


@pytest.mark.parametrize("key,expected", [
    ("1;2;g1,g2", 0.25),
    ("1;2;g2,g1", -0.25),
    ("2;2;g1,g2;g1,g2", 1 / 16),
    ("2;2;2,g1;g1,g2", -1 / 48),
    ("2;2;g1,2;g1,g2", 1 / 48),
])
def test_known_weights(key, expected):
    w = compute_weight(parse_key(key), samples=2**16)
    assert w.std_error < 5e-3 * max(abs(expected), 0.05)
    assert within(w, expected)


def test_wedge_orderings_cancel():
    a = compute_weight(parse_key("1;2;g1,g2"), samples=2**15)
    b = compute_weight(parse_key("1;2;g2,g1"), samples=2**15)
    assert abs(a.value + b.value) < 4 * math.hypot(a.std_error, b.std_error)


def test_uncovered_ground_vertex_has_zero_weight():
    for g in enumerate_graphs(2, 2, 4):
        if g.out_degrees == (2, 2) and not ground_covered(g):
            w = compute_weight(g, samples=2**12)
            assert abs(w.value) < 4 * w.std_error + 1e-9
            break
    else:
        pytest.fail("no uncovered graph found")


@pytest.mark.parametrize("key", ["1;2;g1,g2", "2;2;g1,g2;g1,g2", "2;2;2,g1;g1,g2", "2;2;2,g1;1,g2",
                                 "2;2;g2,g1;g1,1"])
def test_gauge_independence(key):
    g = parse_key(key)
    a = compute_weight(g, samples=2**16, gauge="standard")
    b = compute_weight(g, samples=2**16, gauge="alternate")
    assert abs(a.value - b.value) < 4 * math.hypot(a.std_error, b.std_error) + 1e-12


def test_determinism_and_seed_dependence():
    g = parse_key("2;2;2,g1;1,g2")
    a = compute_weight(g, samples=2**13, seed=3)
    b = compute_weight(g, samples=2**13, seed=3)
    c = compute_weight(g, samples=2**13, seed=4)
    assert a == b
    assert a.value != c.value
    assert abs(a.value - c.value) < 4 * math.hypot(a.std_error, c.std_error)


def test_std_error_shrinks_with_samples():
    g = parse_key("2;2;2,g1;g1,g2")
    coarse = compute_weight(g, samples=2**12)
    fine = compute_weight(g, samples=2**17)
    assert fine.samples == 2**17
    assert fine.std_error < coarse.std_error / 2
    assert abs(fine.value - coarse.value) < 4 * math.hypot(fine.std_error, coarse.std_error)


# cache ------------------------------------------------------------------------------

def test_cache_roundtrip(tmp_path):
    cache = WeightCache(tmp_path / "w.txt")
    g = parse_key("1;2;g1,g2")
    small = compute_weight(g, samples=2**10)
    big = compute_weight(g, samples=2**12)
    cache.put(small)
    cache.put(big)
    assert cache.get(g.key, "harmonic") == big
    assert cache.get(g.key, "harmonic", seed=1) is None
    assert cache.get("1;2;g2,g1", "harmonic") is None
    assert WeightCache(tmp_path / "w.txt").load() == [small, big]


def test_cache_skips_corrupt_lines(tmp_path):
    path = tmp_path / "w.txt"
    path.write_text("1;2;g1,g2|harmonic|0.25|1e-6|1024|0\ngarbage line\n1;2;g2,g1|harmonic|x|1|1|0\n")
    cache = WeightCache(path)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        entries = cache.load()
    assert len(entries) == 1 and entries[0].value == 0.25
    assert len(caught) == 2 and ":2:" in str(caught[0].message)
