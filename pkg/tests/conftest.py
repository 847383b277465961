import time

import pytest
from hypothesis import HealthCheck, settings

from linstar.algebra import Polynomial, load_algebra
from linstar.star import build_table
from linstar.weights import WeightCache

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FULL_SAMPLES = 10**6
TIMINGS: dict[str, float] = {}


@pytest.fixture(scope="session")
def weight_cache(tmp_path_factory):
    return WeightCache(tmp_path_factory.mktemp("weights") / "cache.txt")


@pytest.fixture(scope="session")
def so3_restricted(weight_cache):
    # built without the cache so the determinism check can redo it from scratch
    start = time.perf_counter()
    t = build_table(load_algebra("so3"), 2, "restricted", samples=FULL_SAMPLES, seed=0)
    TIMINGS["so3_restricted_build"] = time.perf_counter() - start
    for row in t.entries:
        for e in row:
            weight_cache.put(e.weight)
    return t


@pytest.fixture(scope="session")
def so3_full(weight_cache, so3_restricted):
    return build_table(load_algebra("so3"), 2, "full", samples=FULL_SAMPLES, seed=0, cache=weight_cache)


@pytest.fixture(scope="session")
def heisenberg_restricted(weight_cache, so3_restricted):
    return build_table(load_algebra("heisenberg"), 2, "restricted", samples=FULL_SAMPLES, seed=0,
                       cache=weight_cache)


@pytest.fixture(scope="session")
def small_cache(tmp_path_factory):
    """Cache for the low-sample tables used by the unit tests."""
    return WeightCache(tmp_path_factory.mktemp("weights-small") / "cache.txt")


@pytest.fixture(scope="session")
def quick_tables(small_cache):
    out = {}
    for name in ("abelian", "heisenberg", "so3", "sl2"):
        out[name] = build_table(load_algebra(name), 2, "restricted", samples=2**14, seed=0, cache=small_cache)
    return out


def xs(dim):
    return [Polynomial.variable(dim, i) for i in range(dim)]
