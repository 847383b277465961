"""Admissible graphs: representation, enumeration and filters.

Vertices are integers.  First-type (aerial) vertices are ``0..n-1`` and
second-type (ground) vertices are ``n..n+m-1``.  Only out-stars of aerial
vertices are stored, in label order, so every edge starts at an aerial
vertex by construction.

The text key ``n;m;star1;...;starn`` is 1-based, with ground targets
prefixed by ``g``, e.g. ``2;2;g1,2;g1,g2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property


class GraphKeyError(ValueError):
    pass


@dataclass(frozen=True)
class AdmissibleGraph:
    n: int
    m: int
    stars: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        stars = tuple(tuple(s) for s in self.stars)
        object.__setattr__(self, "stars", stars)
        if self.n < 0 or self.m < 0:
            raise ValueError("vertex counts must be non-negative")
        if len(stars) != self.n:
            raise ValueError(f"need {self.n} stars, got {len(stars)}")
        for k, star in enumerate(stars):
            for t in star:
                if not 0 <= t < self.n + self.m:
                    raise ValueError(f"target {t} out of range")
                if t == k:
                    raise ValueError(f"loop at vertex {k + 1}")
            if len(set(star)) != len(star):
                raise ValueError(f"multiple edges in star of vertex {k + 1}")

    def is_ground(self, v: int) -> bool:
        return v >= self.n

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.stars)

    @property
    def out_degrees(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.stars)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """Edges in global order: vertex-major, then star label order."""
        return tuple((k, t) for k, star in enumerate(self.stars) for t in star)

    def in_degrees(self) -> list[int]:
        deg = [0] * (self.n + self.m)
        for _, t in self.edges:
            deg[t] += 1
        return deg

    @property
    def key(self) -> str:
        return canonical_key(self)

    def __str__(self):
        return self.key


def _target_str(g: AdmissibleGraph, t: int) -> str:
    return f"g{t - g.n + 1}" if g.is_ground(t) else str(t + 1)


def canonical_key(g: AdmissibleGraph) -> str:
    stars = [",".join(_target_str(g, t) for t in star) for star in g.stars]
    return ";".join([str(g.n), str(g.m), *stars])


def parse_key(key: str) -> AdmissibleGraph:
    parts = key.strip().split(";")
    try:
        n, m = int(parts[0]), int(parts[1])
    except (ValueError, IndexError):
        raise GraphKeyError(f"malformed graph key {key!r}") from None
    if len(parts) != n + 2:
        raise GraphKeyError(f"graph key {key!r} should list {n} stars")
    stars = []
    for text in parts[2:]:
        star = []
        for tok in filter(None, text.split(",")):
            try:
                star.append(n + int(tok[1:]) - 1 if tok.startswith("g") else int(tok) - 1)
            except ValueError:
                raise GraphKeyError(f"bad target {tok!r} in graph key {key!r}") from None
        stars.append(tuple(star))
    try:
        return AdmissibleGraph(n, m, tuple(stars))
    except ValueError as exc:
        raise GraphKeyError(f"invalid graph key {key!r}: {exc}") from None


def _compositions(total: int, parts: int, cap: int):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for first in range(min(total, cap) + 1):
        for rest in _compositions(total - first, parts - 1, cap):
            yield (first, *rest)


def enumerate_graphs(n: int, m: int, edge_count: int) -> list[AdmissibleGraph]:
    """All labeled admissible graphs with the given vertex and edge counts.

    Every ordering of every star is a distinct graph.  The result is sorted
    lexicographically by star target lists.
    """
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 and m >= 0")
    cap = n - 1 + m
    out = []
    for degs in _compositions(edge_count, n, cap):
        choices = [
            list(itertools.permutations([t for t in range(n + m) if t != k], d)) for k, d in enumerate(degs)
        ]
        for stars in itertools.product(*choices):
            out.append(AdmissibleGraph(n, m, stars))
    out.sort(key=lambda g: g.stars)
    return out


def aerial_edges(g: AdmissibleGraph) -> list[tuple[int, int]]:
    return [(s, t) for s, t in g.edges if not g.is_ground(t)]


def is_restricted(g: AdmissibleGraph) -> bool:
    """True iff the undirected multigraph of aerial-to-aerial edges is a forest."""
    parent = list(range(g.n))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for s, t in aerial_edges(g):
        a, b = find(s), find(t)
        if a == b:
            return False
        parent[a] = b
    return True


def has_oriented_aerial_cycle(g: AdmissibleGraph) -> bool:
    adj = {v: [t for t in g.stars[v] if not g.is_ground(t)] for v in range(g.n)}
    state = [0] * g.n  # 0 new, 1 on stack, 2 done

    def visit(v):
        state[v] = 1
        for w in adj[v]:
            if state[w] == 1 or (state[w] == 0 and visit(w)):
                return True
        state[v] = 2
        return False

    return any(state[v] == 0 and visit(v) for v in range(g.n))


def linear_nonzero(g: AdmissibleGraph) -> bool:
    """False when some aerial vertex has in-degree >= 2.

    Such a graph differentiates a linear coefficient twice, so its operator
    vanishes on polyvector fields with linear coefficients.
    """
    deg = g.in_degrees()
    return all(deg[v] <= 1 for v in range(g.n))


def ground_covered(g: AdmissibleGraph) -> bool:
    """True iff every ground vertex receives at least one edge.

    Otherwise the weight vanishes: the form does not depend on that ground
    point, so it is pulled back from a lower-dimensional space.
    """
    deg = g.in_degrees()
    return all(deg[v] >= 1 for v in range(g.n, g.n + g.m))
