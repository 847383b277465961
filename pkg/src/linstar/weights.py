"""Configuration-space weights of admissible graphs.

The weight of a graph with ``n`` aerial and ``m`` ground vertices is

    W = prod_k 1/(#Star(k))!  *  (2 pi)^-(2n+m-2)  *  int_{C+_{n,m}} wedge_e dphi_e

estimated by randomized quasi-Monte Carlo over a gauge-fixed slice of the
configuration space.  The slice ("gauge") spends the two parameters of the
group ``z -> a z + b`` (a > 0):

* ``m >= 2``: ``q1 = 0``, ``q2 = 1``; free: all aerial points, then ``q3 < ... < qm``.
* ``m == 1``: ``q1 = 0`` and ``p1`` on the unit upper semicircle (free angle);
  then the remaining aerial points.
* ``m == 0``: ``p1 = i``; free: the remaining aerial points.

The slice is oriented by its free coordinates in that order, aerial points
as (Re, Im).  With this orientation the wedge graph ``1;2;g1,g2`` has weight
+1/4 and the single-edge graph ``1;1;g1`` has weight +1, which makes the
first-order term of the star product half the Poisson bracket.

An alternate gauge (``p1 = i`` with all ground points free) is provided for
cross-checking.  Its orientation is matched to the standard one through the
sign of the transition Jacobian, and its samples are standard-slice points
carried over by the transition map (sampling the alternate slice directly
leaves the far-away clusters badly under-sampled).
"""

from __future__ import annotations

import math
import threading
import warnings
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import numpy as np
from scipy.stats import qmc

from .graphs import AdmissibleGraph, canonical_key

TWO_PI = 2.0 * math.pi
DEFAULT_BATCHES = 32
_CHUNK = 1 << 15
_EPS = 1e-13


class WeightDimensionError(ValueError):
    """Graph edge count does not match the configuration-space dimension."""


# ---------------------------------------------------------------------------
# angle maps


class AngleMap(Protocol):
    identifier: str

    def angle(self, p, q):
        """Angle in [0, 2 pi) of the edge from ``p`` to ``q`` (complex arrays)."""

    def gradient(self, p, q):
        """``(d/dRe p, d/dIm p, d/dRe q, d/dIm q)`` of :meth:`angle`."""


class HarmonicAngle:
    """``phi(p, q) = Arg((q - p) / (q - conj(p)))``."""

    identifier = "harmonic"

    def angle(self, p, q):
        p = np.asarray(p, dtype=complex)
        q = np.asarray(q, dtype=complex)
        return np.mod(np.angle(q - p) - np.angle(q - np.conj(p)), TWO_PI)

    def gradient(self, p, q):
        p = np.asarray(p, dtype=complex)
        q = np.asarray(q, dtype=complex)
        a = q - p
        b = q - np.conj(p)
        na = a.real**2 + a.imag**2
        nb = b.real**2 + b.imag**2
        # Arg(a) - Arg(b), with dArg(w) = (Re w dIm w - Im w dRe w) / |w|^2
        dpx = a.imag / na - b.imag / nb
        dpy = -a.real / na - b.real / nb
        dqx = -a.imag / na + b.imag / nb
        dqy = a.real / na - b.real / nb
        return dpx, dpy, dqx, dqy


ANGLE_MAPS: dict[str, AngleMap] = {"harmonic": HarmonicAngle()}


def get_angle_map(identifier: str) -> AngleMap:
    try:
        return ANGLE_MAPS[identifier]
    except KeyError:
        raise ValueError(f"unknown angle map {identifier!r}; known: {sorted(ANGLE_MAPS)}") from None


def register_angle_map(angle_map: AngleMap) -> None:
    ANGLE_MAPS[angle_map.identifier] = angle_map


def harmonic_angle(p: complex, q: complex) -> float:
    """Harmonic angle of the edge from ``p`` to ``q``, in [0, 2 pi)."""
    p, q = complex(p), complex(q)
    if p.imag < 0 or q.imag < 0:
        raise ValueError("points must lie in the closed upper half-plane")
    if p == q:
        raise ValueError(f"coincident points {p}")
    if p.imag == 0 and q.imag == 0:
        # both on the boundary: the angle degenerates to 0 (or 2 pi)
        return 0.0
    return float(HARMONIC.angle(p, q))


def harmonic_angle_gradient(p: complex, q: complex) -> tuple[float, float, float, float]:
    if complex(p) == complex(q):
        raise ValueError(f"coincident points {p}")
    return tuple(float(v) for v in HARMONIC.gradient(complex(p), complex(q)))


HARMONIC = ANGLE_MAPS["harmonic"]


# ---------------------------------------------------------------------------
# configurations and gauges


@dataclass(frozen=True)
class Configuration:
    aerial: tuple[complex, ...]
    ground: tuple[float, ...]

    def __post_init__(self):
        aerial = tuple(complex(p) for p in self.aerial)
        ground = tuple(float(q) for q in self.ground)
        object.__setattr__(self, "aerial", aerial)
        object.__setattr__(self, "ground", ground)
        if any(p.imag <= 0 for p in aerial):
            raise ValueError("aerial points must have positive imaginary part")
        if len(set(aerial)) != len(aerial):
            raise ValueError("aerial points must be pairwise distinct")
        if any(a >= b for a, b in zip(ground, ground[1:])):
            raise ValueError("ground points must be strictly increasing")


class _Positions:
    """Vertex coordinates for a batch, plus their dependence on free coordinates.

    ``deps[v]`` lists ``(axis, free_index, factor)``: d(coord axis of v)/d(free
    coordinate) = factor (scalar or per-sample array).
    """

    def __init__(self, x, y, deps):
        self.x = x
        self.y = y
        self.deps = deps


class Gauge:
    kind = "standard"

    def __init__(self, n: int, m: int):
        if 2 * n + m < 2 or n < 0 or m < 0:
            raise ValueError(f"configuration space C_{{{n},{m}}} is empty")
        self.n = n
        self.m = m
        self.dim = 2 * n + m - 2

    # free coordinates -> positions
    def positions(self, t: np.ndarray) -> _Positions:
        n, m = self.n, self.m
        N = t.shape[0]
        x = np.zeros((N, n + m))
        y = np.zeros((N, n + m))
        deps: list[list] = [[] for _ in range(n + m)]
        a0 = 0
        if m >= 2:
            x[:, n] = 0.0
            x[:, n + 1] = 1.0
            for j in range(2, m):
                idx = 2 * n + j - 2
                x[:, n + j] = t[:, idx]
                deps[n + j].append((0, idx, 1.0))
            offset = 0
        elif m == 1:
            theta = t[:, 0]
            x[:, 0] = np.cos(theta)
            y[:, 0] = np.sin(theta)
            deps[0] = [(0, 0, -np.sin(theta)), (1, 0, np.cos(theta))]
            a0 = 1
            offset = 1
        else:
            y[:, 0] = 1.0
            a0 = 1
            offset = 0
        for a in range(a0, n):
            ix = offset + 2 * (a - a0)
            x[:, a] = t[:, ix]
            y[:, a] = t[:, ix + 1]
            deps[a] = [(0, ix, 1.0), (1, ix + 1, 1.0)]
        return _Positions(x, y, deps)

    @property
    def free_aerial(self) -> int:
        return self.n if self.m >= 2 else self.n - 1

    @property
    def sample_dim(self) -> int:
        """Unit-cube dimension: free coordinates plus one selector per free aerial point."""
        return self.dim + self.free_aerial

    def from_unit(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map unit-cube samples to free coordinates; returns ``(t, 1/density)``.

        Ground gaps use ``s = w/(1-w)``.  Each free aerial point is drawn from
        an equal mixture of polar laws centred at every ground point and every
        earlier aerial point (see :func:`_polar_mixture`), so each 1/r
        singularity of the angle forms is cancelled by one mixture component.
        Samples falling outside the upper half-plane get weight zero.
        """
        n, m = self.n, self.m
        N = u.shape[0]
        t = np.empty((N, self.dim))
        weight = np.ones(N)
        sel = self.dim
        ground: list = []
        aerial: list = []
        a0 = offset = 0
        if m >= 2:
            ground = [0.0, 1.0]
            prev = np.ones(N)
            for j in range(2, m):
                idx = 2 * n + j - 2
                s = u[:, idx] / (1.0 - u[:, idx])
                t[:, idx] = prev + s
                weight *= (1.0 + s) ** 2
                prev = t[:, idx]
                ground.append(prev)
        elif m == 1:
            t[:, 0] = math.pi * u[:, 0]
            weight *= math.pi
            ground = [0.0]
            aerial = [np.exp(1j * t[:, 0])]
            a0 = offset = 1
        else:
            aerial = [np.full(N, 1j)]
            a0 = 1
        for a in range(a0, n):
            ix = offset + 2 * (a - a0)
            z, w = _polar_mixture(u[:, ix], u[:, ix + 1], u[:, sel], ground, aerial)
            sel += 1
            t[:, ix] = z.real
            t[:, ix + 1] = z.imag
            weight *= w
            aerial.append(z)
        return t, weight

    def sample(self, u: np.ndarray) -> tuple[_Positions, np.ndarray]:
        t, jac = self.from_unit(u)
        return self.positions(t), jac

    def free_coords(self, c: Configuration) -> np.ndarray:
        n, m = self.n, self.m
        if len(c.aerial) != n or len(c.ground) != m:
            raise ValueError("configuration does not match graph vertex counts")
        vals: list[float] = []
        if m >= 2:
            if c.ground[0] != 0.0 or c.ground[1] != 1.0:
                raise ValueError("standard gauge needs q1 = 0, q2 = 1")
            for p in c.aerial:
                vals += [p.real, p.imag]
            vals += list(c.ground[2:])
        elif m == 1:
            if c.ground[0] != 0.0 or not math.isclose(abs(c.aerial[0]), 1.0, rel_tol=1e-12):
                raise ValueError("standard gauge for m = 1 needs q1 = 0, |p1| = 1")
            vals.append(math.atan2(c.aerial[0].imag, c.aerial[0].real))
            for p in c.aerial[1:]:
                vals += [p.real, p.imag]
        else:
            if c.aerial[0] != 1j:
                raise ValueError("standard gauge for m = 0 needs p1 = i")
            for p in c.aerial[1:]:
                vals += [p.real, p.imag]
        return np.array([vals], dtype=float).reshape(1, self.dim)

    def orientation(self) -> float:
        return 1.0


def _polar_mixture(w, s, choice, ground, aerial):
    """Draw a half-plane point from an equal mixture of polar laws.

    Component about centre ``c``: ``z = c + h rho e^{i psi}`` with
    ``rho = w/(1-w)`` (density ~ r^-3 far out, matching the decay of the
    angle forms).  Real centres use ``h = 1`` and ``psi`` uniform on (0, pi);
    aerial centres use ``h = Im c`` and ``psi`` uniform on (0, 2 pi), so
    clusters near the real axis are sampled at their own scale.  ``choice``
    picks the component.  Returns ``(z, 1/mixture density)``.
    """
    centers = [(np.asarray(c, dtype=complex), 1.0, math.pi) for c in ground]
    centers += [(np.asarray(c, dtype=complex), np.imag(c), TWO_PI) for c in aerial]
    K = len(centers)
    pick = np.minimum((choice * K).astype(int), K - 1)
    rho = w / (1.0 - w)
    z = np.empty(w.shape, dtype=complex)
    for k, (c, h, span) in enumerate(centers):
        z = np.where(pick == k, c + h * rho * np.exp(1j * span * s), z)
    density = np.zeros(w.shape)
    for c, h, span in centers:
        r = np.abs(z - c)
        density += 1.0 / (span * h * r * (1.0 + r / h) ** 2)
    density /= K
    inside = z.imag > 0
    z = np.where(inside, z, 1j)
    with np.errstate(divide="ignore"):
        weight = np.where(inside, 1.0 / density, 0.0)
    return z, weight


def standard_coords(n: int, m: int, aerial: np.ndarray, ground: np.ndarray) -> np.ndarray:
    """Standard-gauge free coordinates of an arbitrary configuration."""
    aerial = np.asarray(aerial, dtype=complex)
    ground = np.asarray(ground, dtype=float)
    if m >= 2:
        T = (aerial - ground[0]) / (ground[1] - ground[0])
        G = (ground - ground[0]) / (ground[1] - ground[0])
        vals = [v for p in T for v in (p.real, p.imag)] + list(G[2:])
    elif m == 1:
        T = (aerial - ground[0]) / abs(aerial[0] - ground[0])
        vals = [math.atan2(T[0].imag, T[0].real)] + [v for p in T[1:] for v in (p.real, p.imag)]
    else:
        T = (aerial - aerial[0].real) / aerial[0].imag
        vals = [v for p in T[1:] for v in (p.real, p.imag)]
    return np.array(vals)


class AlternateGauge(Gauge):
    """``p1 = i``; free: remaining aerial points, then all ground points."""

    kind = "alternate"

    def __init__(self, n: int, m: int):
        super().__init__(n, m)
        if n < 1 or m < 1:
            raise ValueError("alternate gauge needs n >= 1 and m >= 1")
        self._sign = None

    def positions(self, t):
        n, m = self.n, self.m
        N = t.shape[0]
        x = np.zeros((N, n + m))
        y = np.zeros((N, n + m))
        deps: list[list] = [[] for _ in range(n + m)]
        y[:, 0] = 1.0
        for a in range(1, n):
            ix = 2 * (a - 1)
            x[:, a] = t[:, ix]
            y[:, a] = t[:, ix + 1]
            deps[a] = [(0, ix, 1.0), (1, ix + 1, 1.0)]
        for j in range(m):
            idx = 2 * (n - 1) + j
            x[:, n + j] = t[:, idx]
            deps[n + j] = [(0, idx, 1.0)]
        return _Positions(x, y, deps)

    def sample(self, u):
        # Draw in the standard slice and carry the points over by z -> (z - Re p1) / Im p1.
        # The transition map has |det| = (Im p1)^-(D+1).
        std = Gauge(self.n, self.m)
        t_std, jac = std.from_unit(u)
        pos = std.positions(t_std)
        a = pos.x[:, :1]
        b = pos.y[:, :1]
        t = np.concatenate([((pos.x[:, 1:self.n] - a) / b)[:, :, None],
                            (pos.y[:, 1:self.n] / b)[:, :, None]], axis=2).reshape(len(u), -1)
        t = np.concatenate([t, (pos.x[:, self.n:] - a) / b], axis=1)
        return self.positions(t), jac * b[:, 0] ** -(self.dim + 1)

    def free_coords(self, c):
        if c.aerial[0] != 1j:
            raise ValueError("alternate gauge needs p1 = i")
        vals = [v for p in c.aerial[1:] for v in (p.real, p.imag)] + list(c.ground)
        return np.array([vals], dtype=float)

    def orientation(self) -> float:
        if self._sign is None:
            rng = np.random.default_rng(12345)
            t0 = rng.uniform(0.2, 0.8, size=self.dim)
            t0[2 * (self.n - 1):] = np.sort(t0[2 * (self.n - 1):])  # ground points in order

            def to_std(t):
                pos = self.positions(t[None, :])
                aerial = pos.x[0, : self.n] + 1j * pos.y[0, : self.n]
                return standard_coords(self.n, self.m, aerial, pos.x[0, self.n :])

            h = 1e-6
            J = np.empty((self.dim, self.dim))
            for k in range(self.dim):
                dt = np.zeros(self.dim)
                dt[k] = h
                J[:, k] = (to_std(t0 + dt) - to_std(t0 - dt)) / (2 * h)
            self._sign = float(np.sign(np.linalg.det(J)))
        return self._sign


GAUGES = {"standard": Gauge, "alternate": AlternateGauge}


# ---------------------------------------------------------------------------
# integrand


def _density(g: AdmissibleGraph, pos: _Positions, angle: AngleMap, edges=None) -> np.ndarray:
    edges = g.edges if edges is None else edges
    N = pos.x.shape[0]
    E = len(edges)
    if E == 0:
        return np.ones(N)
    M = np.zeros((N, E, E))
    for r, (s, t) in enumerate(edges):
        p = pos.x[:, s] + 1j * pos.y[:, s]
        q = pos.x[:, t] + 1j * pos.y[:, t]
        gpx, gpy, gqx, gqy = angle.gradient(p, q)
        for (axis, idx, fac) in pos.deps[s]:
            M[:, r, idx] += (gpx if axis == 0 else gpy) * fac
        for (axis, idx, fac) in pos.deps[t]:
            M[:, r, idx] += (gqx if axis == 0 else gqy) * fac
    return np.linalg.det(M)


def _check_dimension(g: AdmissibleGraph):
    if 2 * g.n + g.m < 2:
        raise WeightDimensionError(f"configuration space C_{{{g.n},{g.m}}} is empty")
    expected = 2 * g.n + g.m - 2
    if g.edge_count != expected:
        raise WeightDimensionError(
            f"graph {canonical_key(g)} has {g.edge_count} edges; "
            f"a top-degree form needs 2n+m-2 = {expected}"
        )


def integrand(g: AdmissibleGraph, c: Configuration, angle: AngleMap = HARMONIC,
              gauge: str = "standard", edges=None) -> float:
    """Density of ``wedge_e dphi_e`` in the gauge's free coordinates at ``c``.

    ``edges`` overrides the row order (default: global edge order).
    """
    _check_dimension(g)
    gg = GAUGES[gauge](g.n, g.m)
    t = gg.free_coords(c)
    return float(_density(g, gg.positions(t), angle, edges)[0] * gg.orientation())


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class Weight:
    graph_key: str
    angle_map: str
    value: float
    std_error: float
    samples: int
    seed: int

    def __post_init__(self):
        if self.std_error < 0 or self.samples <= 0:
            raise ValueError("invalid weight record")


def weight_prefactor(g: AdmissibleGraph) -> float:
    f = 1.0
    for d in g.out_degrees:
        f /= math.factorial(d)
    return f / TWO_PI ** g.edge_count


def _stream(seed: int, key: str, angle_id: str, gauge: str) -> np.random.SeedSequence:
    tag = f"{key}|{angle_id}" if gauge == "standard" else f"{key}|{angle_id}|{gauge}"
    tag = zlib.crc32(tag.encode())
    return np.random.SeedSequence([seed & (2**64 - 1), tag])


def compute_weight(g: AdmissibleGraph, angle: AngleMap = HARMONIC, samples: int = 10**6,
                   seed: int = 0, gauge: str = "standard", batches: int = DEFAULT_BATCHES) -> Weight:
    """Randomized QMC estimate of the weight of ``g``.

    ``batches`` independently scrambled Sobol point sets are used; each has
    the smallest power-of-two size giving at least ``samples`` points in
    total.  The reported ``samples`` is the number of points actually used
    and ``std_error`` comes from the spread of the batch means.  Each graph
    gets its own scrambling stream derived from ``seed`` and its key.
    """
    _check_dimension(g)
    key = canonical_key(g)
    pre = weight_prefactor(g)
    gg = GAUGES[gauge](g.n, g.m)
    D = gg.dim
    if D == 0:
        val = pre * float(_density(g, gg.positions(np.zeros((1, 0))), angle)[0])
        return Weight(key, angle.identifier, val, 0.0, 1, seed)
    if batches < 2:
        raise ValueError("need at least two batches for an error estimate")
    per_batch = max(2, math.ceil(samples / batches))
    log2 = math.ceil(math.log2(per_batch))
    sign = gg.orientation()
    means = np.empty(batches)
    for b, child in enumerate(_stream(seed, key, angle.identifier, gauge).spawn(batches)):
        sobol = qmc.Sobol(gg.sample_dim, scramble=True, seed=np.random.Generator(np.random.PCG64(child)))
        u = np.clip(sobol.random_base2(log2), _EPS, 1.0 - _EPS)
        total = 0.0
        for start in range(0, u.shape[0], _CHUNK):
            pos, jac = gg.sample(u[start:start + _CHUNK])
            with np.errstate(invalid="ignore", divide="ignore"):
                vals = _density(g, pos, angle) * jac
            vals[~np.isfinite(vals)] = 0.0
            total += math.fsum(vals)
        means[b] = total / u.shape[0]
    means *= pre * sign
    return Weight(key, angle.identifier, float(means.mean()),
                  float(means.std(ddof=1) / math.sqrt(batches)), batches << log2, seed)


# ---------------------------------------------------------------------------
# cache


class WeightCache:
    """Append-only text store of weights, one ``|``-separated record per line."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def _records(self):
        if not self.path.exists():
            return
        with self.path.open() as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                parts = [p.strip() for p in line.rstrip("\n").split("|")]
                try:
                    if len(parts) != 6:
                        raise ValueError(f"expected 6 fields, got {len(parts)}")
                    yield Weight(parts[0], parts[1], float(parts[2]), float(parts[3]),
                                 int(parts[4]), int(parts[5]))
                except ValueError as exc:
                    warnings.warn(f"{self.path}:{lineno}: skipping corrupt cache line ({exc})")

    def get(self, graph_key: str, angle_id: str, seed: int | None = None) -> Weight | None:
        """Largest-sample entry for the key (optionally restricted to one seed)."""
        best = None
        for w in self._records():
            if w.graph_key != graph_key or w.angle_map != angle_id:
                continue
            if seed is not None and w.seed != seed:
                continue
            if best is None or w.samples > best.samples:
                best = w
        return best

    def load(self) -> list[Weight]:
        return list(self._records())

    def put(self, w: Weight) -> Weight:
        line = f"{w.graph_key}|{w.angle_map}|{w.value!r}|{w.std_error!r}|{w.samples}|{w.seed}\n"
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a") as fh:
                fh.write(line)
        return w


def get_or_compute(g: AdmissibleGraph, angle: AngleMap, samples: int, seed: int,
                   cache: WeightCache | None = None) -> Weight:
    if cache is not None:
        hit = cache.get(canonical_key(g), angle.identifier, seed=seed)
        if hit is not None and hit.samples >= samples:
            return hit
    w = compute_weight(g, angle, samples, seed)
    if cache is not None:
        cache.put(w)
    return w
