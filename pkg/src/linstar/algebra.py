"""Exact polynomial algebra, Lie algebras and linear polyvector fields.

Everything here works over :class:`fractions.Fraction`.  Coordinates are
0-based in the Python API; the JSON config format and the text shown to
users are 1-based.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

Exponent = tuple[int, ...]


def _as_fraction(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, float):
        raise TypeError("float coefficients are not allowed in exact polynomials")
    return Fraction(c)


class Polynomial:
    """Sparse multivariate polynomial with exact rational coefficients.

    ``terms`` maps exponent tuples (length ``dim``) to non-zero fractions.
    Instances are treated as immutable.
    """

    __slots__ = ("dim", "_terms", "_hash")

    def __init__(self, dim: int, terms: Mapping[Exponent, object] | None = None):
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        self.dim = dim
        clean: dict[Exponent, Fraction] = {}
        for exp, c in (terms or {}).items():
            exp = tuple(exp)
            if len(exp) != dim or any(e < 0 for e in exp):
                raise ValueError(f"bad exponent {exp} for dimension {dim}")
            c = _as_fraction(c)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if not clean[exp]:
                    del clean[exp]
        self._terms = clean
        self._hash = None

    # constructors -------------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "Polynomial":
        return cls(dim)

    @classmethod
    def constant(cls, dim: int, c=1) -> "Polynomial":
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def variable(cls, dim: int, i: int) -> "Polynomial":
        if not 0 <= i < dim:
            raise IndexError(f"coordinate {i} out of range for dimension {dim}")
        exp = [0] * dim
        exp[i] = 1
        return cls(dim, {tuple(exp): 1})

    @classmethod
    def monomial(cls, exp: Exponent, c=1) -> "Polynomial":
        return cls(len(exp), {tuple(exp): c})

    @classmethod
    def linear(cls, coeffs: Iterable) -> "Polynomial":
        """The linear form ``sum_k coeffs[k] * x_k``."""
        coeffs = list(coeffs)
        dim = len(coeffs)
        return cls(dim, {tuple(int(j == k) for j in range(dim)): c for k, c in enumerate(coeffs)})

    # accessors ----------------------------------------------------------
    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def coefficient(self, exp: Exponent) -> Fraction:
        return self._terms.get(tuple(exp), Fraction(0))

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "Polynomial"):
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return Polynomial.constant(self.dim, _as_fraction(other))

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self._terms)
        for exp, c in other._terms.items():
            out[exp] = out.get(exp, 0) + c
        return Polynomial(self.dim, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.dim, {e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            c = _as_fraction(other)
            return Polynomial(self.dim, {e: c * v for e, v in self._terms.items()})
        self._check(other)
        out: dict[Exponent, Fraction] = {}
        for ea, ca in self._terms.items():
            for eb, cb in other._terms.items():
                e = tuple(x + y for x, y in zip(ea, eb))
                out[e] = out.get(e, 0) + ca * cb
        return Polynomial(self.dim, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power")
        out = Polynomial.constant(self.dim)
        for _ in range(k):
            out = out * self
        return out

    def partial(self, i: int) -> "Polynomial":
        """Exact partial derivative with respect to ``x_i`` (0-based)."""
        if not 0 <= i < self.dim:
            raise IndexError(f"coordinate {i} out of range for dimension {self.dim}")
        out = {}
        for exp, c in self._terms.items():
            if exp[i]:
                e = list(exp)
                e[i] -= 1
                out[tuple(e)] = c * exp[i]
        return Polynomial(self.dim, out)

    def derivative(self, orders: Exponent) -> "Polynomial":
        """Apply ``prod_i d_i^{orders[i]}``."""
        if len(orders) != self.dim:
            raise ValueError("derivative multi-index has wrong length")
        out = {}
        for exp, c in self._terms.items():
            if any(o > e for o, e in zip(orders, exp)):
                continue
            coef = c
            for o, e in zip(orders, exp):
                for t in range(o):
                    coef *= e - t
            out[tuple(e - o for e, o in zip(exp, orders))] = coef
        return Polynomial(self.dim, out)

    def substitute_linear(self, matrix) -> "Polynomial":
        """Compose with the linear map ``x_i -> sum_j matrix[i][j] x_j``."""
        images = [Polynomial.linear(row) for row in matrix]
        out = Polynomial.zero(self.dim)
        for exp, c in self._terms.items():
            term = Polynomial.constant(self.dim, c)
            for i, e in enumerate(exp):
                if e:
                    term = term * images[i] ** e
            out = out + term
        return out

    # comparison / display ----------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.dim == other.dim and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.dim, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self):
        return f"Polynomial({self.dim}, {self._terms!r})"

    def __str__(self):
        return format_terms(self._terms, self.dim)


def format_monomial(exp: Exponent) -> str:
    parts = []
    for i, e in enumerate(exp):
        if e == 1:
            parts.append(f"x{i + 1}")
        elif e:
            parts.append(f"x{i + 1}^{e}")
    return "*".join(parts)


def format_terms(terms: Mapping[Exponent, object], dim: int) -> str:
    if not terms:
        return "0"
    out = []
    for exp in sorted(terms, key=lambda e: (-sum(e), tuple(-x for x in e))):
        c = terms[exp]
        mono = format_monomial(exp)
        if not mono:
            out.append(str(c))
        elif c == 1:
            out.append(mono)
        elif c == -1:
            out.append("-" + mono)
        else:
            out.append(f"{c}*{mono}")
    return " + ".join(out).replace("+ -", "- ")


def monomials(dim: int, max_degree: int, min_degree: int = 0) -> list[Exponent]:
    """All exponents of total degree in ``[min_degree, max_degree]``, graded-lex."""
    out = []
    for deg in range(min_degree, max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(dim), deg):
            exp = [0] * dim
            for i in combo:
                exp[i] += 1
            out.append(tuple(exp))
    return out


# ---------------------------------------------------------------------------
# Lie algebras


class JacobiError(ValueError):
    """Structure constants violate the Jacobi identity."""

    def __init__(self, algebra: "LieAlgebra", witnesses):
        self.algebra = algebra
        self.witnesses = list(witnesses)
        w = tuple(i + 1 for i in self.witnesses[0])
        super().__init__(
            f"Lie algebra {algebra.name!r} fails the Jacobi identity "
            f"({len(self.witnesses)} violations, first at (i,j,k,l)={w})"
        )


@dataclass(frozen=True)
class LieAlgebra:
    """Finite-dimensional Lie algebra given by structure constants.

    ``constants[(i, j, k)]`` is the coefficient of ``e_k`` in ``[e_i, e_j]``
    (0-based, zero entries omitted).  Antisymmetry is checked on
    construction; the Jacobi identity is not (see :func:`jacobi_check`).
    """

    dim: int
    constants: Mapping[tuple[int, int, int], Fraction] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        clean = {}
        for (i, j, k), c in self.constants.items():
            if not all(0 <= t < self.dim for t in (i, j, k)):
                raise ValueError(f"index ({i},{j},{k}) out of range")
            c = _as_fraction(c)
            if c:
                clean[(i, j, k)] = c
        for (i, j, k), c in clean.items():
            if clean.get((j, i, k), 0) != -c:
                raise ValueError(
                    f"structure constants not antisymmetric at "
                    f"c[{i + 1},{j + 1}]^{k + 1}={c} vs c[{j + 1},{i + 1}]^{k + 1}={clean.get((j, i, k), 0)}"
                )
        object.__setattr__(self, "constants", clean)

    @classmethod
    def from_brackets(cls, dim: int, brackets: Mapping[tuple[int, int], Mapping[int, object]], name=""):
        """Build from ``[e_i, e_j] = sum_k brackets[(i, j)][k] e_k`` given for i < j."""
        constants: dict[tuple[int, int, int], Fraction] = {}
        for (i, j), rhs in brackets.items():
            if i == j:
                if any(_as_fraction(c) for c in rhs.values()):
                    raise ValueError(f"[e_{i + 1}, e_{i + 1}] must vanish")
                continue
            for k, c in rhs.items():
                c = _as_fraction(c)
                for key, val in (((i, j, k), c), ((j, i, k), -c)):
                    if key in constants and constants[key] != val:
                        raise ValueError(f"inconsistent brackets for pair ({i + 1},{j + 1})")
                    constants[key] = val
        return cls(dim, constants, name)

    @classmethod
    def abelian(cls, dim: int) -> "LieAlgebra":
        return cls(dim, {}, f"abelian{dim}")

    def c(self, i: int, j: int, k: int) -> Fraction:
        return self.constants.get((i, j, k), Fraction(0))

    def bracket(self, i: int, j: int) -> dict[int, Fraction]:
        """Coefficients of ``[e_i, e_j]`` as ``{k: c}``."""
        return {k: c for (a, b, k), c in self.constants.items() if a == i and b == j}

    def is_abelian(self) -> bool:
        return not self.constants

    def to_config(self) -> dict:
        brackets: dict[str, dict[str, str]] = {}
        for (i, j, k), c in sorted(self.constants.items()):
            if i < j:
                brackets.setdefault(f"{i + 1},{j + 1}", {})[str(k + 1)] = str(c)
        return {"dim": self.dim, "name": self.name, "brackets": brackets}

    @classmethod
    def from_config(cls, doc: Mapping) -> "LieAlgebra":
        dim = int(doc["dim"])
        brackets = {}
        for pair, rhs in doc.get("brackets", {}).items():
            i, j = (int(t) - 1 for t in pair.split(","))
            brackets[(i, j)] = {int(k) - 1: Fraction(str(v)) for k, v in rhs.items()}
        return cls.from_brackets(dim, brackets, doc.get("name", ""))


def jacobi_check(L: LieAlgebra) -> tuple[bool, list[tuple[int, int, int, int]]]:
    """Check the Jacobi identity exactly; returns ``(ok, violated (i,j,k,l))``."""
    d = L.dim
    bad = []
    for i, j, k, l in itertools.product(range(d), repeat=4):
        s = Fraction(0)
        for m in range(d):
            s += L.c(i, j, m) * L.c(m, k, l) + L.c(j, k, m) * L.c(m, i, l) + L.c(k, i, m) * L.c(m, j, l)
        if s:
            bad.append((i, j, k, l))
    return not bad, bad


_BUNDLED = {
    "abelian": "abelian3.json",
    "abelian2": "abelian2.json",
    "abelian3": "abelian3.json",
    "heisenberg": "heisenberg.json",
    "so3": "so3.json",
    "sl2": "sl2.json",
}


def bundled_algebras() -> list[str]:
    return sorted(_BUNDLED)


def load_algebra(source: str | Path) -> LieAlgebra:
    """Load a bundled algebra by name or a JSON config from a path."""
    if str(source) in _BUNDLED:
        text = resources.files("linstar.data.algebras").joinpath(_BUNDLED[str(source)]).read_text()
    else:
        path = Path(source)
        if not path.exists():
            raise FileNotFoundError(f"no bundled algebra or config file named {source!r}")
        text = path.read_text()
    return LieAlgebra.from_config(json.loads(text))


# ---------------------------------------------------------------------------
# polyvector fields


def _perm_sign(seq) -> int:
    seq = list(seq)
    sign = 1
    for a in range(len(seq)):
        for b in range(a + 1, len(seq)):
            if seq[a] > seq[b]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class PolyVectorField:
    """Polyvector field ``sum_{i_1<...<i_k} P_I d_{i_1} ^ ... ^ d_{i_k}``.

    ``degree`` is the number of wedge factors (so a function has degree 0,
    a bivector degree 2).
    """

    dim: int
    degree: int
    components: Mapping[tuple[int, ...], Polynomial] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for idx, p in self.components.items():
            idx = tuple(idx)
            if len(idx) != self.degree or any(a >= b for a, b in zip(idx, idx[1:])):
                raise ValueError(f"component index {idx} is not strictly increasing of length {self.degree}")
            if any(not 0 <= i < self.dim for i in idx):
                raise ValueError(f"component index {idx} out of range")
            if p.dim != self.dim:
                raise ValueError("component dimension mismatch")
            if p:
                clean[idx] = p
        object.__setattr__(self, "components", clean)

    @classmethod
    def function(cls, f: Polynomial) -> "PolyVectorField":
        return cls(f.dim, 0, {(): f})

    def coefficient(self, indices) -> Polynomial:
        """``<gamma, dx^{i_1} (x) ... (x) dx^{i_k}>`` under the skew identification."""
        indices = tuple(indices)
        if len(indices) != self.degree:
            raise ValueError("wrong number of indices")
        if len(set(indices)) != len(indices):
            return Polynomial.zero(self.dim)
        key = tuple(sorted(indices))
        p = self.components.get(key)
        if p is None:
            return Polynomial.zero(self.dim)
        return p if _perm_sign(indices) > 0 else -p

    def is_zero(self) -> bool:
        return not self.components

    def is_linear(self) -> bool:
        return all(p.degree() <= 1 for p in self.components.values())

    def substitute_linear(self, matrix, inverse) -> "PolyVectorField":
        """Transform under ``y = A x`` (``matrix`` = A, ``inverse`` = A^-1).

        Vector indices transform with A and coefficient functions are pulled
        back through A^-1, giving the field expressed in the ``y`` chart.
        """
        d = self.dim
        out: dict[tuple[int, ...], Polynomial] = {}
        for idx, p in self.components.items():
            q = p.substitute_linear(inverse)
            for new in itertools.product(range(d), repeat=self.degree):
                c = Fraction(1)
                for a, b in zip(new, idx):
                    c *= _as_fraction(matrix[a][b])
                    if not c:
                        break
                if not c or len(set(new)) != len(new):
                    continue
                key = tuple(sorted(new))
                term = q * (c * _perm_sign(new))
                out[key] = out.get(key, Polynomial.zero(d)) + term
        return PolyVectorField(d, self.degree, out)

    def __eq__(self, other):
        if not isinstance(other, PolyVectorField):
            return NotImplemented
        return (self.dim, self.degree, dict(self.components)) == (other.dim, other.degree, dict(other.components))

    def __hash__(self):
        return hash((self.dim, self.degree, frozenset(self.components.items())))


def poisson_bivector(L: LieAlgebra) -> PolyVectorField:
    """The linear Poisson bivector with ``{x_i, x_j} = sum_k c_ij^k x_k``."""
    comps = {}
    for i in range(L.dim):
        for j in range(i + 1, L.dim):
            comps[(i, j)] = Polynomial.linear(L.c(i, j, k) for k in range(L.dim))
    return PolyVectorField(L.dim, 2, comps)


def schouten_bracket_bivectors(a: PolyVectorField, b: PolyVectorField) -> PolyVectorField:
    """Schouten bracket of two bivectors.

    Uses ``[a,b]^{ijk} = cyc_{ijk} sum_l (a^{il} d_l b^{jk} + b^{il} d_l a^{jk})``,
    so ``[pi, pi]`` is twice the Jacobiator of the bracket defined by ``pi``.
    """
    if a.degree != 2 or b.degree != 2:
        raise ValueError(f"Schouten bracket of bivectors needs degree 2 fields, got {a.degree}, {b.degree}")
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    d = a.dim
    out = {}
    for i, j, k in itertools.combinations(range(d), 3):
        total = Polynomial.zero(d)
        for x, y, z in ((i, j, k), (j, k, i), (k, i, j)):
            for l in range(d):
                total = total + a.coefficient((x, l)) * b.coefficient((y, z)).partial(l)
                total = total + b.coefficient((x, l)) * a.coefficient((y, z)).partial(l)
        out[(i, j, k)] = total
    return PolyVectorField(d, 3, out)


def poisson_bracket(pi: PolyVectorField, f: Polynomial, g: Polynomial) -> Polynomial:
    """``{f, g} = sum_{ij} pi^{ij} d_i f d_j g``."""
    out = Polynomial.zero(f.dim)
    for (i, j), p in pi.components.items():
        out = out + p * (f.partial(i) * g.partial(j) - f.partial(j) * g.partial(i))
    return out
