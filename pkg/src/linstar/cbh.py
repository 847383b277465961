"""Campbell-Baker-Hausdorff series and the Gutt product on Sym(g).

Everything here is exact rational arithmetic and independent of the graph
machinery, so it serves as an oracle for the restricted star product.

The enveloping algebra is ħ-graded: generators satisfy
``e_j e_i = e_i e_j + ħ sum_k c_ji^k e_k``, so each commutator applied
during straightening contributes one power of ħ.
"""

from __future__ import annotations

import itertools
import math
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

from .algebra import Exponent, LieAlgebra, Polynomial, monomials
from .star import HbarSeries, StarProductTable, budget, star_multiply

Word = tuple[int, ...]
LETTERS = "XY"


# ---------------------------------------------------------------------------
# free associative algebra on X, Y (truncated)


def _fa_mul(a: dict, b: dict, max_len: int) -> dict:
    out: dict[Word, Fraction] = {}
    for u, cu in a.items():
        for v, cv in b.items():
            if len(u) + len(v) > max_len:
                continue
            w = u + v
            out[w] = out.get(w, 0) + cu * cv
    return {w: c for w, c in out.items() if c}


def _fa_add(a: dict, b: dict, scale=1) -> dict:
    out = dict(a)
    for w, c in b.items():
        out[w] = out.get(w, 0) + scale * c
    return {w: c for w, c in out.items() if c}


def _fa_exp(x: dict, max_len: int) -> dict:
    out = {(): Fraction(1)}
    power = {(): Fraction(1)}
    for k in range(1, max_len + 1):
        power = _fa_mul(power, x, max_len)
        out = _fa_add(out, power, Fraction(1, math.factorial(k)))
    return out


def _fa_log(z: dict, max_len: int) -> dict:
    """``log(z)`` for ``z`` with constant term 1."""
    y = dict(z)
    y.pop((), None)
    out: dict = {}
    power = {(): Fraction(1)}
    for k in range(1, max_len + 1):
        power = _fa_mul(power, y, max_len)
        out = _fa_add(out, power, Fraction((-1) ** (k + 1), k))
    return out


def free_log_exp_exp(max_len: int) -> dict[Word, Fraction]:
    """``log(exp X exp Y)`` in the free associative algebra, words up to ``max_len``."""
    X, Y = {(0,): Fraction(1)}, {(1,): Fraction(1)}
    return _fa_log(_fa_mul(_fa_exp(X, max_len), _fa_exp(Y, max_len), max_len), max_len)


def bracket_expansion(word: Word) -> dict[Word, Fraction]:
    """Associative expansion of the right-nested bracket ``[a1,[a2,...,ak]]``."""
    if len(word) == 1:
        return {word: Fraction(1)}
    inner = bracket_expansion(word[1:])
    head = {(word[0],): Fraction(1)}
    n = len(word)
    return _fa_add(_fa_mul(head, inner, n), _fa_mul(inner, head, n), -1)


# ---------------------------------------------------------------------------
# free Lie elements


def _reduce(vec: dict, comb: dict, rows) -> tuple[dict, dict]:
    vec, comb = dict(vec), dict(comb)
    for pivot, rvec, rcomb in rows:
        c = vec.get(pivot)
        if c:
            f = c / rvec[pivot]
            vec = _fa_add(vec, rvec, -f)
            comb = _fa_add(comb, rcomb, -f)
    return vec, comb


@lru_cache(maxsize=None)
def _lie_basis(k: int) -> tuple[tuple[Word, ...], tuple]:
    """Greedy basis of right-nested words of length ``k`` plus echelon rows.

    Words are scanned lexicographically and kept when their associative
    expansion is independent of those already kept.  Each row is
    ``(pivot, reduced expansion, combination of basis words)``.
    """
    basis: list[Word] = []
    rows: list = []
    for word in itertools.product(range(2), repeat=k):
        vec, comb = _reduce(bracket_expansion(word), {word: Fraction(1)}, rows)
        if vec:
            basis.append(word)
            rows.append((min(vec), vec, comb))
    return tuple(basis), tuple(rows)


def _coordinates(expansion: dict, k: int) -> dict[Word, Fraction]:
    """Basis coefficients of a homogeneous Lie element given by its expansion."""
    _, rows = _lie_basis(k)
    rest, neg = _reduce(expansion, {}, rows)
    if rest:
        raise ValueError("element is not a Lie polynomial")
    return {w: -c for w, c in neg.items()}


@dataclass(frozen=True)
class FreeLieElement:
    """Rational combination of right-nested brackets in ``X`` (0) and ``Y`` (1).

    ``terms`` maps a word ``(a1, ..., ak)`` to the coefficient of
    ``[a1,[a2,...,ak]]``.  Constructing through :meth:`from_words` reduces
    to a fixed basis per length, so equal elements compare equal.
    """

    terms: Mapping[Word, Fraction] = field(default_factory=dict)

    @classmethod
    def from_words(cls, terms: Mapping[Word, object]) -> "FreeLieElement":
        by_len: dict[int, dict] = {}
        for w, c in terms.items():
            if not c:
                continue
            by_len[len(w)] = _fa_add(by_len.get(len(w), {}), bracket_expansion(tuple(w)), Fraction(c))
        out: dict[Word, Fraction] = {}
        for k, exp in by_len.items():
            if exp:
                out.update(_coordinates(exp, k))
        return cls({w: c for w, c in sorted(out.items(), key=lambda t: (len(t[0]), t[0])) if c})

    def expansion(self) -> dict[Word, Fraction]:
        out: dict = {}
        for w, c in self.terms.items():
            out = _fa_add(out, bracket_expansion(w), c)
        return out

    def degree_part(self, k: int) -> "FreeLieElement":
        return FreeLieElement({w: c for w, c in self.terms.items() if len(w) == k})

    def __add__(self, other: "FreeLieElement") -> "FreeLieElement":
        return FreeLieElement.from_words(_fa_add(dict(self.terms), other.terms))

    def __eq__(self, other):
        if not isinstance(other, FreeLieElement):
            return NotImplemented
        return self.expansion() == other.expansion()

    def __hash__(self):
        return hash(frozenset(self.expansion().items()))

    def evaluate(self, bracket, x, y):
        """Evaluate in a concrete Lie algebra given ``bracket(a, b)`` and images of X, Y."""
        gens = (x, y)
        total = None
        for w, c in self.terms.items():
            v = gens[w[-1]]
            for a in reversed(w[:-1]):
                v = bracket(gens[a], v)
            v = v * c
            total = v if total is None else total + v
        return total

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for w, c in self.terms.items():
            s = LETTERS[w[-1]]
            for a in reversed(w[:-1]):
                s = f"[{LETTERS[a]},{s}]"
            parts.append(s if c == 1 else f"({c})*{s}")
        return " + ".join(parts)


def _dynkin_bracket(word: Word) -> Word | None:
    # right-nested bracket vanishes when the two innermost letters agree
    if len(word) >= 2 and word[-1] == word[-2]:
        return None
    return word


def bch_series(order: int) -> FreeLieElement:
    """``log(exp X exp Y)`` up to bracket length ``order`` via Dynkin's formula.

    ``sum_n (-1)^(n-1)/n sum [X^r1 Y^s1 ... X^rn Y^sn] / (|r+s| prod r_i! s_i!)``
    with the bracket right-nested and each ``r_i + s_i > 0``.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    terms: dict[Word, Fraction] = {}
    for n in range(1, order + 1):
        pairs = [(r, s) for r in range(order + 1) for s in range(order + 1) if 0 < r + s <= order]
        for combo in itertools.product(pairs, repeat=n):
            total = sum(r + s for r, s in combo)
            if total > order:
                continue
            word: Word = ()
            denom = total
            for r, s in combo:
                word += (0,) * r + (1,) * s
                denom *= math.factorial(r) * math.factorial(s)
            if _dynkin_bracket(word) is None:
                continue
            c = Fraction((-1) ** (n - 1), n * denom)
            terms[word] = terms.get(word, 0) + c
    return FreeLieElement.from_words(terms)


# ---------------------------------------------------------------------------
# enveloping algebra


@dataclass(frozen=True)
class EnvelopingElement:
    """Element of the ħ-graded enveloping algebra.

    ``terms`` maps ``(hbar_power, word)`` to a rational coefficient.  After
    :func:`pbw_normal_order` every word is non-decreasing, i.e. a PBW
    monomial ``e_1^a1 ... e_d^ad``.
    """

    dim: int
    terms: Mapping[tuple[int, Word], Fraction] = field(default_factory=dict)

    @classmethod
    def word(cls, dim: int, word: Sequence[int], c=1, hbar: int = 0) -> "EnvelopingElement":
        return cls(dim, {(hbar, tuple(word)): Fraction(c)})

    def is_ordered(self) -> bool:
        return all(list(w) == sorted(w) for _, w in self.terms)

    def __add__(self, other: "EnvelopingElement") -> "EnvelopingElement":
        return EnvelopingElement(self.dim, _fa_add(dict(self.terms), other.terms))

    def __mul__(self, other):
        if isinstance(other, EnvelopingElement):
            out: dict = {}
            for (h1, u), c1 in self.terms.items():
                for (h2, v), c2 in other.terms.items():
                    k = (h1 + h2, u + v)
                    out[k] = out.get(k, 0) + c1 * c2
            return EnvelopingElement(self.dim, {k: c for k, c in out.items() if c})
        return EnvelopingElement(self.dim, {k: c * other for k, c in self.terms.items() if c * other})

    def exponents(self) -> dict[tuple[int, Exponent], Fraction]:
        """Ordered terms keyed by ``(hbar_power, exponent vector)``."""
        out = {}
        for (h, w), c in self.terms.items():
            e = [0] * self.dim
            for i in w:
                e[i] += 1
            out[(h, tuple(e))] = c
        return out


class _Straightener:
    def __init__(self, L: LieAlgebra):
        self.L = L
        self.memo: dict[Word, dict] = {}

    def __call__(self, word: Word) -> dict[tuple[int, Word], Fraction]:
        hit = self.memo.get(word)
        if hit is not None:
            return hit
        for i in range(len(word) - 1):
            b, a = word[i], word[i + 1]
            if b > a:
                break
        else:
            out = {(0, word): Fraction(1)}
            self.memo[word] = out
            return out
        out = dict(self(word[:i] + (a, b) + word[i + 2:]))
        for k in range(self.L.dim):
            c = self.L.c(b, a, k)
            if not c:
                continue
            for (h, w), cw in self(word[:i] + (k,) + word[i + 2:]).items():
                key = (h + 1, w)
                out[key] = out.get(key, 0) + c * cw
        out = {k: v for k, v in out.items() if v}
        self.memo[word] = out
        return out


_STRAIGHTENERS: dict[tuple, _Straightener] = {}


def _straightener(L: LieAlgebra) -> _Straightener:
    key = (L.dim, tuple(sorted(L.constants.items())))
    if key not in _STRAIGHTENERS:
        _STRAIGHTENERS[key] = _Straightener(L)
    return _STRAIGHTENERS[key]


def pbw_normal_order(e: EnvelopingElement, L: LieAlgebra) -> EnvelopingElement:
    if e.dim != L.dim:
        raise ValueError("dimension mismatch")
    s = _straightener(L)
    out: dict = {}
    for (h, w), c in e.terms.items():
        for (h2, w2), c2 in s(w).items():
            key = (h + h2, w2)
            out[key] = out.get(key, 0) + c * c2
    return EnvelopingElement(e.dim, {k: v for k, v in out.items() if v})


def _word_of(exp: Exponent) -> Word:
    return tuple(i for i, a in enumerate(exp) for _ in range(a))


def _distinct_permutations(word: Word):
    counts = Counter(word)
    n = len(word)

    def rec(prefix):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for a in sorted(counts):
            if counts[a]:
                counts[a] -= 1
                prefix.append(a)
                yield from rec(prefix)
                prefix.pop()
                counts[a] += 1

    yield from rec([])


def symmetrize(p: Polynomial) -> EnvelopingElement:
    """Symmetrization map: ``x^a`` goes to the average of all orderings of its word."""
    terms: dict = {}
    for exp, c in p.items():
        word = _word_of(exp)
        perms = list(_distinct_permutations(word))
        share = c / len(perms)
        for w in perms:
            terms[(0, w)] = terms.get((0, w), 0) + share
    return EnvelopingElement(p.dim, terms)


def unsymmetrize(e: EnvelopingElement, L: LieAlgebra) -> list[Polynomial]:
    """Inverse of the symmetrization, as a list of polynomials indexed by ħ power.

    Works top-down in word length: the leading PBW monomial of
    ``sym(x^a)`` is ``e^a`` and the remainder has lower degree.
    """
    rest = dict(pbw_normal_order(e, L).exponents())
    out: dict[int, dict[Exponent, Fraction]] = {}
    while rest:
        h, exp = max(rest, key=lambda k: (sum(k[1]), k[1], -k[0]))
        c = rest[(h, exp)]
        out.setdefault(h, {})[exp] = out.get(h, {}).get(exp, 0) + c
        sym = pbw_normal_order(symmetrize(Polynomial.monomial(exp)), L).exponents()
        for (h2, e2), c2 in sym.items():
            key = (h + h2, e2)
            v = rest.get(key, 0) - c * c2
            if v:
                rest[key] = v
            else:
                rest.pop(key, None)
    top = max(out, default=0)
    return [Polynomial(e.dim, out.get(h, {})) for h in range(top + 1)]


def gutt_series(L: LieAlgebra, order: int, F: Sequence[Polynomial], G: Sequence[Polynomial]) -> list[Polynomial]:
    """Gutt product of two ħ-series of polynomials, truncated at ``order``."""
    zero = Polynomial.zero(L.dim)
    out = [zero] * (order + 1)
    for i, f in enumerate(F):
        for j, g in enumerate(G):
            if i + j > order or not f or not g:
                continue
            prod = symmetrize(f) * symmetrize(g)
            for h, p in enumerate(unsymmetrize(prod, L)):
                if i + j + h <= order:
                    out[i + j + h] = out[i + j + h] + p
    return out


def gutt_star(L: LieAlgebra, order: int, f: Polynomial, g: Polynomial) -> HbarSeries:
    """The CBH (Gutt) product ``f * g`` with exact rational coefficients."""
    if f.dim != L.dim or g.dim != L.dim:
        raise ValueError("dimension mismatch")
    series = gutt_series(L, order, [f], [g])
    return HbarSeries(L.dim, order, [dict(p.items()) for p in series], None)


# ---------------------------------------------------------------------------
# comparison against a graph table


def compare_tables(t: StarProductTable, max_degree: int = 2, pairs: Iterable | None = None,
                   abs_tol: float = 5e-2, n_sigma: float = 3.0) -> dict:
    """Order-by-order differences between a star table and the Gutt product."""
    if t.angle_map != "harmonic":
        warnings.warn(f"angle map {t.angle_map!r} is not harmonic; the comparison is informative only",
                      stacklevel=2)
    if t.variant != "restricted":
        warnings.warn("comparing a non-restricted table with the Gutt product", stacklevel=2)
    L, N = t.algebra, t.order
    if pairs is None:
        monos = [Polynomial.monomial(e) for e in monomials(L.dim, max_degree)]
        pairs = list(itertools.product(monos, repeat=2))
    rows = []
    for f, g in pairs:
        ours = star_multiply(t, f, g)
        ref = gutt_star(L, N, f, g)
        for n in range(N + 1):
            exps = set(ours.coefficients[n]) | set(ref.coefficients[n])
            worst = {"diff": 0.0, "sigma": 0.0, "ratio": 0.0}
            for e in exps:
                d = abs(float(ours.coefficients[n].get(e, 0.0)) - float(ref.coefficients[n].get(e, 0)))
                s = ours.error(n, e)
                ratio = d / budget(s, abs_tol, n_sigma)
                if ratio > worst["ratio"] or (d > worst["diff"] and ratio >= worst["ratio"]):
                    worst = {"diff": d, "sigma": s, "ratio": ratio}
            rows.append({"f": str(f), "g": str(g), "order": n, "max_abs_diff": worst["diff"],
                         "std_error": worst["sigma"], "ratio": worst["ratio"], "pass": worst["ratio"] < 1.0})
    per_order = []
    for n in range(N + 1):
        sel = [r for r in rows if r["order"] == n]
        per_order.append({"order": n, "max_abs_diff": max((r["max_abs_diff"] for r in sel), default=0.0),
                          "worst_ratio": max((r["ratio"] for r in sel), default=0.0),
                          "pass": all(r["pass"] for r in sel)})
    return {"algebra": L.name, "variant": t.variant, "angle_map": t.angle_map, "order": N,
            "max_degree": max_degree, "abs_tol": abs_tol, "n_sigma": n_sigma,
            "pairs": rows, "orders": per_order, "pass": all(o["pass"] for o in per_order)}



def format_comparison(report: dict) -> str:
    lines = [f"{'f':>10} {'g':>10} {'n':>2} {'max|diff|':>11} {'sigma':>9}  ok"]
    for r in report["pairs"]:
        lines.append(f"{r['f']:>10} {r['g']:>10} {r['order']:>2} {r['max_abs_diff']:11.3e} "
                     f"{r['std_error']:9.2e}  {'yes' if r['pass'] else 'NO'}")
    for o in report["orders"]:
        lines.append(f"order {o['order']}: max|diff| {o['max_abs_diff']:.3e}, "
                     f"worst ratio {o['worst_ratio']:.3f}, {'pass' if o['pass'] else 'FAIL'}")
    return "\n".join(lines)
