"""Floating-point coefficients that remember their dependence on graph weights.

A :class:`Measured` holds a value together with its first-order sensitivity
to each weight (keyed by graph key).  Weight errors are treated as
independent, so the propagated standard error is
``sqrt(sum_k (d value / d w_k)^2 sigma_k^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .algebra import Exponent, Polynomial, format_terms


@dataclass(frozen=True)
class Measured:
    value: float
    grad: Mapping[str, float] = field(default_factory=dict)

    def __add__(self, other):
        if not isinstance(other, Measured):
            return Measured(self.value + float(other), self.grad)
        grad = dict(self.grad)
        for k, v in other.grad.items():
            grad[k] = grad.get(k, 0.0) + v
        return Measured(self.value + other.value, grad)

    __radd__ = __add__

    def __neg__(self):
        return Measured(-self.value, {k: -v for k, v in self.grad.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Measured):
            c = float(other)
            return Measured(self.value * c, {k: v * c for k, v in self.grad.items()})
        grad = {k: v * other.value for k, v in self.grad.items()}
        for k, v in other.grad.items():
            grad[k] = grad.get(k, 0.0) + v * self.value
        return Measured(self.value * other.value, grad)

    __rmul__ = __mul__

    def std(self, sigmas: Mapping[str, float]) -> float:
        return math.sqrt(math.fsum((g * sigmas.get(k, 0.0)) ** 2 for k, g in self.grad.items()))

    def is_zero(self) -> bool:
        return self.value == 0.0 and not any(self.grad.values())


MPoly = dict  # Exponent -> Measured


def mpoly_from_exact(p: Polynomial) -> dict[Exponent, Measured]:
    return {e: Measured(float(c)) for e, c in p.items()}


def mpoly_add(a: dict, b: dict, scale=1) -> dict:
    out = dict(a)
    for e, c in b.items():
        c = c * scale if scale != 1 else c
        out[e] = out[e] + c if e in out else c
    return {e: c for e, c in out.items() if not c.is_zero()}


def weighted_sum(contribs: list[tuple[str, float, Polynomial]], scale: Fraction = Fraction(1)) -> dict:
    """``scale * sum_k w_k P_k`` as Measured coefficients (compensated sums)."""
    by_exp: dict[Exponent, list[tuple[str, float, Fraction]]] = {}
    for key, w, poly in contribs:
        for e, c in poly.items():
            by_exp.setdefault(e, []).append((key, w, c * scale))
    out = {}
    for e, items in by_exp.items():
        value = math.fsum(w * float(c) for _, w, c in items)
        grad: dict[str, float] = {}
        for key, _, c in items:
            grad[key] = grad.get(key, 0.0) + float(c)
        m = Measured(value, grad)
        if not m.is_zero():
            out[e] = m
    return out


@dataclass(frozen=True)
class NumericPolynomial:
    """Float polynomial with per-coefficient propagated standard errors."""

    dim: int
    values: Mapping[Exponent, float]
    errors: Mapping[Exponent, float]

    @classmethod
    def from_measured(cls, dim: int, mp: dict, sigmas: Mapping[str, float]) -> "NumericPolynomial":
        return cls(dim, {e: c.value for e, c in mp.items()}, {e: c.std(sigmas) for e, c in mp.items()})

    def coefficient(self, exp) -> float:
        return self.values.get(tuple(exp), 0.0)

    def error(self, exp) -> float:
        return self.errors.get(tuple(exp), 0.0)

    def max_abs(self) -> float:
        return max((abs(v) for v in self.values.values()), default=0.0)

    def __str__(self):
        return format_terms({e: f"{v:.6g}" for e, v in self.values.items()}, self.dim)
