"""Odd homogeneous polynomial potentials W(x_1, ..., x_d).

The text form is a sum of explicit monomials::

    x1^3
    x1^2*x2
    2.5*x1^5 - 0.5 * x1*x2^4

Parentheses and expansion are not supported.  After parsing, like
monomials are merged, zero terms dropped, and homogeneity of odd degree
2K+1 >= 3 is enforced.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np


class ParseError(ValueError):
    """Malformed potential expression."""

    def __init__(self, message: str, text: str, position: int):
        self.text = text
        self.position = position
        pointer = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {text}\n  {pointer}")


class ValidationError(ValueError):
    """Well-formed expression that is not an admissible potential."""


@dataclass(frozen=True)
class Monomial:
    exponents: tuple[int, ...]
    coefficient: float

    @property
    def degree(self) -> int:
        return sum(self.exponents)


@dataclass(frozen=True)
class PolynomialPotential:
    """Real homogeneous polynomial of odd degree ``2K+1``.

    Construct through :func:`parse_potential` or :meth:`from_terms`, which
    normalise and validate the monomial list.
    """

    dim: int
    monomials: tuple[Monomial, ...]
    K: int

    @classmethod
    def from_terms(cls, dim: int, terms) -> PolynomialPotential:
        """Build from ``(exponents, coefficient)`` pairs, merging duplicates."""
        merged: dict[tuple[int, ...], float] = {}
        for exps, coef in terms:
            exps = tuple(int(a) for a in exps)
            if len(exps) != dim:
                raise ValidationError(f"monomial {exps} does not have {dim} exponents")
            if any(a < 0 for a in exps):
                raise ValidationError(f"negative exponent in {exps}")
            coef = float(coef)
            if not math.isfinite(coef):
                raise ValidationError(f"non-finite coefficient {coef}")
            merged[exps] = merged.get(exps, 0.0) + coef
        monos = tuple(
            Monomial(e, c) for e, c in sorted(merged.items(), reverse=True) if c != 0.0
        )
        if not monos:
            raise ValidationError("potential is identically zero")
        degrees = {m.degree for m in monos}
        if len(degrees) > 1:
            raise ValidationError(f"not homogeneous: monomial degrees {sorted(degrees)}")
        degree = degrees.pop()
        if degree % 2 == 0:
            raise ValidationError(f"degree {degree} is even; an odd degree is required")
        if degree < 3:
            raise ValidationError(f"degree {degree} is below 3")
        return cls(dim=dim, monomials=monos, K=(degree - 1) // 2)

    @property
    def degree(self) -> int:
        return 2 * self.K + 1

    def __str__(self):
        return format_potential(self)


_NUMBER = re.compile(r"(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?")
_VARIABLE = re.compile(r"x(\d+)")
_INTEGER = re.compile(r"\d+")


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.pos = 0

    def error(self, message, pos=None):
        raise ParseError(message, self.text, self.pos if pos is None else pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def match(self, pattern):
        self.skip()
        m = pattern.match(self.text, self.pos)
        if m:
            self.pos = m.end()
        return m

    def parse(self):
        terms = []
        sign = 1.0
        if self.peek() in "+-" and self.peek():
            sign = -1.0 if self.text[self.pos] == "-" else 1.0
            self.pos += 1
        terms.append(self.term(sign))
        while self.peek():
            ch = self.peek()
            if ch not in "+-":
                self.error(f"expected '+' or '-', found {ch!r}")
            self.pos += 1
            terms.append(self.term(-1.0 if ch == "-" else 1.0))
        return terms

    def term(self, sign):
        if not self.peek():
            self.error("expected a term, found end of input")
        coef = sign
        exps = [0] * self.dim
        seen_factor = False
        while True:
            start = (self.skip(), self.pos)[1]
            num = self.match(_NUMBER)
            if num:
                coef *= float(num.group(0))
            else:
                var = self.match(_VARIABLE)
                if not var:
                    self.error("expected a number or a variable x<i>", start)
                index = int(var.group(1))
                if not 1 <= index <= self.dim:
                    raise ValidationError(
                        f"variable x{index} out of range for dimension {self.dim} "
                        f"(position {start})"
                    )
                power = 1
                if self.peek() == "^":
                    self.pos += 1
                    p = self.match(_INTEGER)
                    if not p:
                        self.error("expected a non-negative integer exponent")
                    power = int(p.group(0))
                exps[index - 1] += power
            seen_factor = True
            if self.peek() == "*":
                self.pos += 1
                continue
            break
        if not seen_factor:
            self.error("empty term")
        return tuple(exps), coef


def parse_potential(text: str, d: int) -> PolynomialPotential:
    """Parse ``text`` into a validated potential in ``d`` dimensions.

    Raises
    ------
    ParseError
        Malformed syntax; the message carries the offending position.
    ValidationError
        Not homogeneous, even degree, degree below 3, or a variable
        index larger than ``d``.
    """
    if d < 1:
        raise ValidationError(f"dimension must be positive, got {d}")
    terms = _Parser(text, d).parse()
    return PolynomialPotential.from_terms(d, terms)


def format_potential(W: PolynomialPotential) -> str:
    """Canonical text form, re-parseable by :func:`parse_potential`."""
    parts = []
    for i, mono in enumerate(W.monomials):
        factors = []
        for j, a in enumerate(mono.exponents):
            if a == 1:
                factors.append(f"x{j + 1}")
            elif a > 1:
                factors.append(f"x{j + 1}^{a}")
        c = mono.coefficient
        mag = abs(c)
        if mag != 1.0:
            factors.insert(0, repr(mag))
        body = "*".join(factors)
        if i == 0:
            parts.append(("-" if c < 0 else "") + body)
        else:
            parts.append(("- " if c < 0 else "+ ") + body)
    return " ".join(parts)


def evaluate(W: PolynomialPotential, x) -> float | np.ndarray:
    """Evaluate W at points ``x`` of shape ``(d,)`` or ``(..., d)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != W.dim:
        raise ValueError(f"expected last axis of length {W.dim}, got {x.shape}")
    total = np.zeros(x.shape[:-1])
    for mono in W.monomials:
        term = np.full(x.shape[:-1], mono.coefficient)
        for j, a in enumerate(mono.exponents):
            if a:
                term = term * x[..., j] ** a
        total = total + term
    return float(total) if total.ndim == 0 else total
