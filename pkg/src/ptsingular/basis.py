"""Truncated eigenbasis of the d-dimensional harmonic oscillator -Δ + x².

Basis functions are products of 1-d Hermite functions labelled by a
multi-index (l_1, ..., l_d).  The truncation keeps every multi-index whose
principal quantum number l = l_1 + ... + l_d does not exceed a cutoff L.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

#: Version tag for the canonical ordering; written into matrix dumps.
ORDERING_VERSION = "principal-lex-v1"


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Quantum numbers (l_1, ..., l_d) of a Hermite product state."""

    entries: tuple[int, ...]

    def __post_init__(self):
        entries = tuple(int(e) for e in self.entries)
        if not entries:
            raise ValueError("MultiIndex needs at least one entry")
        if any(e < 0 for e in entries):
            raise ValueError(f"negative quantum number in {entries}")
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return len(self.entries)

    @property
    def principal(self) -> int:
        return sum(self.entries)

    @property
    def parity(self) -> int:
        return 1 if self.principal % 2 == 0 else -1

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __repr__(self):
        return f"MultiIndex{self.entries}"


@dataclass(frozen=True)
class BasisTruncation:
    """Dimension ``dim`` and maximal principal quantum number ``cutoff``."""

    dim: int
    cutoff: int

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")
        if int(self.cutoff) < 0:
            raise ValueError(f"cutoff must be non-negative, got {self.cutoff}")

    @property
    def size(self) -> int:
        return comb(self.cutoff + self.dim, self.dim)


def _compositions(total: int, parts: int):
    # lexicographic order on the tuple
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=64)
def _enumerate(dim: int, cutoff: int) -> tuple[MultiIndex, ...]:
    out = []
    for level in range(cutoff + 1):
        out.extend(MultiIndex(c) for c in _compositions(level, dim))
    return tuple(out)


def enumerate_basis(t: BasisTruncation) -> list[MultiIndex]:
    """Return the basis in canonical order.

    Ordering is by ascending principal quantum number, ties broken
    lexicographically on (l_1, ..., l_d); for ``dim=2, cutoff=1`` this gives
    ``(0,0), (0,1), (1,0)``.
    """
    return list(_enumerate(t.dim, t.cutoff))


def index_array(t: BasisTruncation) -> np.ndarray:
    """Basis as an integer array of shape (size, dim), canonical order."""
    arr = np.array([m.entries for m in _enumerate(t.dim, t.cutoff)], dtype=np.int64)
    return arr.reshape(t.size, t.dim)


def h0_energy(m: MultiIndex, d: int | None = None) -> float:
    """Eigenvalue 2l + d of the harmonic oscillator for state ``m``."""
    d = m.dim if d is None else d
    return float(2 * m.principal + d)


def ph0_energy(m: MultiIndex, d: int | None = None) -> float:
    """Eigenvalue of parity times oscillator: +(2l+d) for even l, -(2l+d) for odd l."""
    return m.parity * h0_energy(m, d)


def degeneracy(l: int, d: int) -> int:
    """Number of multi-indices in ``d`` dimensions with principal number ``l``."""
    if l < 0 or d < 1:
        raise ValueError("need l >= 0 and d >= 1")
    return comb(l + d - 1, d - 1)


def position_in_basis(t: BasisTruncation, m: MultiIndex) -> int:
    """Row index of ``m`` in the canonical ordering."""
    if m.dim != t.dim or m.principal > t.cutoff:
        raise ValueError(f"{m} is not in the basis {t}")
    # states at lower principal numbers come first
    offset = comb(m.principal - 1 + t.dim, t.dim) if m.principal > 0 else 0
    return offset + _enumerate(t.dim, m.principal)[offset:].index(m)
