"""Dense matrices of H0, W, H(g) = H0 + igW, the parity P and Q(g) = P H(g).

All matrices live on the canonical truncated basis of :mod:`ptsingular.basis`.
W is assembled from exact 1-d power matrices of the position operator
computed on an index range padded by the polynomial degree, so every
retained entry is the true matrix element up to final rounding, and the
finite matrices satisfy the parity identities without round-off:

* W is exactly symmetric and vanishes between states of equal parity;
* P H(g) P == H(g)^† and Q(g) == Q(g)^† bit for bit, for real g.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from math import isqrt, prod, sqrt

import numpy as np

from .basis import ORDERING_VERSION, BasisTruncation, index_array
from .potential import PolynomialPotential, format_potential


class DimensionMismatch(ValueError):
    """Operands defined on different dimensions or bases."""


class NonRealCoupling(UserWarning):
    """Q(g) assembled at complex g; it is not Hermitian there."""


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex matrix over a truncated basis with verified structure flags.

    ``flags`` is a subset of ``{"hermitian", "real", "diagonal",
    "parity-off-block", "pt-structured"}``.  Flags are only attached after
    they have been checked against ``entries``.
    """

    basis: BasisTruncation
    entries: np.ndarray
    flags: frozenset = field(default_factory=frozenset)
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.basis.size
        if self.entries.shape != (n, n):
            raise DimensionMismatch(
                f"entries shape {self.entries.shape} does not match basis size {n}"
            )
        self.entries.setflags(write=False)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def norm(self) -> float:
        """Spectral norm (largest singular value)."""
        return float(np.linalg.norm(self.entries, 2))

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


def _parity_signs(t: BasisTruncation) -> np.ndarray:
    idx = index_array(t)
    return np.where(idx.sum(axis=1) % 2 == 0, 1.0, -1.0)


def _detect_flags(entries: np.ndarray, signs: np.ndarray) -> set:
    flags = set()
    if np.array_equal(entries, entries.conj().T):
        flags.add("hermitian")
    if not np.iscomplexobj(entries) or not np.any(entries.imag):
        flags.add("real")
    if np.count_nonzero(entries - np.diag(np.diag(entries))) == 0:
        flags.add("diagonal")
    same = signs[:, None] == signs[None, :]
    if not np.any(entries[same]):
        flags.add("parity-off-block")
    return flags


@lru_cache(maxsize=None)
def _ladder_power_integers(n: int, p: int) -> tuple:
    """Integer matrix of (a + a†)^p in the unnormalised basis |k) = sqrt(k!)|k>.

    In that basis a†|k) = |k+1) and a|k) = k|k-1), so powers stay integral.
    Returned as nested tuples of Python ints (exact).
    """
    cur = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(p):
        # B @ cur with B[i, i-1] = 1 (raising) and B[i, i+1] = i+1 (lowering)
        nxt = [[0] * n for _ in range(n)]
        for i in range(n):
            below = cur[i - 1] if i >= 1 else None
            above = cur[i + 1] if i + 1 < n else None
            for j in range(n):
                v = below[j] if below is not None else 0
                if above is not None:
                    v += (i + 1) * above[j]
                nxt[i][j] = v
        cur = nxt
    return tuple(tuple(r) for r in cur)


@lru_cache(maxsize=None)
def _position_power(n: int, p: int) -> np.ndarray:
    """Matrix of x^p on Hermite states 0..n-1 of -d²/dx² + x².

    The integer ladder powers are formed on ``n + p`` states, so every
    returned entry is the true matrix element up to the final float
    rounding; the result is symmetric bit for bit.
    """
    full = n + p
    ints = _ladder_power_integers(full, p)
    out = np.zeros((n, n))
    scale = 2.0 ** (-p / 2)
    for i in range(n):
        for j in range(i, n):
            c = ints[i][j]
            if c == 0:
                continue
            # <i|(a+a†)^p|j> = (B^p)[i, j] * sqrt(i!/j!); for j >= i the
            # inverse ratio j!/i! is an integer product.
            ratio = prod(range(i + 1, j + 1))
            root = isqrt(ratio)
            r = float(root) if root * root == ratio else sqrt(ratio)
            out[i, j] = c / r * scale
    out = np.triu(out) + np.triu(out, 1).T
    out.setflags(write=False)
    return out


def position_matrix_1d(n_max: int) -> OperatorMatrix:
    """Position operator on 1-d Hermite states 0..n_max.

    Tridiagonal with <n|x|n+1> = sqrt((n+1)/2).
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    t = BasisTruncation(1, n_max)
    x = _position_power(n_max + 1, 1).copy()
    return OperatorMatrix(t, x, frozenset({"real", "hermitian", "parity-off-block"}), "x")


def assemble_h0(t: BasisTruncation) -> OperatorMatrix:
    energies = 2.0 * index_array(t).sum(axis=1) + t.dim
    return OperatorMatrix(t, np.diag(energies), frozenset({"real", "diagonal", "hermitian"}), "H0")


def assemble_parity(t: BasisTruncation) -> OperatorMatrix:
    return OperatorMatrix(
        t, np.diag(_parity_signs(t)), frozenset({"real", "diagonal", "hermitian"}), "P"
    )


def assemble_w(t: BasisTruncation, W: PolynomialPotential) -> OperatorMatrix:
    """Matrix of W by the padded-product rule.

    Each factor x_i^a is taken from a 1-d power matrix built on the range
    [0, L + degree], and the d-dimensional element is the product of 1-d
    elements, so no entry is affected by the cutoff.
    """
    if W.dim != t.dim:
        raise DimensionMismatch(f"potential has dim {W.dim}, basis has dim {t.dim}")
    idx = index_array(t)
    n1 = t.cutoff + W.degree + 1
    out = np.zeros((t.size, t.size))
    for mono in W.monomials:
        term = np.full((t.size, t.size), mono.coefficient)
        for axis, a in enumerate(mono.exponents):
            if a == 0:
                # identity factor: keep only diagonal in this coordinate
                term = term * (idx[:, axis][:, None] == idx[:, axis][None, :])
                continue
            xa = _position_power(n1, a)
            term = term * xa[idx[:, axis][:, None], idx[:, axis][None, :]]
        out += term
    flags = _detect_flags(out, _parity_signs(t))
    return OperatorMatrix(t, out, frozenset(flags), "W", {"potential": format_potential(W)})


def assemble_h(t: BasisTruncation, W: PolynomialPotential, g: complex) -> OperatorMatrix:
    """H(g) = H0 + i g W."""
    h0 = assemble_h0(t)
    w = assemble_w(t, W)
    g = complex(g)
    entries = h0.entries + (1j * g) * w.entries
    if g == 0:
        entries = h0.entries.astype(complex)
    flags = set()
    if g.imag == 0 and {"hermitian", "parity-off-block"} <= w.flags:
        flags.add("pt-structured")
        if g.real == 0:
            flags |= {"hermitian", "diagonal"}
    return OperatorMatrix(
        t, entries, frozenset(flags), "H", {"potential": format_potential(W), "g": g}
    )


def assemble_q(t: BasisTruncation, W: PolynomialPotential, g: complex) -> OperatorMatrix:
    """Q(g) = P H(g).

    For real g the result is Hermitian bit for bit.  For complex g the
    matrix is still returned but without the ``hermitian`` flag, and a
    :class:`NonRealCoupling` warning is issued.
    """
    h = assemble_h(t, W, g)
    signs = _parity_signs(t)
    entries = signs[:, None] * h.entries
    flags = set()
    if complex(g).imag != 0:
        warnings.warn(
            f"Q(g) is not self-adjoint for non-real g={g}", NonRealCoupling, stacklevel=2
        )
    elif np.array_equal(entries, entries.conj().T):
        flags.add("hermitian")
    return OperatorMatrix(t, entries, frozenset(flags), "Q", dict(h.meta))


def assemble_q_prime(t: BasisTruncation, W: PolynomialPotential, g: complex) -> OperatorMatrix:
    """Q'(g) = H(g) P."""
    h = assemble_h(t, W, g)
    signs = _parity_signs(t)
    entries = h.entries * signs[None, :]
    flags = set()
    if complex(g).imag == 0 and np.array_equal(entries, entries.conj().T):
        flags.add("hermitian")
    return OperatorMatrix(t, entries, frozenset(flags), "Q'", dict(h.meta))


def dump_matrix(M: OperatorMatrix, path_or_file, potential: str | None = None, g=None) -> None:
    """Write ``M`` in the self-describing text format.

    Header lines start with ``#``; then one line per row holding the
    row's entries as ``re im`` pairs with 17 significant digits.
    """
    potential = potential if potential is not None else M.meta.get("potential", "")
    g = complex(g if g is not None else M.meta.get("g", 0.0))
    lines = [
        "# ptsingular-matrix",
        f"# operator {M.label}",
        f"# d {M.basis.dim}",
        f"# L {M.basis.cutoff}",
        f"# N {M.size}",
        f"# ordering {ORDERING_VERSION}",
        f"# potential {potential}",
        f"# g {g.real!r} {g.imag!r}",
    ]
    ent = np.asarray(M.entries, dtype=complex)
    for row in ent:
        lines.append(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_file, "write"):
        path_or_file.write(text)
    else:
        with open(path_or_file, "w") as fh:
            fh.write(text)


def load_matrix(path_or_file) -> tuple[dict, np.ndarray]:
    """Read a dump written by :func:`dump_matrix`; returns (header, entries)."""
    if hasattr(path_or_file, "read"):
        text = path_or_file.read()
    else:
        with open(path_or_file) as fh:
            text = fh.read()
    header: dict = {}
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(" ")
            header[key] = value
        elif line.strip():
            vals = np.array(line.split(), dtype=float)
            rows.append(vals[0::2] + 1j * vals[1::2])
    for key in ("d", "L", "N"):
        header[key] = int(header[key])
    re_, im_ = header["g"].split()
    header["g"] = complex(float(re_), float(im_))
    entries = np.array(rows, dtype=complex).reshape(header["N"], header["N"])
    return header, entries
