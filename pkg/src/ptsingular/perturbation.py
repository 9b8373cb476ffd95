"""Rayleigh-Schrödinger series for eigenvalue branches of Q(g) = P H0 + i g P W.

The unperturbed operator P H0 is diagonal with entries ±(2l+d); the
perturbation V = i P W is Hermitian.  Coefficients are generated by the
nondegenerate recursion with intermediate normalisation <ψ0, ψ_s> = 0,
run directly on the truncated matrices.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from .basis import (
    BasisTruncation,
    MultiIndex,
    degeneracy,
    enumerate_basis,
    position_in_basis,
)
from .operators import assemble_parity, assemble_w
from .potential import PolynomialPotential


class DegenerateLevel(ValueError):
    """The unperturbed level is degenerate; only nondegenerate levels are supported."""


class TruncationTooSmall(ValueError):
    """Cutoff does not leave room for the requested order."""


class InsufficientOrders(ValueError):
    """Too few nonzero coefficients for a growth fit."""


@dataclass
class PowerSeries:
    """Coefficients μ_0..μ_N of Σ μ_s g^s for one eigenvalue branch of Q(g)."""

    coefficients: np.ndarray
    level: MultiIndex | None = None
    truncation: BasisTruncation | None = None
    stability: np.ndarray | None = None
    K: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __call__(self, g: float, upto: int | None = None) -> float:
        """Partial sum through order ``upto`` (default: all)."""
        c = self.coefficients[: (self.order if upto is None else upto) + 1]
        return float(np.polynomial.polynomial.polyval(g, c))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("s,mu_s,stability_estimate\n")
        stab = self.stability if self.stability is not None else np.full(self.order + 1, np.nan)
        for s, (mu, st) in enumerate(zip(self.coefficients, stab)):
            buf.write(f"{s},{float(mu)!r},{float(st)!r}\n")
        return buf.getvalue()


def _rs_raw(t: BasisTruncation, W: PolynomialPotential, level: MultiIndex, order: int):
    signs = np.diag(assemble_parity(t).entries)
    q0 = signs * (2.0 * np.array([m.principal for m in enumerate_basis(t)]) + t.dim)
    V = 1j * (signs[:, None] * assemble_w(t, W).entries)
    k = position_in_basis(t, level)
    e0 = q0[k]
    gap = e0 - q0
    gap[k] = np.inf  # reduced resolvent: drop the unperturbed direction
    n = q0.size
    psi = [np.zeros(n, dtype=complex)]
    psi[0][k] = 1.0
    mu = [complex(e0)]
    imag = [0.0]
    for s in range(1, order + 1):
        vpsi = V @ psi[s - 1]
        m = vpsi[k] - sum(mu[j] * psi[s - j][k] for j in range(1, s))
        mu.append(m)
        imag.append(abs(m.imag))
        rhs = vpsi - sum(mu[j] * psi[s - j] for j in range(1, s + 1))
        nxt = rhs / gap
        nxt[k] = 0.0
        psi.append(nxt)
    mu = np.array(mu)
    return mu.real.copy(), np.array(imag)


def rs_coefficients(
    t: BasisTruncation, W: PolynomialPotential, level: MultiIndex, order: int
) -> PowerSeries:
    """Rayleigh-Schrödinger coefficients μ_0..μ_order of the Q(g) branch from ``level``.

    Parameters
    ----------
    t : BasisTruncation
        Must satisfy ``cutoff >= principal(level) + order*(2K+1) + 2``.
    W : PolynomialPotential
    level : MultiIndex
        Unperturbed state; ±(2l+d) must be a simple eigenvalue of P H0.
    order : int
        Highest order N >= 1.

    Returns
    -------
    PowerSeries
        With ``stability[s] = |μ_s(L) - μ_s(L-2)|``.
    """
    level = level if isinstance(level, MultiIndex) else MultiIndex(tuple(level))
    if level.dim != t.dim or W.dim != t.dim:
        raise ValueError("level, potential and basis dimensions differ")
    if order < 1:
        raise ValueError("order must be at least 1")
    if degeneracy(level.principal, t.dim) > 1:
        raise DegenerateLevel(
            f"level {level} has degeneracy {degeneracy(level.principal, t.dim)}"
        )
    needed = level.principal + order * W.degree + 2
    if t.cutoff < needed:
        raise TruncationTooSmall(f"cutoff {t.cutoff} < required {needed} for order {order}")

    mu, imag = _rs_raw(t, W, level, order)
    bad = imag > 1e-12 * np.abs(mu)
    if np.any(bad):
        s = int(np.flatnonzero(bad)[0])
        raise ArithmeticError(f"coefficient μ_{s} has imaginary part {imag[s]:.3e}")

    stability = np.full(order + 1, np.nan)
    lower = BasisTruncation(t.dim, t.cutoff - 2)
    if lower.cutoff >= level.principal:
        mu_lo, _ = _rs_raw(lower, W, level, order)
        stability = np.abs(mu - mu_lo)
    return PowerSeries(
        coefficients=mu,
        level=level,
        truncation=t,
        stability=stability,
        K=W.K,
        meta={"max_imag": float(imag.max())},
    )


class GrowthFit(NamedTuple):
    A: float
    C: float
    q_fit: float
    rms: float


def coefficient_growth_fit(series, q_max: float = 4.0) -> GrowthFit:
    """Fit |μ_s| ≈ A C^s Γ(q s) over the nonzero coefficients with s >= 1.

    For each trial q the pair (log A, log C) is a linear least-squares
    problem; q itself is found by a grid scan refined with a bounded
    scalar minimisation.
    """
    mu = np.asarray(series.coefficients if isinstance(series, PowerSeries) else series, float)
    if mu.size - 1 < 8:
        raise InsufficientOrders(f"need order >= 8, got {mu.size - 1}")
    s = np.arange(mu.size)
    keep = (s >= 1) & (mu != 0)
    if isinstance(series, PowerSeries) and series.stability is not None:
        # coefficients indistinguishable from truncation noise carry no growth
        keep &= ~(np.abs(mu) <= np.nan_to_num(series.stability, nan=0.0))
    s, y = s[keep].astype(float), np.log(np.abs(mu[keep]))
    if s.size < 4:
        raise InsufficientOrders(f"only {s.size} usable coefficients")
    design = np.column_stack([np.ones_like(s), s])

    def solve(q):
        r = y - gammaln(q * s)
        coef, *_ = np.linalg.lstsq(design, r, rcond=None)
        return coef, float(np.sum((design @ coef - r) ** 2))

    grid = np.linspace(1e-6, q_max, 801)
    q0 = grid[int(np.argmin([solve(q)[1] for q in grid]))]
    step = grid[1] - grid[0]
    opt = minimize_scalar(
        lambda q: solve(q)[1],
        bounds=(max(1e-9, q0 - step), q0 + step),
        method="bounded",
        options={"xatol": 1e-10},
    )
    q = float(opt.x)
    coef, ss = solve(q)
    return GrowthFit(float(np.exp(coef[0])), float(np.exp(coef[1])), q, float(np.sqrt(ss / s.size)))
