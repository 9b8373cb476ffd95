"""Dense eigen-decomposition with residual contracts.

The factorizations themselves are LAPACK's (Householder tridiagonalization
plus MRRR for Hermitian input, Hessenberg plus shifted QR for general
input).  This module fixes the ordering convention, computes per-pair
residuals and raises when a contract is not met.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .operators import OperatorMatrix


class ConvergenceFailure(RuntimeError):
    """Solver did not meet its residual contract."""


class SingularShift(ArithmeticError):
    """Shift coincides with an eigenvalue and a perturbed retry also failed."""


class NoConvergence(RuntimeError):
    """Inverse iteration did not reach the residual tolerance."""


@dataclass
class SpectralDecomposition:
    """Eigenvalues sorted ascending by real part, then imaginary part.

    ``vectors[:, k]`` is the unit eigenvector for ``values[k]``.
    ``residuals[k]`` is ``||M v - λ v||`` (Hermitian path) or the backward
    error ``σ_min(M - λ I)`` (general path, NaN where not sampled).
    """

    values: np.ndarray
    vectors: np.ndarray | None = None
    residuals: np.ndarray | None = None
    norm: float = float("nan")


def _entries(M) -> np.ndarray:
    if isinstance(M, OperatorMatrix):
        return M.entries
    return np.asarray(M)


def canonical_order(values: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Indices sorting ``values`` by real part, then imaginary part.

    Real parts within ``rtol * max|value|`` of each other count as equal,
    so conjugate pairs come out as (-imag, +imag) regardless of rounding.
    """
    values = np.asarray(values)
    if values.size == 0:
        return np.zeros(0, dtype=int)
    re = values.real
    by_real = np.argsort(re, kind="stable")
    tol = rtol * float(np.abs(values).max())
    key = np.empty_like(re)
    anchor = re[by_real[0]]
    for k in by_real:
        if re[k] - anchor > tol:
            anchor = re[k]
        key[k] = anchor
    return np.lexsort((values.imag, key))


def eig_hermitian(M, vectors: bool = True, tol: float = 1e-10) -> SpectralDecomposition:
    """Eigen-decomposition of a Hermitian matrix.

    ``M`` is an :class:`OperatorMatrix` carrying the ``hermitian`` flag, or a
    plain array that is Hermitian to ``1e-12`` relative.  Each returned pair
    satisfies ``||M v - λ v|| <= tol * ||M||``.
    """
    if isinstance(M, OperatorMatrix):
        if "hermitian" not in M.flags:
            raise ValueError(f"matrix {M.label!r} is not flagged hermitian")
        a = M.entries
    else:
        a = np.asarray(M)
        scale = np.abs(a).max() if a.size else 0.0
        if np.abs(a - a.conj().T).max(initial=0.0) > 1e-12 * max(scale, 1.0):
            raise ValueError("input is not Hermitian")
    try:
        if vectors:
            w, v = sla.eigh(a, check_finite=True)
        else:
            w = sla.eigh(a, eigvals_only=True, check_finite=True)
            v = None
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    norm = float(np.abs(w).max()) if w.size else 0.0
    res = None
    if v is not None:
        res = np.linalg.norm(a @ v - v * w, axis=0)
        bad = np.flatnonzero(res > tol * max(norm, np.finfo(float).tiny))
        if bad.size:
            raise ConvergenceFailure(
                f"{bad.size} of {w.size} pairs exceed residual {tol:g}*||M||; "
                f"worst {res.max():.3e}"
            )
    return SpectralDecomposition(w, v, res, norm)


def eig_general(M, n_check: int = 4, tol: float = 1e-8) -> SpectralDecomposition:
    """Eigenvalues of a general square matrix, canonically sorted.

    ``n_check`` eigenvalues spread across the spectrum are spot-checked:
    the smallest singular value of ``M - λ I`` must not exceed
    ``tol * ||M||``.
    """
    a = _entries(M)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"square matrix required, got shape {a.shape}")
    try:
        w = sla.eigvals(a, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    w = w[canonical_order(w)]
    norm = float(np.linalg.norm(a, 2)) if a.size else 0.0
    res = np.full(w.shape, np.nan)
    if n_check and w.size:
        picks = np.unique(np.linspace(0, w.size - 1, min(n_check, w.size)).astype(int))
        eye = np.eye(a.shape[0])
        for k in picks:
            res[k] = sla.svdvals(a - w[k] * eye)[-1]
        if np.nanmax(res) > tol * max(norm, np.finfo(float).tiny):
            raise ConvergenceFailure(f"backward error {np.nanmax(res):.3e} exceeds {tol:g}*||M||")
    return SpectralDecomposition(w, None, res, norm)


class InverseIterationResult(NamedTuple):
    vector: np.ndarray
    value: complex
    residual: float
    iterations: int


def _phase_fix(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


def eigvec_inverse_iteration(
    M, shift: complex, tol: float = 1e-8, maxiter: int = 50, norm: float | None = None
) -> InverseIterationResult:
    """Eigenvector for the eigenvalue nearest ``shift`` by inverse iteration.

    Returns the unit vector (phase fixed so its largest component is real
    positive), the refined eigenvalue ``v^† M v`` and the residual
    ``||M v - λ' v||``, which is at most ``tol * ||M||``.
    """
    a = np.asarray(_entries(M), dtype=complex)
    n = a.shape[0]
    norm = float(np.linalg.norm(a, 2)) if norm is None else norm
    eye = np.eye(n)

    def factor(sigma):
        with warnings.catch_warnings():
            warnings.simplefilter("error", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(a - sigma * eye, check_finite=False)
        if np.any(np.diag(lu) == 0):
            raise ZeroDivisionError
        return lu, piv

    try:
        lu = factor(shift)
    except (ZeroDivisionError, sla.LinAlgWarning, np.linalg.LinAlgError):
        bumped = shift + 1e-10 * max(norm, 1.0) * (1 + 1j)
        try:
            lu = factor(bumped)
        except (ZeroDivisionError, sla.LinAlgWarning, np.linalg.LinAlgError) as exc:
            raise SingularShift(f"shift {shift} is singular even after perturbation") from exc

    # deterministic, generic start vector
    v = np.cos(np.arange(1, n + 1) * 0.7) + 1j * np.sin(np.arange(1, n + 1) * 0.3)
    v /= np.linalg.norm(v)
    lam = shift
    res = np.inf
    for it in range(1, maxiter + 1):
        v = sla.lu_solve(lu, v, check_finite=False)
        nv = np.linalg.norm(v)
        if not np.isfinite(nv) or nv == 0:
            raise NoConvergence("inverse iteration produced a non-finite vector")
        v /= nv
        mv = a @ v
        lam = complex(np.vdot(v, mv))
        res = float(np.linalg.norm(mv - lam * v))
        if res <= tol * norm:
            return InverseIterationResult(_phase_fix(v), lam, res, it)
    raise NoConvergence(f"residual {res:.3e} after {maxiter} iterations (target {tol * norm:.3e})")
