"""Borel-Leroy summation of order q with Padé continuation.

Given a series Σ μ_s g^s, the order-q transform is

    μ_B(t) = Σ b_s t^s,    b_s = μ_s / Γ(q(s+1)),

and the sum is recovered as

    μ(g) = (1/q) ∫_0^∞ μ_B(g t) exp(-t^{1/q}) dt
         = ∫_0^∞ μ_B(g u^q) u^{q-1} e^{-u} du        (u = t^{1/q}).

Term by term the second integral returns μ_s g^s exactly.  After μ_B is
continued beyond its disc of convergence by a Padé approximant, the
integral is evaluated with generalized Gauss-Laguerre quadrature (weight
u^{q-1}e^{-u}), which is exact on every term whose q·s is an integer.  When
some nonzero term has non-integer q·s, a Gauss rule for the weight
(1/q)exp(-t^{1/q}) in the t variable is used instead; its moments are
Γ(q(k+1)), so it is exact on every power of t.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln, roots_genlaguerre

from .linalg import canonical_order
from .perturbation import PowerSeries


class SingularPadeTable(ArithmeticError):
    """Padé linear system is numerically singular and no fallback is allowed."""


class PoleOnRay(UserWarning):
    """A Padé pole lies on (or very near) the positive integration ray."""


def _coefficients(series) -> np.ndarray:
    if isinstance(series, PowerSeries):
        return np.asarray(series.coefficients, dtype=float)
    return np.asarray(series, dtype=float)


def default_q(K: int) -> float:
    """Leroy order (2K-1)/2 for a potential of degree 2K+1."""
    return (2 * K - 1) / 2


def borel_transform(series, q: float) -> np.ndarray:
    """b_s = μ_s / Γ(q(s+1)) for s = 0..N."""
    if q <= 0:
        raise ValueError(f"order q must be positive, got {q}")
    mu = _coefficients(series)
    if mu.size < 2:
        raise ValueError("need at least two coefficients")
    s = np.arange(mu.size)
    return mu * np.exp(-gammaln(q * (s + 1)))


@dataclass
class PadeApproximant:
    """Rational function P(t)/R(t) with R(0) = 1."""

    numerator: np.ndarray
    denominator: np.ndarray
    requested: tuple[int, int]
    fallback: bool = False

    @property
    def degrees(self) -> tuple[int, int]:
        return len(self.numerator) - 1, len(self.denominator) - 1

    @property
    def poles(self) -> np.ndarray:
        den = np.trim_zeros(self.denominator, "b")
        if den.size <= 1:
            return np.zeros(0, dtype=complex)
        roots = np.roots(den[::-1]).astype(complex)
        return roots[canonical_order(roots)]

    def __call__(self, t):
        t = np.asarray(t)
        P = np.polynomial.polynomial.polyval(t, self.numerator)
        R = np.polynomial.polynomial.polyval(t, self.denominator)
        return P / R


def _pade_solve(b, M, Mp, rcond):
    if Mp == 0:
        return b[: M + 1].copy(), np.ones(1)
    rows = np.arange(M + 1, M + Mp + 1)
    cols = np.arange(1, Mp + 1)
    lag = rows[:, None] - cols[None, :]
    A = np.where(lag >= 0, b[np.clip(lag, 0, None)], 0.0)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[0] == 0 or sv[-1] < rcond * sv[0]:
        return None
    tail = np.linalg.solve(A, -b[rows])
    den = np.concatenate([[1.0], tail])
    num = np.array(
        [sum(den[j] * b[i - j] for j in range(min(i, Mp) + 1)) for i in range(M + 1)]
    )
    return num, den


def pade_continue(b, degrees: tuple[int, int], rcond: float = 1e-13, fallback: bool = True) -> PadeApproximant:
    """[M/M'] Padé approximant matching b_0..b_{M+M'}.

    If the denominator system is numerically singular the degrees are
    lowered to (M-1, M'-1), repeatedly, and ``fallback`` is set on the
    result.  With ``fallback=False`` a :class:`SingularPadeTable` is raised
    instead.
    """
    b = np.asarray(b, dtype=float)
    M, Mp = (int(d) for d in degrees)
    if M < 0 or Mp < 0:
        raise ValueError(f"invalid Padé degrees {degrees}")
    if M + Mp + 1 > b.size:
        raise ValueError(f"[{M}/{Mp}] needs {M + Mp + 1} coefficients, have {b.size}")
    m, mp = M, Mp
    while True:
        solved = _pade_solve(b, m, mp, rcond)
        if solved is not None:
            num, den = solved
            return PadeApproximant(num, den, (M, Mp), fallback=(m, mp) != (M, Mp))
        if not fallback:
            raise SingularPadeTable(f"[{m}/{mp}] Padé system is singular")
        if m == 0:
            m, mp = 0, mp - 1
        else:
            m, mp = m - 1, mp - 1


# mpmath precision is process-global
_MP_LOCK = threading.Lock()


@lru_cache(maxsize=32)
def moment_gauss_rule(q: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss nodes and weights for the weight (1/q) exp(-t^{1/q}) on [0, ∞).

    The three-term recurrence is obtained from the moments Γ(q(k+1)) by the
    Chebyshev algorithm in extended precision.  Nodes from the double
    precision Jacobi matrix are polished by Newton steps on the degree-n
    orthogonal polynomial, and weights come from the Christoffel sum, both
    in extended precision, so tiny weights keep their relative accuracy.
    """
    if q <= 0 or n < 1:
        raise ValueError("need q > 0 and n >= 1")
    dps = 30 + 4 * n
    with _MP_LOCK, mpmath.workdps(dps):
        qm = mpmath.mpf(q)
        mom = [mpmath.gamma(qm * (k + 1)) for k in range(2 * n)]
        alpha, beta = [mom[1] / mom[0]], [mom[0]]
        prev, cur = [mpmath.mpf(0)] * (2 * n), mom
        for k in range(1, n):
            nxt = [mpmath.mpf(0)] * (2 * n)
            for j in range(k, 2 * n - k):
                nxt[j] = cur[j + 1] - alpha[k - 1] * cur[j] - beta[k - 1] * prev[j]
            alpha.append(nxt[k + 1] / nxt[k] - cur[k] / cur[k - 1])
            beta.append(nxt[k] / cur[k - 1])
            prev, cur = cur, nxt

        def recur(x):
            # monic p_n(x), p_n'(x) and Σ p_k(x)²/h_k for k < n
            p0, p1, d0, d1 = mpmath.mpf(0), mpmath.mpf(1), mpmath.mpf(0), mpmath.mpf(0)
            h, christoffel = beta[0], mpmath.mpf(0)
            for k in range(n):
                christoffel += p1 * p1 / h
                if k + 1 < n:
                    h *= beta[k + 1]
                b = beta[k] if k else 0
                p0, p1, d0, d1 = p1, (x - alpha[k]) * p1 - b * p0, d1, p1 + (x - alpha[k]) * d1 - b * d0
            return p1, d1, christoffel

        guess, _ = eigh_tridiagonal(
            np.array([float(a) for a in alpha]), np.sqrt([float(b) for b in beta[1:]])
        )
        nodes, weights = [], []
        eps = mpmath.mpf(10) ** (-(dps // 2))
        for x0 in guess:
            x = mpmath.mpf(x0)
            for _ in range(100):
                p, dp, _ = recur(x)
                step = p / dp
                x -= step
                if abs(step) <= eps * abs(x):
                    break
            nodes.append(float(x))
            weights.append(float(1 / recur(x)[2]))
    return np.array(nodes), np.array(weights)


def _integer_powers(b: np.ndarray, q: float) -> bool:
    qs = q * np.flatnonzero(b)
    return bool(np.all(np.abs(qs - np.round(qs)) <= 1e-12 * np.maximum(qs, 1.0)))


QUADRATURE_RULES = ("auto", "laguerre", "moment")


@dataclass
class BorelResult:
    g: float
    q: float
    value: float
    pade_degrees: tuple[int, int]
    quadrature_nodes: int
    continuation_poles: list = field(default_factory=list)
    pole_warning: bool = False
    requested_degrees: tuple[int, int] | None = None
    pade_fallback: bool = False
    quadrature_rule: str = "laguerre"

    def to_dict(self) -> dict:
        return {
            "g": self.g,
            "q": self.q,
            "value": self.value,
            "pade_degrees": list(self.pade_degrees),
            "requested_degrees": list(self.requested_degrees or self.pade_degrees),
            "pade_fallback": self.pade_fallback,
            "quadrature_nodes": self.quadrature_nodes,
            "quadrature_rule": self.quadrature_rule,
            "continuation_poles": [[float(p.real), float(p.imag)] for p in self.continuation_poles],
            "pole_warning": self.pole_warning,
        }


def poles_near_ray(poles, rel_tol: float = 1e-3) -> list:
    """Poles whose distance to [0, ∞) is below ``rel_tol * |pole|``."""
    near = []
    for p in poles:
        dist = abs(p.imag) if p.real >= 0 else abs(p)
        if dist <= rel_tol * abs(p):
            near.append(p)
    return near


def borel_sum(
    series,
    g: float,
    q: float | None = None,
    quadrature_nodes: int = 64,
    degrees: tuple[int, int] | None = None,
    pole_tol: float = 1e-3,
    quadrature: str = "auto",
) -> BorelResult:
    """Borel-Leroy sum of ``series`` at coupling ``g >= 0``.

    ``q`` defaults to (2K-1)/2 when ``series`` is a :class:`PowerSeries`
    carrying K.  ``degrees`` defaults to (⌊N/2⌋, ⌊N/2⌋).  A Padé pole
    within ``pole_tol`` (relative) of the integration ray sets
    ``pole_warning`` and issues :class:`PoleOnRay`; the value is still
    returned.

    ``quadrature`` selects generalized Gauss-Laguerre in u = t^{1/q}
    (``"laguerre"``), the moment-based Gauss rule in t (``"moment"``), or
    (``"auto"``) Laguerre when every nonzero term has integer q·s and the
    moment rule otherwise.
    """
    if quadrature not in QUADRATURE_RULES:
        raise ValueError(f"quadrature must be one of {QUADRATURE_RULES}")
    if g < 0:
        raise ValueError("borel_sum requires g >= 0")
    if q is None:
        K = getattr(series, "K", None)
        if K is None:
            raise ValueError("q must be given for a bare coefficient list")
        q = default_q(K)
    b = borel_transform(series, q)
    N = b.size - 1
    if degrees is None:
        degrees = (N // 2, N // 2)
    pade = pade_continue(b, degrees)
    poles = list(pade.poles)
    flagged = poles_near_ray(poles, pole_tol)
    if flagged:
        warnings.warn(
            f"Padé pole(s) {flagged} on the integration ray; Borel sum may be unreliable",
            PoleOnRay,
            stacklevel=2,
        )
    if quadrature == "auto":
        quadrature = "laguerre" if _integer_powers(b, q) else "moment"
    if quadrature == "laguerre":
        u, w = roots_genlaguerre(quadrature_nodes, q - 1.0)
        t = u**q
    else:
        t, w = moment_gauss_rule(float(q), int(quadrature_nodes))
    value = float(np.real(w @ pade(g * t)))
    return BorelResult(
        g=float(g),
        q=float(q),
        value=value,
        pade_degrees=pade.degrees,
        quadrature_nodes=int(quadrature_nodes),
        continuation_poles=poles,
        pole_warning=bool(flagged),
        requested_degrees=tuple(degrees),
        pade_fallback=pade.fallback,
        quadrature_rule=quadrature,
    )


def borel_integral_t(series, g: float, q: float, degrees: tuple[int, int] | None = None) -> float:
    """Same sum by adaptive quadrature in the original variable t.

    Evaluates (1/q) ∫_0^∞ μ_B(g t) exp(-t^{1/q}) dt with QUADPACK; used
    to cross-check the Laguerre route.
    """
    b = borel_transform(series, q)
    N = b.size - 1
    pade = pade_continue(b, degrees or (N // 2, N // 2))
    f = lambda t: float(np.real(pade(g * t))) * np.exp(-(t ** (1.0 / q))) / q  # noqa: E731
    val, _ = integrate.quad(f, 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=400)
    return float(val)
