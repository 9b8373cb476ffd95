"""Executable checks of the singular-value identities on truncated matrices.

Two kinds of check are distinguished in every report:

``structural``
    identities that hold bit for bit on the assembled matrices because of
    parity structure (tolerance 0);
``numerical``
    comparisons between two independent numerical paths, with a
    tolerance scaled by the matrix norm.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .basis import BasisTruncation, MultiIndex, position_in_basis
from .linalg import (
    NoConvergence,
    SingularShift,
    eig_general,
    eig_hermitian,
    eigvec_inverse_iteration,
)
from .operators import assemble_h, assemble_parity, assemble_q, assemble_q_prime
from .potential import PolynomialPotential, format_potential


@dataclass
class VerificationReport:
    check_name: str
    parameters: dict
    measured_discrepancy: float
    tolerance: float
    kind: str = "numerical"
    details: dict = field(default_factory=dict)
    passed: bool = field(init=False)

    def __post_init__(self):
        self.measured_discrepancy = float(self.measured_discrepancy)
        self.tolerance = float(self.tolerance)
        self.passed = bool(self.measured_discrepancy <= self.tolerance)

    def to_dict(self) -> dict:
        d = asdict(self)
        return {
            "check_name": d["check_name"],
            "kind": d["kind"],
            "parameters": d["parameters"],
            "measured_discrepancy": d["measured_discrepancy"],
            "tolerance": d["tolerance"],
            "passed": d["passed"],
            "details": d["details"],
        }


def _real_g(g) -> float:
    g = complex(g)
    if g.imag != 0:
        raise ValueError(f"verification requires real g, got {g}")
    return g.real


def _params(t: BasisTruncation, W: PolynomialPotential, g: float, **extra) -> dict:
    p = {"d": t.dim, "L": t.cutoff, "N": t.size, "potential": format_potential(W), "g": g}
    p.update(extra)
    return p


def _inner(a: np.ndarray, b: np.ndarray) -> complex:
    # linear in the first argument, conjugate-linear in the second
    return complex(np.vdot(b, a))


def singular_values(t: BasisTruncation, W: PolynomialPotential, g: float) -> np.ndarray:
    """Singular values of H(g), ascending, as |eigenvalues of Q(g)|."""
    q = assemble_q(t, W, _real_g(g))
    return np.sort(np.abs(eig_hermitian(q, vectors=False).values))


def branch_value(t: BasisTruncation, W: PolynomialPotential, g: float, level) -> float:
    """Eigenvalue of Q(g) whose eigenvector overlaps most with the unperturbed ``level``."""
    dec = eig_hermitian(assemble_q(t, W, _real_g(g)))
    k = position_in_basis(t, level if isinstance(level, MultiIndex) else MultiIndex(tuple(level)))
    return float(dec.values[int(np.argmax(np.abs(dec.vectors[k, :])))])


def check_structure(t: BasisTruncation, W: PolynomialPotential, g: float) -> VerificationReport:
    """Q = Q^† and Q·Q = H^†H, exactly."""
    g = _real_g(g)
    h = assemble_h(t, W, g).entries
    q = assemble_q(t, W, g).entries
    herm = float(np.abs(q - q.conj().T).max())
    hd = np.ascontiguousarray(h.conj().T)
    qq = np.ascontiguousarray(q) @ np.ascontiguousarray(q)
    hh = hd @ np.ascontiguousarray(h)
    square = float(np.abs(qq - hh).max())
    return VerificationReport(
        "structure",
        _params(t, W, g),
        max(herm, square),
        0.0,
        "structural",
        {"max_abs_Q_minus_Qdagger": herm, "max_abs_QQ_minus_HdaggerH": square},
    )


def check_pseudohermiticity(t: BasisTruncation, W: PolynomialPotential, g: float) -> VerificationReport:
    """P H(g) P equals H(g)^† entrywise."""
    g = _real_g(g)
    h = assemble_h(t, W, g).entries
    p = np.diag(assemble_parity(t).entries)
    php = p[:, None] * h * p[None, :]
    disc = float(np.abs(php - h.conj().T).max())
    return VerificationReport("pseudohermiticity", _params(t, W, g), disc, 0.0, "structural")


def check_singular_values(t: BasisTruncation, W: PolynomialPotential, g: float) -> VerificationReport:
    """|eig(Q)| against sqrt(eig(H^†H)), both sorted."""
    g = _real_g(g)
    h = assemble_h(t, W, g).entries
    q = assemble_q(t, W, g)
    via_q = np.sort(np.abs(eig_hermitian(q, vectors=False).values))
    gram = h.conj().T @ h
    gram = (gram + gram.conj().T) / 2
    ev = eig_hermitian(gram, vectors=False).values
    via_gram = np.sqrt(np.clip(np.sort(ev), 0.0, None))
    norm_h = float(via_gram[-1])
    diff = np.abs(via_q - via_gram)
    return VerificationReport(
        "singular_values",
        _params(t, W, g),
        diff.max(),
        1e-10 * norm_h,
        "numerical",
        {
            "norm_H": norm_h,
            "worst_index": int(np.argmax(diff)),
            "lowest_singular_values": via_q[:6].tolist(),
        },
    )


def check_canonical_expansion(
    t: BasisTruncation, W: PolynomialPotential, g: float, n_trials: int = 20, seed: int = 0
) -> VerificationReport:
    """H u = Σ μ_k <u, ψ_k> P ψ_k for random unit u, and <Pψ_k, H ψ_l> = μ_k δ_kl."""
    g = _real_g(g)
    h = assemble_h(t, W, g).entries
    q = assemble_q(t, W, g)
    p = np.diag(assemble_parity(t).entries)
    dec = eig_hermitian(q)
    mu, psi = dec.values, dec.vectors
    norm_h = float(np.abs(mu).max())
    p_psi = p[:, None] * psi

    rng = np.random.default_rng(seed)
    recon = 0.0
    for _ in range(n_trials):
        u = rng.standard_normal(t.size) + 1j * rng.standard_normal(t.size)
        u /= np.linalg.norm(u)
        coeffs = psi.conj().T @ u  # <u, ψ_k>
        rhs = p_psi @ (mu * coeffs)
        recon = max(recon, float(np.linalg.norm(h @ u - rhs)))

    diag_matrix = p_psi.conj().T @ h @ psi
    diag_res = float(np.abs(diag_matrix - np.diag(mu)).max())
    pq_minus_h = float(np.abs(p[:, None] * q.entries - h).max())

    cross = np.abs(psi.conj().T @ p_psi)
    np.fill_diagonal(cross, 0.0)
    witness = float(cross.max()) if t.size > 1 else 0.0

    return VerificationReport(
        "canonical_expansion",
        _params(t, W, g, n_trials=n_trials, seed=seed),
        max(recon, diag_res),
        1e-9 * norm_h,
        "numerical",
        {
            "reconstruction_residual": recon,
            "diagonalization_residual": diag_res,
            "max_abs_PQ_minus_H": pq_minus_h,
            "max_offdiag_psi_Ppsi": witness,
            "norm_H": norm_h,
        },
    )


def check_eigen_relation(
    t: BasisTruncation, W: PolynomialPotential, g: float, window: int = 8
) -> VerificationReport:
    """λ_l <φ_l, P ψ_k> = μ_k <φ_l, ψ_k> over a window of low-lying l, k.

    φ_l comes from inverse iteration seeded with eigenvalues of H(g);
    ψ_k, μ_k from Q(g) ordered by |μ_k|.  Eigenvalues of H(g) closer than
    1e-8 ||H|| to another are skipped, not failed.
    """
    g = _real_g(g)
    H = assemble_h(t, W, g)
    q = assemble_q(t, W, g)
    p = np.diag(assemble_parity(t).entries)
    norm_h = H.norm()

    lam_all = eig_general(H).values
    dec = eig_hermitian(q)
    order = np.lexsort((dec.values, np.abs(dec.values)))[:window]
    mu, psi = dec.values[order], dec.vectors[:, order]

    worst = 0.0
    worst_ratio = 0.0
    skipped = []
    rows = []
    for l, lam in enumerate(lam_all[:window]):
        others = np.delete(lam_all, l)
        if others.size and np.abs(others - lam).min() <= 1e-8 * norm_h:
            skipped.append(l)
            continue
        try:
            phi = eigvec_inverse_iteration(H, lam, tol=1e-12, maxiter=100, norm=norm_h)
        except (NoConvergence, SingularShift):
            skipped.append(l)
            continue
        lam_r = phi.value
        for k in range(mu.size):
            lhs = lam_r * _inner(phi.vector, p * psi[:, k])
            rhs = mu[k] * _inner(phi.vector, psi[:, k])
            err = abs(lhs - rhs)
            scale = abs(lam_r) + abs(mu[k])
            worst = max(worst, err)
            worst_ratio = max(worst_ratio, err / scale)
            rows.append([l, k, err, scale])
    return VerificationReport(
        "eigen_relation",
        _params(t, W, g, window=window),
        worst_ratio,
        1e-7,
        "numerical",
        {
            "max_abs_error": worst,
            "skipped_degenerate": skipped,
            "eigenvalues": [[float(z.real), float(z.imag)] for z in lam_all[:window]],
            "complex_eigenvalues": bool(np.any(np.abs(lam_all[:window].imag) > 1e-8 * norm_h)),
            "pairs_checked": len(rows),
        },
    )


WEYL_ORDERINGS = ("increasing", "decreasing", "inverse")


def weyl_slacks(eigenvalues, singular, k_max: int, ordering: str = "increasing"):
    """Normalised slacks of the sum and product Weyl inequalities for k = 1..k_max.

    ``increasing``/``decreasing``: Σ|λ_j| <= Σμ_j and Π|λ_j| <= Πμ_j with both
    sequences ordered by increasing/decreasing modulus.
    ``inverse``: the same inequalities for H^{-1}, read in increasing order,
    i.e. Σ 1/|λ_j| <= Σ 1/μ_j and Πμ_j <= Π|λ_j|.

    Returns ``(sum_slack, prod_slack, sum_raw, prod_raw)``; normalised slacks
    are divided by the right-hand side, so ``>= 0`` means the inequality holds.
    """
    lam = np.asarray(eigenvalues, dtype=complex)
    lam = lam[np.lexsort((np.angle(lam), np.abs(lam)))]
    mods = np.abs(lam)
    sv = np.sort(np.asarray(singular, dtype=float))
    if ordering == "decreasing":
        mods, sv = mods[::-1], sv[::-1]
    elif ordering not in ("increasing", "inverse"):
        raise ValueError(f"ordering must be one of {WEYL_ORDERINGS}")
    k_max = min(k_max, mods.size)
    mods, sv = mods[:k_max], sv[:k_max]
    if ordering == "inverse":
        small, big = np.cumsum(1.0 / mods), np.cumsum(1.0 / sv)
        log_small, log_big = np.cumsum(np.log(sv)), np.cumsum(np.log(mods))
    else:
        small, big = np.cumsum(mods), np.cumsum(sv)
        log_small, log_big = np.cumsum(np.log(mods)), np.cumsum(np.log(sv))
    sum_raw = big - small
    sum_slack = sum_raw / big
    # 1 - Π(small)/Π(big), in log space to avoid overflow
    prod_slack = -np.expm1(log_small - log_big)
    prod_raw = np.exp(log_big) - np.exp(log_small)
    return sum_slack, prod_slack, sum_raw, prod_raw


def check_weyl(
    t: BasisTruncation,
    W: PolynomialPotential,
    g: float,
    k_max: int = 10,
    ordering: str = "increasing",
    tol: float = 1e-8,
) -> VerificationReport:
    """Sum and product Weyl inequalities between eigenvalues of H(g) and its singular values.

    The discrepancy is the largest violation ``max(0, -slack)`` over
    both forms and all k <= k_max, slacks normalised by the right-hand side.
    """
    g = _real_g(g)
    lam = eig_general(assemble_h(t, W, g)).values
    sv = singular_values(t, W, g)
    s_sl, p_sl, s_raw, p_raw = weyl_slacks(lam, sv, k_max, ordering)
    violation = max(0.0, -float(min(s_sl.min(), p_sl.min())))
    return VerificationReport(
        f"weyl_{ordering}",
        _params(t, W, g, k_max=k_max, ordering=ordering),
        violation,
        tol,
        "numerical",
        {
            "sum_slack": s_sl.tolist(),
            "product_slack": p_sl.tolist(),
            "sum_slack_raw": s_raw.tolist(),
            "max_abs_normalised_slack": float(max(np.abs(s_sl).max(), np.abs(p_sl).max())),
        },
    )


def check_conjugation_symmetry(t: BasisTruncation, W: PolynomialPotential, g: float) -> VerificationReport:
    """spectrum Q(g) == spectrum Q(-g) as multisets."""
    g = _real_g(g)
    a = eig_hermitian(assemble_q(t, W, g), vectors=False).values
    b = eig_hermitian(assemble_q(t, W, -g), vectors=False).values
    scale = max(float(np.abs(a).max()), 1.0)
    return VerificationReport(
        "conjugation_symmetry", _params(t, W, g), np.abs(a - b).max(), 1e-10 * scale
    )


def check_q_prime_spectrum(t: BasisTruncation, W: PolynomialPotential, g: float) -> VerificationReport:
    """spectrum Q'(g) = H(g) P equals spectrum Q(g) = P H(g)."""
    g = _real_g(g)
    q = assemble_q(t, W, g)
    qp = assemble_q_prime(t, W, g)
    dec = eig_hermitian(q)
    a = dec.values
    b = eig_hermitian(qp, vectors=False).values
    # eigenvector map: Q' (Pψ) = μ (Pψ)
    p = np.diag(assemble_parity(t).entries)
    p_psi = p[:, None] * dec.vectors
    vec_res = float(np.abs(qp.entries @ p_psi - p_psi * a).max())
    scale = max(float(np.abs(a).max()), 1.0)
    return VerificationReport(
        "q_prime_spectrum",
        _params(t, W, g),
        max(np.abs(a - b).max(), vec_res),
        1e-10 * scale,
        details={"eigenvector_map_residual": vec_res},
    )


@dataclass
class ConvergenceTable:
    quantity: str
    cutoffs: list
    values: list  # one list of values per cutoff
    changes: list  # max |Δ| to the previous cutoff (None for the first)
    converged_at: int | None
    stagnating: bool

    def to_rows(self):
        for L, vals, ch in zip(self.cutoffs, self.values, self.changes):
            yield L, vals, ch


def convergence_study(
    cutoffs,
    W: PolynomialPotential,
    g: float,
    quantity: str = "singular",
    count: int = 4,
    tol: float = 1e-8,
) -> ConvergenceTable:
    """Lowest ``count`` singular values (or eigenvalues of H) against the cutoff.

    ``converged_at`` is the first cutoff from which every later successive
    change stays below ``tol``.  ``stagnating`` flags a change that grows
    again after having decreased.
    """
    g = _real_g(g)
    cutoffs = [int(L) for L in cutoffs]
    if cutoffs != sorted(cutoffs) or len(set(cutoffs)) != len(cutoffs):
        raise ValueError("cutoffs must be strictly ascending")
    values = []
    for L in cutoffs:
        t = BasisTruncation(W.dim, L)
        if quantity == "singular":
            v = singular_values(t, W, g)[:count]
        elif quantity == "eigen":
            v = eig_general(assemble_h(t, W, g)).values[:count]
        else:
            raise ValueError("quantity must be 'singular' or 'eigen'")
        values.append(np.asarray(v))
    changes: list = [None]
    for a, b in zip(values, values[1:]):
        n = min(a.size, b.size)
        changes.append(float(np.abs(a[:n] - b[:n]).max()))
    converged_at = None
    for i in range(1, len(cutoffs)):
        if all(c is not None and c < tol for c in changes[i:]):
            converged_at = cutoffs[i - 1]
            break
    finite = [c for c in changes[1:]]
    stagnating = any(
        finite[i + 1] > finite[i] and finite[i] < finite[i - 1] for i in range(1, len(finite) - 1)
    )
    out_values = [
        [complex(x) if quantity == "eigen" else float(x) for x in v] for v in values
    ]
    return ConvergenceTable(quantity, cutoffs, out_values, changes, converged_at, stagnating)


CHECKS = {
    "structure": check_structure,
    "pseudohermiticity": check_pseudohermiticity,
    "singular_values": check_singular_values,
    "canonical_expansion": check_canonical_expansion,
    "eigen_relation": check_eigen_relation,
    "weyl": check_weyl,
    "conjugation_symmetry": check_conjugation_symmetry,
    "q_prime_spectrum": check_q_prime_spectrum,
}


def run_suite(
    t: BasisTruncation,
    W: PolynomialPotential,
    g_values,
    checks=None,
    workers: int = 1,
    weyl_ordering: str = "increasing",
    k_max: int = 10,
) -> list[VerificationReport]:
    """Run ``checks`` (default: all) at every g; result order is (g, check) order."""
    names = list(checks or CHECKS)
    jobs = []
    for g in g_values:
        for name in names:
            fn = CHECKS[name]
            if name == "weyl":
                jobs.append((fn, (t, W, g), {"k_max": k_max, "ordering": weyl_ordering}))
            else:
                jobs.append((fn, (t, W, g), {}))
    if workers <= 1:
        return [fn(*a, **kw) for fn, a, kw in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, *a, **kw) for fn, a, kw in jobs]
        return [f.result() for f in futures]


def all_passed(reports) -> bool:
    return all(r.passed for r in reports) and not any(
        math.isnan(r.measured_discrepancy) for r in reports
    )
