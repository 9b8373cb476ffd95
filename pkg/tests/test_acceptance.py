"""Acceptance criteria, one test per criterion.

Each test prints a single PASS/FAIL line; the lines are repeated in the
terminal summary under "acceptance criteria".
"""

import math
import subprocess
import sys

import numpy as np
from scipy import integrate

from ptsingular.basis import BasisTruncation, MultiIndex
from ptsingular.borel import borel_sum
from ptsingular.linalg import eig_general
from ptsingular.operators import assemble_h, assemble_parity, assemble_q
from ptsingular.perturbation import rs_coefficients
from ptsingular.potential import parse_potential
from ptsingular.verify import (
    branch_value,
    check_canonical_expansion,
    check_eigen_relation,
    check_singular_values,
    check_weyl,
    convergence_study,
    singular_values,
    weyl_slacks,
)

CUBIC = parse_potential("x1^3", 1)
HH = parse_potential("x1^2*x2", 2)

# (d, W, cutoffs) for the structural / two-path / expansion grid
STRUCT_GRID = [(1, CUBIC, (20, 40)), (2, HH, (12, 20))]
STRUCT_G = (0.1, 0.4)

# full test grid for the Weyl criterion
WEYL_GRID = [(1, "x1^3", 40), (1, "x1^5", 40), (2, "x1^2*x2", 20)]
WEYL_G = (0.0, 0.05, 0.2, 0.4)


def _struct_cases():
    for d, W, cutoffs in STRUCT_GRID:
        for L in cutoffs:
            for g in STRUCT_G:
                yield BasisTruncation(d, L), W, g


def test_criterion_01_structural_identities(acceptance):
    worst = {"Q-Q†": 0.0, "PHP-H†": 0.0, "Q²-H†H": 0.0}
    for t, W, g in _struct_cases():
        h = assemble_h(t, W, g).entries
        q = np.ascontiguousarray(assemble_q(t, W, g).entries)
        p = assemble_parity(t).entries
        hd = np.ascontiguousarray(h.conj().T)
        worst["Q-Q†"] = max(worst["Q-Q†"], np.abs(q - q.conj().T).max())
        worst["PHP-H†"] = max(worst["PHP-H†"], np.abs(p @ h @ p - hd).max())
        worst["Q²-H†H"] = max(worst["Q²-H†H"], np.abs(q @ q - hd @ h).max())
    detail = ", ".join(f"max|{k}|={v:.1e}" for k, v in worst.items())
    acceptance(1, "structural identities exact", all(v == 0 for v in worst.values()), detail)


def test_criterion_02_two_path_singular_values(acceptance):
    ratios = []
    for t, W, g in _struct_cases():
        r = check_singular_values(t, W, g)
        ratios.append(r.measured_discrepancy / r.details["norm_H"])
    worst = max(ratios)
    acceptance(2, "|eig Q| = sqrt(eig H†H) within 1e-10·‖H‖", worst <= 1e-10,
               f"worst discrepancy/‖H‖ = {worst:.2e}")


def test_criterion_03_canonical_expansion(acceptance):
    recon, diag = [], []
    for t, W, g in _struct_cases():
        r = check_canonical_expansion(t, W, g, n_trials=20)
        norm = r.details["norm_H"]
        recon.append(r.details["reconstruction_residual"] / norm)
        diag.append(r.details["diagonalization_residual"] / norm)
    ok = max(recon) <= 1e-9 and max(diag) <= 1e-9
    acceptance(3, "canonical expansion within 1e-9·‖H‖", ok,
               f"reconstruction {max(recon):.2e}, diagonalization {max(diag):.2e} (relative to ‖H‖)")


def test_criterion_04_eigen_relation(acceptance):
    r = check_eigen_relation(BasisTruncation(1, 40), CUBIC, 0.2, window=8)
    ok = r.passed and r.details["pairs_checked"] == 64 and r.tolerance == 1e-7
    acceptance(4, "eigen relation on 8x8 window, x³, g=0.2", ok,
               f"max |λ<φ,Pψ> - μ<φ,ψ>|/(|λ|+|μ|) = {r.measured_discrepancy:.2e}")


def test_criterion_05_weyl_inequalities(acceptance):
    """Sum and product Weyl forms, both sequences in increasing modulus, k <= 10.

    Equality at g = 0 is checked to 1e-12.  The increasing-order reading
    fails for g != 0 on this operator class (see the printed violations);
    the decreasing-order and inverse forms are reported alongside.
    """
    worst_violation = 0.0
    where = None
    zero_dev = 0.0
    other = {"decreasing": 0.0, "inverse": 0.0}
    for d, text, L in WEYL_GRID:
        W = parse_potential(text, d)
        t = BasisTruncation(d, L)
        for g in WEYL_G:
            lam = eig_general(assemble_h(t, W, g)).values
            sv = singular_values(t, W, g)
            s_sl, p_sl, _, _ = weyl_slacks(lam, sv, 10, "increasing")
            if g == 0.0:
                zero_dev = max(zero_dev, np.abs(s_sl).max(), np.abs(p_sl).max())
            v = max(0.0, -float(min(s_sl.min(), p_sl.min())))
            if v > worst_violation:
                worst_violation, where = v, (text, g)
            for ordering in other:
                r = check_weyl(t, W, g, k_max=10, ordering=ordering)
                other[ordering] = max(other[ordering], r.measured_discrepancy)
    ok = worst_violation <= 1e-8 and zero_dev <= 1e-12
    detail = (
        f"increasing order: worst normalised violation {worst_violation:.3g} at {where}; "
        f"g=0 deviation {zero_dev:.1e}; decreasing order violation {other['decreasing']:.1e}; "
        f"inverse form violation {other['inverse']:.1e}"
    )
    acceptance(5, "Weyl inequalities, increasing-modulus order, k<=10", ok, detail)


def _five_point_second(f, h):
    return (-f(2 * h) + 16 * f(h) - 30 * f(0.0) + 16 * f(-h) - f(-2 * h)) / (12 * h * h)


def _five_point_fourth(f, h):
    return (f(2 * h) - 4 * f(h) + 6 * f(0.0) - 4 * f(-h) + f(-2 * h)) / h**4


def _even_five_point_mu4(f, h):
    # f is even in g: fit c0 + c1 g² + ... + c4 g⁸ through g = 0, h, .., 4h
    x2 = (h * np.arange(5)) ** 2
    vals = np.array([f(x) for x in h * np.arange(5)])
    coeffs = np.linalg.solve(np.vander(x2, 5, increasing=True), vals)
    return coeffs[2]


def test_criterion_06_perturbation_oracle(acceptance):
    level = MultiIndex((0,))
    series = rs_coefficients(BasisTruncation(1, 4 * 3 + 2 + 20), CUBIC, level, 4)
    mu = series.coefficients
    t = BasisTruncation(1, 40)

    def f(g):
        return branch_value(t, CUBIC, g, level)

    h = 1e-2
    mu2_fd = _five_point_second(f, h) / 2
    mu4_fd = _even_five_point_mu4(f, h)
    mu4_std = _five_point_fourth(f, h) / 24
    odd_ok = abs(mu[1]) <= 1e-8 * abs(mu[0]) and abs(mu[3]) <= 1e-8 * abs(mu[0])
    rel2 = abs(mu[2] - mu2_fd) / abs(mu[2])
    rel4 = abs(mu[4] - mu4_fd) / abs(mu[4])
    rel4_std = abs(mu[4] - mu4_std) / abs(mu[4])
    ok = odd_ok and rel2 <= 1e-5 and rel4 <= 1e-5
    detail = (
        f"|μ1|={abs(mu[1]):.1e} |μ3|={abs(mu[3]):.1e}; μ2={mu[2]:.10g} rel.dev {rel2:.1e}; "
        f"μ4={mu[4]:.10g} rel.dev {rel4:.1e} (even-branch stencil), "
        f"{rel4_std:.1e} (plain central stencil)"
    )
    acceptance(6, "RS coefficients vs finite differences, h=1e-2", ok, detail)


def test_criterion_07_borel_stieltjes(acceptance):
    mu = np.array([(-1) ** s * math.factorial(s) for s in range(13)], dtype=float)
    res = borel_sum(mu, 0.2, q=1.0, degrees=(6, 6), quadrature_nodes=64)
    ref, _ = integrate.quad(lambda u: np.exp(-u) / (1 + 0.2 * u), 0, np.inf, epsabs=1e-13, epsrel=1e-12)
    err = abs(res.value - ref)
    acceptance(7, "Stieltjes series Borel-Padé sum vs adaptive quadrature", err <= 1e-8,
               f"value {res.value:.15g}, reference {ref:.15g}, |error| {err:.1e}, Padé used {res.pade_degrees}")


def test_criterion_08_borel_cubic_ground_level(acceptance):
    level = MultiIndex((0,))
    series = rs_coefficients(BasisTruncation(1, 16 * 3 + 2), CUBIC, level, 16)
    parts, ok = [], True
    for g, tol in ((0.02, 1e-4), (0.05, 1e-3)):
        res = borel_sum(series, g, q=0.5)
        direct = branch_value(BasisTruncation(1, 40), CUBIC, g, level)
        rel = abs(res.value - direct) / abs(direct)
        ok &= rel <= tol
        parts.append(f"g={g}: borel {res.value:.15g} direct {direct:.15g} rel {rel:.1e}")
    acceptance(8, "Borel-Leroy sum of x³ ground series vs diagonalization", ok, "; ".join(parts))


def test_criterion_09_truncation_convergence(acceptance):
    a = convergence_study([40, 50], CUBIC, 0.2, count=4).changes[1]
    b = convergence_study([18, 22], HH, 0.1, count=4).changes[1]
    acceptance(9, "lowest 4 singular values stable under cutoff increase", a < 1e-9 and b < 1e-7,
               f"x³ L 40→50: {a:.1e}; Hénon-Heiles L 18→22: {b:.1e}")


CLI_RUNS = [
    ["spectrum", "--cutoff", "20", "--g-grid", "0:0.4:5"],
    ["singular", "--dim", "2", "--potential", "x1^2*x2", "--cutoff", "10", "--g-grid", "0:0.2:3", "--workers", "2"],
    ["perturb", "--order", "16"],
    ["borel", "--g-grid", "0.02:0.1:3", "--compare-direct"],
    ["sweep", "--cutoff", "16", "--g-grid", "0:0.3:4", "--quantity", "eigen"],
    ["verify", "--cutoff", "16", "--g", "0.2", "--weyl-order", "inverse"],
]


def test_criterion_10_cli_determinism(acceptance, tmp_path):
    mismatched = []
    for n, args in enumerate(CLI_RUNS):
        blobs = []
        for rep in range(2):
            path = tmp_path / f"run{n}_{rep}.out"
            subprocess.run(
                [sys.executable, "-m", "ptsingular", *args, "--output", str(path)],
                check=True, capture_output=True,
            )
            blobs.append(path.read_bytes())
        if blobs[0] != blobs[1] or not blobs[0]:
            mismatched.append(args[0])
    acceptance(10, "repeated CLI runs give byte-identical files", not mismatched,
               f"{len(CLI_RUNS)} invocations compared; mismatches: {mismatched or 'none'}")
