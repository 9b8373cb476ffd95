import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ptsingular.basis import BasisTruncation
from ptsingular.linalg import (
    NoConvergence,
    canonical_order,
    eig_general,
    eig_hermitian,
    eigvec_inverse_iteration,
)
from ptsingular.operators import assemble_h, assemble_q, assemble_w
from ptsingular.potential import parse_potential

from _oracles import durand_kerner, faddeev_leverrier

CUBIC = parse_potential("x1^3", 1)


def hermitian_matrices(n_max=12):
    @st.composite
    def build(draw):
        n = draw(st.integers(1, n_max))
        seed = draw(st.integers(0, 2**32 - 1))
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        return (a + a.conj().T) / 2

    return build()


def test_diagonal():
    dec = eig_hermitian(np.diag([1.0, 3.0, 5.0]))
    np.testing.assert_array_equal(dec.values, [1, 3, 5])
    np.testing.assert_allclose(np.abs(dec.vectors), np.eye(3))


def test_q_at_zero_coupling():
    dec = eig_hermitian(assemble_q(BasisTruncation(1, 3), CUBIC, 0.0))
    np.testing.assert_array_equal(dec.values, [-7, -3, 1, 5])


@pytest.mark.parametrize("g", [0.1, 0.7, 2.0])
def test_two_by_two_closed_form(g):
    c = assemble_w(BasisTruncation(1, 4), CUBIC).entries[0, 1]
    q = assemble_q(BasisTruncation(1, 1), CUBIC, g)
    # Q = [[1, i g c], [i g c, -3]]: eigenvalues -1 ± sqrt(4 + g²c²)
    disc = np.sqrt(4 + (g * c) ** 2)
    np.testing.assert_allclose(eig_hermitian(q).values, [-1 - disc, -1 + disc], rtol=1e-14)


def test_rejects_non_hermitian():
    with pytest.raises(ValueError):
        eig_hermitian(np.array([[1.0, 2.0], [0.0, 1.0]]))
    h = assemble_h(BasisTruncation(1, 3), CUBIC, 0.2)
    with pytest.raises(ValueError):
        eig_hermitian(h)


@settings(max_examples=60, deadline=None)
@given(hermitian_matrices())
def test_hermitian_invariants(a):
    n = a.shape[0]
    dec = eig_hermitian(a)
    norm = np.linalg.norm(a, 2)
    assert np.all(np.diff(dec.values) >= 0)
    assert abs(dec.values.sum() - np.trace(a).real) <= 1e-10 * n * max(norm, 1)
    assert abs((dec.values**2).sum() - np.linalg.norm(a, "fro") ** 2) <= 1e-10 * n * max(norm, 1) ** 2
    v = dec.vectors
    assert np.abs(v.conj().T @ v - np.eye(n)).max() <= 1e-10 * n
    assert np.all(dec.residuals <= 1e-10 * max(norm, 1))
    gen = eig_general(a).values
    np.testing.assert_allclose(gen.real, dec.values, atol=1e-8 * max(norm, 1))
    assert np.abs(gen.imag).max() <= 1e-8 * max(norm, 1)


def test_general_diagonal():
    vals = eig_general(np.diag([3.0, 1.0 + 2j, 1.0 - 2j])).values
    np.testing.assert_array_equal(vals, [1 - 2j, 1 + 2j, 3])


@pytest.mark.parametrize("L", [1, 2, 3])
@pytest.mark.parametrize("g", [0.05, 0.2])
def test_general_against_characteristic_polynomial(L, g):
    h = assemble_h(BasisTruncation(1, L), CUBIC, g)
    ref = durand_kerner(faddeev_leverrier(h.entries))
    ref = ref[canonical_order(ref)]
    got = eig_general(h).values
    np.testing.assert_allclose(got, ref, atol=1e-10)


@pytest.mark.parametrize("L", [1, 2, 3])
def test_small_coupling_spectrum_is_real(L):
    got = eig_general(assemble_h(BasisTruncation(1, L), CUBIC, 0.05)).values
    assert np.abs(got.imag).max() <= 1e-10
    np.testing.assert_allclose(got.real, 2 * np.arange(L + 1) + 1, atol=0.5)


def test_canonical_order_pairs_conjugates():
    z = np.array([5 + 0.3j, 1.0, 5 * (1 + 1e-15) - 0.3j])
    np.testing.assert_array_equal(canonical_order(z), [1, 2, 0])


@pytest.mark.parametrize("g", [0.1, 0.5, 2.0])
def test_conjugation_symmetry_of_h(g):
    t = BasisTruncation(1, 14)
    a = eig_general(assemble_h(t, CUBIC, g)).values
    b = eig_general(assemble_h(t, CUBIC, -g)).values
    b = np.conj(b)
    b = b[canonical_order(b)]
    np.testing.assert_allclose(a, b, atol=1e-9 * np.abs(a).max())


def test_large_coupling_produces_conjugate_pairs():
    vals = eig_general(assemble_h(BasisTruncation(1, 6), CUBIC, 3.0)).values
    complex_vals = vals[np.abs(vals.imag) > 1e-6]
    assert complex_vals.size >= 2
    for z in complex_vals:
        assert np.min(np.abs(vals - np.conj(z))) <= 1e-8 * np.abs(vals).max()


def test_general_residuals_are_small():
    dec = eig_general(assemble_h(BasisTruncation(1, 20), CUBIC, 0.2))
    sampled = dec.residuals[~np.isnan(dec.residuals)]
    assert sampled.size >= 1
    assert np.all(sampled <= 1e-8 * dec.norm)


@pytest.mark.parametrize("k", [0, 2, 4])
def test_inverse_iteration_diagonal(k):
    a = np.diag(np.arange(1.0, 6.0))
    res = eigvec_inverse_iteration(a, k + 1 + 0.1, tol=1e-13)
    expected = np.zeros(5)
    expected[k] = 1
    np.testing.assert_allclose(np.abs(res.vector), expected, atol=1e-10)
    assert res.value == pytest.approx(k + 1)


def test_inverse_iteration_matches_hermitian_solver():
    q = assemble_q(BasisTruncation(1, 20), CUBIC, 0.2)
    dec = eig_hermitian(q)
    for k in range(0, q.size, 4):
        res = eigvec_inverse_iteration(q, dec.values[k] + 1e-3)
        assert abs(np.vdot(res.vector, dec.vectors[:, k])) >= 1 - 1e-8


def test_inverse_iteration_exact_shift():
    a = np.diag([1.0, 2.0, 3.0])
    res = eigvec_inverse_iteration(a, 2.0)
    assert abs(res.vector[1]) == pytest.approx(1.0)


def test_inverse_iteration_non_normal():
    h = assemble_h(BasisTruncation(1, 20), CUBIC, 0.2)
    lam = eig_general(h).values
    for target in lam[:5]:
        res = eigvec_inverse_iteration(h, target, tol=1e-12)
        r = np.linalg.norm(h.entries @ res.vector - res.value * res.vector)
        assert r <= 1e-12 * np.linalg.norm(h.entries, 2)
        assert abs(res.value - target) <= 1e-8 * abs(target)


def test_near_degenerate_pair():
    rng = np.random.default_rng(3)
    u, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    a = u @ np.diag([1.0, 1.0 + 1e-6, 4.0]) @ u.T
    norm = np.linalg.norm(a, 2)
    try:
        res = eigvec_inverse_iteration(a, 1.0 + 5e-7)
    except NoConvergence:
        return
    assert res.residual <= 1e-8 * norm
    r = np.linalg.norm(a @ res.vector - res.value * res.vector)
    assert r <= 1e-8 * norm
    # the vector lies in the near-degenerate invariant subspace
    proj = u[:, :2] @ u[:, :2].T
    assert np.linalg.norm(proj @ res.vector - res.vector) <= 1e-6
