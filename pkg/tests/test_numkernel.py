import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from funnelstates import numkernel as nk
from funnelstates.errors import ContractError, SizingError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _complex_matrix(rng, n, m=None):
    return nk.random_complex_matrix(rng, n, m)


# -- kron ---------------------------------------------------------------


def test_kron_identities():
    np.testing.assert_allclose(nk.kron(np.eye(2), np.eye(3)), np.eye(6))


def test_kron_diagonal():
    np.testing.assert_allclose(
        nk.kron(np.diag([1.0, 2.0]), np.diag([3.0])), np.diag([3.0, 6.0]))


def test_kron_against_index_formula():
    # (a (x) b)[i*q + k, j*q + l] = a[i, j] * b[k, l]
    result = nk.kron(SIGMA_X, SIGMA_Z)
    assert result[0, 2] == 1.0
    p = q = 2
    brute = np.zeros((p * q, p * q), dtype=complex)
    for i in range(p):
        for j in range(p):
            for k in range(q):
                for l in range(q):
                    brute[i * q + k, j * q + l] = SIGMA_X[i, j] * SIGMA_Z[k, l]
    np.testing.assert_allclose(result, brute)


def test_kron_vec_convention(rng):
    # row-major: vec(A @ X) == kron(A, 1) @ vec(X)
    a = _complex_matrix(rng, 3)
    x = _complex_matrix(rng, 3)
    np.testing.assert_allclose(
        (a @ x).ravel(), nk.kron(a, np.eye(3)) @ x.ravel(), atol=1e-13)


def test_kron_sizing_error():
    with pytest.raises(SizingError):
        nk.kron(np.eye(128), np.eye(64))


# -- herm_eig -----------------------------------------------------------


def test_herm_eig_diagonal():
    eig = nk.herm_eig(np.diag([2.0, 1.0]))
    np.testing.assert_allclose(eig.eigenvalues, [2.0, 1.0])


def test_herm_eig_flip():
    eig = nk.herm_eig(SIGMA_X)
    np.testing.assert_allclose(eig.eigenvalues, [1.0, -1.0])


def test_herm_eig_reconstruction_seed7():
    rng = np.random.default_rng(7)
    m = nk.random_hermitian(rng, 8)
    eig = nk.herm_eig(m)
    assert nk.frob(eig.reconstruct() - m) <= 1e-10 * nk.frob(m)
    q = eig.eigenvectors
    assert nk.frob(nk.dagger(q) @ q - np.eye(8)) <= 1e-10


def test_herm_eig_rejects_non_hermitian(rng):
    with pytest.raises(ContractError):
        nk.herm_eig(_complex_matrix(rng, 4))


def test_herm_eig_deterministic_phases(rng):
    m = nk.random_hermitian(rng, 6)
    e1 = nk.herm_eig(m)
    e2 = nk.herm_eig(m.copy())
    np.testing.assert_array_equal(e1.eigenvectors, e2.eigenvectors)


# -- partial_trace ------------------------------------------------------


def test_partial_trace_product_case(rng):
    a = _complex_matrix(rng, 2)
    rho = a @ nk.dagger(a)
    b = _complex_matrix(rng, 3)
    sigma = b @ nk.dagger(b)
    joint = nk.kron(rho, sigma)
    np.testing.assert_allclose(
        nk.partial_trace(joint, [2, 3], [0]), rho * np.trace(sigma), atol=1e-12)


def test_partial_trace_preserves_trace(rng):
    m = _complex_matrix(rng, 12)
    reduced = nk.partial_trace(m, [2, 3, 2], [1])
    np.testing.assert_allclose(np.trace(reduced), np.trace(m), atol=1e-12)


def test_partial_trace_bell_state():
    bell = np.zeros(4, dtype=complex)
    bell[0] = bell[3] = 1 / np.sqrt(2)
    proj = np.outer(bell, bell.conj())
    # oracle: reduced[i, j] = sum_k proj[i*2 + k, j*2 + k]
    brute = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                brute[i, j] += proj[i * 2 + k, j * 2 + k]
    reduced = nk.partial_trace(proj, [2, 2], [0])
    np.testing.assert_allclose(reduced, brute, atol=1e-14)
    np.testing.assert_allclose(reduced, np.eye(2) / 2, atol=1e-14)


def test_partial_trace_composes(rng):
    m = _complex_matrix(rng, 16)
    step = nk.partial_trace(m, [2, 2, 2, 2], [0, 1, 3])
    two_step = nk.partial_trace(step, [2, 2, 2], [0, 1])
    direct = nk.partial_trace(m, [2, 2, 2, 2], [0, 1])
    assert nk.frob(two_step - direct) <= 1e-12


def test_partial_trace_dims_mismatch(rng):
    with pytest.raises(ContractError):
        nk.partial_trace(_complex_matrix(rng, 6), [2, 2], [0])


# -- trace_norm ---------------------------------------------------------


def test_trace_norm_diagonal():
    assert nk.trace_norm(np.diag([1.0, -2.0])) == pytest.approx(3.0)


def test_trace_norm_unitary(rng):
    u = nk.haar_unitary(rng, 5)
    assert nk.trace_norm(u) == pytest.approx(5.0, abs=1e-10)


def test_trace_norm_rank_one(rng):
    v = _complex_matrix(rng, 4, 1).ravel()
    w = _complex_matrix(rng, 4, 1).ravel()
    m = np.outer(v, w.conj())
    assert nk.trace_norm(m) == pytest.approx(
        np.linalg.norm(v) * np.linalg.norm(w), abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), scale=st.floats(0.1, 10.0))
def test_trace_norm_is_a_norm(seed, scale):
    rng = np.random.default_rng(seed)
    a = _complex_matrix(rng, 4)
    b = _complex_matrix(rng, 4)
    assert nk.trace_norm(a + b) <= nk.trace_norm(a) + nk.trace_norm(b) + 1e-10
    assert nk.trace_norm(scale * a) == pytest.approx(scale * nk.trace_norm(a), rel=1e-10)


# -- gram_schmidt -------------------------------------------------------


def test_gram_schmidt_basic():
    result = nk.gram_schmidt([np.array([1.0, 0.0]), np.array([1.0, 1.0])])
    np.testing.assert_allclose(result.vectors[0], [1.0, 0.0], atol=1e-14)
    np.testing.assert_allclose(result.vectors[1], [0.0, 1.0], atol=1e-14)
    assert not result.dropped and not result.all_zero


def test_gram_schmidt_idempotent_on_orthonormal(rng):
    u = nk.haar_unitary(rng, 4)
    result = nk.gram_schmidt([u[:, j] for j in range(4)])
    for j in range(4):
        assert np.linalg.norm(result.vectors[j] - u[:, j]) <= 1e-12


def test_gram_schmidt_drops_dependent_direction():
    rng = np.random.default_rng(3)
    vectors = [nk.random_complex_matrix(rng, 4, 1).ravel() for _ in range(5)]
    # oracle: the family has rank 4 by SVD
    rank = np.linalg.matrix_rank(np.column_stack(vectors), tol=1e-10)
    assert rank == 4
    result = nk.gram_schmidt(vectors)
    assert len(result.vectors) == 4
    assert len(result.dropped) == 1
    basis = np.column_stack(result.vectors)
    off = nk.dagger(basis) @ basis - np.eye(4)
    assert np.max(np.abs(off)) <= 1e-10


def test_gram_schmidt_all_zero():
    result = nk.gram_schmidt([np.zeros(3), np.zeros(3)])
    assert result.vectors == []
    assert result.all_zero


# -- misc ---------------------------------------------------------------


def test_sqrtm_psd(rng):
    g = _complex_matrix(rng, 5)
    m = g @ nk.dagger(g)
    s = nk.sqrtm_psd(m)
    assert nk.frob(s @ s - m) <= 1e-10 * nk.frob(m)


def test_finite_guard():
    bad = np.array([[1.0, np.inf], [0.0, 1.0]])
    with pytest.raises(ContractError):
        nk.as_cmatrix(bad)
