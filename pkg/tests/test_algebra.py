import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from periodic_lindblad import algebra
from periodic_lindblad.exceptions import BranchFailure, DimensionMismatch

from conftest import I2, SX, SZ, random_density, random_hermitian


def test_vectorize_identity_column_stacking():
    assert_allclose(algebra.vectorize(I2), [1, 0, 0, 1])
    M = np.array([[1, 2], [3, 4]])
    assert_allclose(algebra.vectorize(M), [1, 3, 2, 4])


def test_devectorize_round_trip(rng):
    M = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    assert np.linalg.norm(algebra.devectorize(algebra.vectorize(M)) - M) <= 1e-14


def test_sandwich_matches_direct_product(rng):
    A, B, rho = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
    direct = algebra.vectorize(A @ rho @ B)
    assert_allclose(algebra.sandwich(A, B) @ algebra.vectorize(rho), direct, atol=1e-13)
    assert_allclose(algebra.sandwich(A, B), np.kron(B.T, A))


def test_sandwich_examples():
    assert_allclose(algebra.sandwich(I2, I2), np.eye(4))
    assert_allclose(algebra.apply(algebra.sandwich(SX, SX), SZ), -SZ)
    H = np.diag([0.3, -1.1])
    L = -1j * (algebra.sandwich(H, I2) - algebra.sandwich(I2, H))
    assert_allclose(L, algebra.hamiltonian_part(H))
    assert_allclose(algebra.apply(L, H), 0, atol=1e-15)


def test_dimension_errors():
    with pytest.raises(DimensionMismatch):
        algebra.vectorize(np.ones((2, 3)))
    with pytest.raises(DimensionMismatch):
        algebra.sandwich(np.eye(2), np.eye(3))
    with pytest.raises(DimensionMismatch):
        algebra.devectorize(np.ones(5))
    with pytest.raises(DimensionMismatch):
        algebra.choi(np.eye(5))
    with pytest.raises(DimensionMismatch):
        algebra.partial_trace(np.eye(6), (2, 2))


def _choi_by_definition(S, d):
    # sum_ij |i><j| (x) L(|i><j|)
    C = np.zeros((d * d, d * d), dtype=complex)
    for i in range(d):
        for j in range(d):
            E = np.zeros((d, d))
            E[i, j] = 1
            C += np.kron(E, algebra.apply(S, E))
    return C


def test_choi_matches_definition(rng):
    for d in (2, 3):
        S = rng.normal(size=(d * d, d * d)) + 1j * rng.normal(size=(d * d, d * d))
        assert_allclose(algebra.choi(S), _choi_by_definition(S, d), atol=1e-14)


def test_choi_identity_is_maximally_entangled_projector():
    omega = np.array([1, 0, 0, 1])
    C = algebra.choi(np.eye(4))
    assert_allclose(C, np.outer(omega, omega))
    rep = algebra.cptp_report(np.eye(4))
    assert rep.cp and rep.tp


def test_cptp_unitary_conjugation():
    rep = algebra.cptp_report(algebra.sandwich(SZ, SZ))
    assert rep.cptp
    # Choi of Z-conjugation is rank one with eigenvalue 2
    ev = np.linalg.eigvalsh(algebra.choi(algebra.sandwich(SZ, SZ)))
    assert_allclose(ev, [0, 0, 0, 2], atol=1e-14)


def test_transpose_map_is_not_cp():
    S = algebra.superoperator_from_map(lambda r: r.T, 2)
    rep = algebra.cptp_report(S)
    assert rep.tp and not rep.cp
    assert_allclose(rep.min_choi_eig, -1.0, atol=1e-14)


def test_tp_failure_detected():
    rep = algebra.cptp_report(0.5 * np.eye(4))
    assert rep.cp and not rep.tp
    assert rep.tp_residual > 0.5


def test_matrix_exp_examples():
    assert_allclose(algebra.matrix_exp(np.zeros((3, 3))), np.eye(3))
    assert_allclose(algebra.matrix_exp([[0, 1], [0, 0]]), [[1, 1], [0, 1]], atol=1e-15)


def test_matrix_log_round_trip():
    D = np.diag([-0.3, -1.2])
    assert_allclose(algebra.matrix_log_principal(algebra.matrix_exp(D)), D, atol=1e-14)


def test_matrix_log_non_diagonalizable_falls_back():
    J = np.array([[2.0, 1.0], [0.0, 2.0]])
    L = algebra.matrix_log_principal(J)
    assert_allclose(algebra.matrix_exp(L), J, rtol=1e-10)


def test_matrix_log_branch_failure():
    with pytest.raises(BranchFailure):
        algebra.matrix_log_principal(np.diag([-1.0, 1.0]))
    with pytest.raises(BranchFailure):
        algebra.matrix_log_principal(np.diag([0.0, 1.0]))


def test_partial_trace_examples(rng):
    rho = random_density(2, rng)
    sigma = random_density(3, rng)
    assert_allclose(algebra.partial_trace(np.kron(rho, sigma), (2, 3), keep=0), rho, atol=1e-14)
    assert_allclose(algebra.partial_trace(np.kron(rho, sigma), (2, 3), keep="E"), sigma, atol=1e-14)
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert_allclose(algebra.partial_trace(np.outer(bell, bell), (2, 2), keep="S"), I2 / 2)
    M = rng.normal(size=(6, 6))
    assert_allclose(np.trace(algebra.partial_trace(M, (2, 3))), np.trace(M))


def test_partial_trace_by_index_loop(rng):
    M = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    out = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            out[i, j] = sum(M[3 * i + k, 3 * j + k] for k in range(3))
    assert_allclose(algebra.partial_trace(M, (2, 3), keep=0), out)


def test_lindbladian_preserves_hermiticity(rng):
    H = random_hermitian(3, rng)
    J = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    L = algebra.hamiltonian_part(H) + algebra.dissipator(J, 0.7)
    X = random_hermitian(3, rng)
    Y = algebra.apply(L, X)
    assert np.linalg.norm(Y - Y.conj().T) <= 1e-12
    assert abs(np.trace(Y)) <= 1e-12


complex_entries = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(complex_entries, min_size=18, max_size=18), st.complex_numbers(max_magnitude=5, allow_nan=False))
def test_vectorize_is_linear(entries, a):
    A = np.array(entries[:9]).reshape(3, 3)
    B = np.array(entries[9:]).reshape(3, 3)
    assert_allclose(algebra.vectorize(a * A + B), a * algebra.vectorize(A) + algebra.vectorize(B), atol=1e-11)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(-2, 2), st.floats(-2, 2))
def test_exp_of_commuting_sum_factorizes(seed, a, b):
    rng = np.random.default_rng(seed)
    H = random_hermitian(3, rng)
    A = a * H + 0.3 * H @ H
    B = b * H @ H @ H / 4
    assert np.linalg.norm(A @ B - B @ A) <= 1e-12 * (1 + np.linalg.norm(A) * np.linalg.norm(B))
    lhs = algebra.matrix_exp(A + B)
    rhs = algebra.matrix_exp(A) @ algebra.matrix_exp(B)
    assert_allclose(lhs, rhs, rtol=1e-9, atol=1e-9 * np.linalg.norm(lhs))
