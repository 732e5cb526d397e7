import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from periodic_lindblad import algebra
from periodic_lindblad.exceptions import DimensionMismatch, NonHermitianInput, UnknownFrequency
from periodic_lindblad.spectral import (
    SystemModel,
    congruence_check,
    decompose,
    interaction_picture_expansion_check,
    jump_component,
    jump_components,
    projector_resolution_residual,
    time_average,
)

from conftest import H_QUBIT, SX, SZ, random_hermitian


def brute_force_violations(freqs, Omega, tol=1e-9):
    """Every unordered pair of distinct frequencies whose difference is a nonzero multiple of Omega."""
    out = set()
    for w, wp in itertools.combinations(sorted(set(freqs)), 2):
        hi, lo = max(w, wp), min(w, wp)
        k = round((hi - lo) / Omega)
        if k != 0 and abs(hi - lo - k * Omega) <= tol:
            out.add((hi, lo, k))
    return out


def test_decompose_diagonal():
    spec = decompose(SystemModel(np.diag([0.0, 1.0])))
    assert_allclose(spec.eigenvalues, [0, 1])
    assert_allclose(spec.projectors[0], np.diag([1, 0]))
    assert_allclose(spec.bohr_frequencies, [-1, 0, 1])


def test_decompose_sigma_x():
    spec = decompose(SystemModel(SX))
    assert_allclose(spec.eigenvalues, [-1, 1], atol=1e-15)
    assert_allclose(spec.projectors[0], (np.eye(2) - SX) / 2, atol=1e-15)
    assert_allclose(spec.projectors[1], (np.eye(2) + SX) / 2, atol=1e-15)


def test_decompose_three_level_frequencies():
    spec = decompose(SystemModel(np.diag([0.0, 1.0, 3.0])))
    assert_allclose(spec.bohr_frequencies, [-3, -2, -1, 0, 1, 2, 3])
    assert spec.pairs[spec.index_of(2.0)] == ((2, 1),)


def test_degenerate_levels_share_a_projector():
    spec = decompose(SystemModel(np.diag([0.0, 1.0, 1.0 + 1e-13])))
    assert len(spec.eigenvalues) == 2
    assert_allclose(spec.projectors[1], np.diag([0, 1, 1]))


def test_non_hermitian_rejected():
    with pytest.raises(NonHermitianInput):
        decompose(SystemModel(np.array([[0, 1], [0, 0]])))
    with pytest.raises(DimensionMismatch):
        SystemModel(np.eye(2), (np.eye(3),))


def test_reconstruction_and_resolution(rng):
    H = random_hermitian(4, rng)
    spec = decompose(H)
    recon = sum(e * P for e, P in zip(spec.eigenvalues, spec.projectors))
    assert_allclose(recon, H, atol=1e-12)
    assert_allclose(sum(spec.projectors), np.eye(4), atol=1e-12)
    for (i, P), (j, Q) in itertools.product(enumerate(spec.projectors), repeat=2):
        assert_allclose(P @ Q, P if i == j else 0, atol=1e-12)
    assert projector_resolution_residual(spec) <= 1e-10


def test_frequency_set_symmetric_and_contains_zero(rng):
    spec = decompose(random_hermitian(4, rng))
    w = spec.bohr_frequencies
    assert 0.0 in w
    assert_allclose(np.sort(-w), w, atol=1e-12)


def test_jump_components_qubit():
    spec = decompose(SystemModel(H_QUBIT))
    e_g = np.array([[0, 0], [1, 0]])  # |e><g| with |g> = index 0
    assert_allclose(jump_component(SX, spec, 1.0), e_g)
    assert_allclose(jump_component(SX, spec, -1.0), e_g.T)
    assert_allclose(jump_component(SX, spec, 0.0), 0)
    assert_allclose(jump_component(SZ, spec, 0.0), SZ)
    assert_allclose(jump_component(SZ, spec, 1.0), 0)


def test_jump_component_three_level():
    spec = decompose(SystemModel(np.diag([0.0, 1.0, 3.0])))
    S2 = jump_component(np.ones((3, 3)), spec, 2.0)
    expected = np.zeros((3, 3))
    expected[2, 1] = 1
    assert_allclose(S2, expected)


def test_unknown_frequency():
    spec = decompose(SystemModel(H_QUBIT))
    with pytest.raises(UnknownFrequency):
        jump_component(SX, spec, 0.5)


def test_jump_components_properties(rng):
    H = random_hermitian(4, rng)
    S = random_hermitian(4, rng)
    spec = decompose(H)
    comps = jump_components(S, spec)
    assert_allclose(comps.sum(axis=0), S, atol=1e-10)
    for w, Sw in zip(spec.bohr_frequencies, comps):
        assert_allclose(H @ Sw - Sw @ H, w * Sw, atol=1e-10)
        assert_allclose(Sw.conj().T, jump_component(S, spec, -w), atol=1e-10)


def test_interaction_picture_expansion(rng):
    spec = decompose(SystemModel(H_QUBIT))
    # zero up to the rounding of the matrix exponential
    assert interaction_picture_expansion_check(SZ, spec, np.linspace(0, 10, 11)) <= 1e-14
    assert interaction_picture_expansion_check(SX, spec, np.linspace(0, 10, 51)) <= 1e-10
    spec3 = decompose(random_hermitian(3, rng))
    S = random_hermitian(3, rng)
    assert interaction_picture_expansion_check(S, spec3, np.linspace(0, 10, 51)) <= 1e-9


def test_congruence_examples():
    spec = decompose(SystemModel(np.diag([0.0, 1.0, 3.0])))
    assert congruence_check(spec, 7.0).free
    rep = congruence_check(spec, 5.0)
    assert not rep.free
    assert (2.0, -3.0, 1) in rep.violations
    assert set(rep.violations) == brute_force_violations(spec.bohr_frequencies, 5.0)
    rep = congruence_check(decompose(SystemModel(H_QUBIT)), 2.0)
    assert rep.violations == [(1.0, -1.0, 1)]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 0.7]))
def test_congruence_matches_brute_force(seed, Omega):
    rng = np.random.default_rng(seed)
    levels = rng.integers(0, 7, size=4) * 0.5
    spec = decompose(SystemModel(np.diag(levels)))
    rep = congruence_check(spec, Omega)
    assert set(rep.violations) == brute_force_violations(spec.bohr_frequencies, Omega)
    # each pair reported once, larger frequency first
    assert all(w > wp and k >= 1 for w, wp, k in rep.violations)


def test_time_average_examples():
    spec = decompose(SystemModel(H_QUBIT))
    assert_allclose(time_average(np.eye(4), spec), np.eye(4))
    assert_allclose(time_average(algebra.hamiltonian_part(SX), spec), 0, atol=1e-15)
    X = algebra.dissipator(SZ, 0.3) + algebra.hamiltonian_part(H_QUBIT)
    assert_allclose(time_average(X, spec), X, atol=1e-15)


def test_time_average_projection_properties(rng):
    H = random_hermitian(3, rng)
    spec = decompose(H)
    X = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    Xs = time_average(X, spec)
    assert_allclose(time_average(Xs, spec), Xs, atol=1e-10)
    adH = algebra.commutator(H)
    assert np.linalg.norm(Xs @ adH - adH @ Xs) <= 1e-9


def test_frequency_projectors_orthogonal(rng):
    spec = decompose(random_hermitian(3, rng))
    Es = [spec.frequency_projector(w) for w in spec.bohr_frequencies]
    for i, Ei in enumerate(Es):
        for j, Ej in enumerate(Es):
            assert np.linalg.norm(Ei @ Ej - (Ei if i == j else 0)) <= 1e-10
    assert np.linalg.norm(sum(Es) - np.eye(9)) <= 1e-10


def test_spectral_to_dict():
    d = decompose(SystemModel(H_QUBIT)).to_dict()
    assert d["degeneracies"] == [1, 1]
    assert d["pairs"][1] == [[0, 0], [1, 1]]
