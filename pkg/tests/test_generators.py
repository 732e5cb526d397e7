import numpy as np
import pytest
from conftest import H_QUBIT, I2, OMEGA_FAST, SX, SY, SZ, random_density
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from periodic_lindblad import algebra, generators
from periodic_lindblad.bath import DampedOscillatoryBath, ExponentialBath
from periodic_lindblad.exceptions import CongruenceViolation, TruncationInsufficient
from periodic_lindblad.generators import (
    GklsGenerator,
    adiabatic_rates,
    build_adiabatic_generator,
    build_wcl_generator,
    covariance_check,
    gram_matrix,
    wcl_rates,
)
from periodic_lindblad.spectral import SystemModel, decompose
from periodic_lindblad.steering import (
    ConstantSteering,
    CosineSteering,
    SineSteering,
    builtin_steering,
    square_wave,
)


def exp_h(w, a=1.0):
    return 2 * a / (a**2 + w**2)


def exp_zeta(w, a=1.0):
    return -w / (a**2 + w**2)


# ------------------------------------------------------------------ rates
def test_wcl_rates_cos_example(cos_fast, exp_bath):
    gamma, xi = wcl_rates([cos_fast], exp_bath, 1.0)
    assert_allclose(gamma, [[0.5]], atol=1e-12)
    assert_allclose(xi, [[-0.25]], atol=1e-12)


def test_wcl_rates_zero_steering(exp_bath):
    gamma, xi = wcl_rates([ConstantSteering(0.0, 1.0)], exp_bath, 0.3)
    assert np.all(gamma == 0) and np.all(xi == 0)


def test_wcl_rates_two_identical_channels():
    M = np.array([[1.0, 0.4 + 0.3j], [0.4 - 0.3j, 0.8]])
    b = DampedOscillatoryBath(a=0.6, omega_c=1.5, mixing=M)
    g = square_wave(2.0)
    gamma, xi = wcl_rates([g, g], b, 0.7)
    h, z = b.transform(0.7)
    # Gram factor of identical functions is the mean square, here 1 for +-1
    assert_allclose(gamma, h, atol=1e-12)
    assert_allclose(xi, z, atol=1e-12)
    assert np.linalg.eigvalsh(gamma).min() >= -1e-12


def test_gram_matrix_parseval_against_series():
    gs = [builtin_steering(1.0)[k] for k in ("cos", "sin", "fourier", "sampled")]
    G = gram_matrix(gs)
    N = 2000
    coeffs = np.array([g.coefficients(N) for g in gs])
    series = coeffs.conj() @ coeffs.T  # [nu, mu] = sum conj(g_nu) g_mu
    assert_allclose(G, series, atol=1e-6)
    assert_allclose(G, G.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(G).min() >= -1e-12


def test_gram_truncation_insufficient():
    with pytest.raises(TruncationInsufficient):
        gram_matrix([square_wave(1.0)], n_trunc=3)


def test_truncation_stability():
    g = square_wave(OMEGA_FAST)
    b = ExponentialBath(a=1.0)
    for N in (4, 16, 64):
        g1, _ = wcl_rates([g], b, 1.0, n_trunc=N, rtol=1.0)
        g2, _ = wcl_rates([g], b, 1.0, n_trunc=2 * N, rtol=1.0)
        h, _ = b.transform(1.0)
        assert abs(g2[0, 0] - g1[0, 0]) <= np.linalg.norm(h, 2) * g.l2_tail(N) + 1e-14


def test_shifted_rates_cos_oracle(cos_fast, exp_bath):
    for w in (-1.0, 0.0, 1.0):
        gamma, xi = wcl_rates([cos_fast], exp_bath, w, shifted=True)
        assert_allclose(gamma[0, 0], 0.25 * (exp_h(w + OMEGA_FAST) + exp_h(w - OMEGA_FAST)), atol=1e-12)
        assert_allclose(xi[0, 0], 0.25 * (exp_zeta(w + OMEGA_FAST) + exp_zeta(w - OMEGA_FAST)), atol=1e-12)


def test_adiabatic_rates_examples(exp_bath):
    W = 2.0
    h, z = exp_bath.transform(0.4)
    gamma, xi = adiabatic_rates([CosineSteering(W)], exp_bath, 0.4, 0.0)
    assert_allclose(gamma, h)
    assert_allclose(xi, z)
    gamma, _ = adiabatic_rates([CosineSteering(W)], exp_bath, 0.4, np.pi / (2 * W))
    assert_allclose(gamma, 0, atol=1e-15)
    b2 = ExponentialBath(a=1.0, n=2)
    h2, _ = b2.transform(0.4)
    gamma, _ = adiabatic_rates([CosineSteering(W), SineSteering(W)], b2, 0.4, np.pi / (4 * W))
    assert_allclose(gamma, 0.5 * np.ones((2, 2)) * h2, atol=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 10), st.floats(-3, 3))
def test_adiabatic_rates_psd_and_periodic(t, w):
    W = 1.7
    M = np.array([[1.0, 0.5j], [-0.5j, 1.0]])
    b = DampedOscillatoryBath(a=0.8, omega_c=1.0, mixing=M)
    gs = [CosineSteering(W), square_wave(W)]
    gamma, _ = adiabatic_rates(gs, b, w, t)
    assert np.linalg.eigvalsh(gamma).min() >= -1e-12
    gamma_T, _ = adiabatic_rates(gs, b, w, t + 2 * np.pi / W)
    assert_allclose(gamma_T, gamma, atol=1e-12)


# ------------------------------------------------------------- WCL generator
def test_canonical_wcl_generator(qubit_model, qubit_spec, cos_fast, exp_bath):
    gen = build_wcl_generator(qubit_model, qubit_spec, [cos_fast], exp_bath, OMEGA_FAST)
    # Lamb shift in the basis ordering ground, excited: diag(-1/4, 1/4)
    assert_allclose(gen.lamb_shift(), np.diag([-0.25, 0.25]), atol=1e-12)
    freqs = list(gen.frequencies)
    gamma, _ = gen.rates()
    assert_allclose(gamma[freqs.index(1.0)], [[0.5]], atol=1e-12)
    assert_allclose(gamma[freqs.index(-1.0)], [[0.5]], atol=1e-12)
    # hand assembly: lowering operator at +1, raising at -1
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    L = (algebra.hamiltonian_part(H_QUBIT + np.diag([-0.25, 0.25]))
         + algebra.dissipator(sm, 0.5) + algebra.dissipator(sm.conj().T, 0.5))
    assert_allclose(gen.superoperator(), L, atol=1e-12)


def test_zero_steering_is_hamiltonian(qubit_model, qubit_spec, exp_bath):
    gen = build_wcl_generator(qubit_model, qubit_spec, [ConstantSteering(0.0, OMEGA_FAST)], exp_bath)
    assert_allclose(gen.superoperator(), algebra.hamiltonian_part(H_QUBIT), atol=1e-15)


def test_dephasing_generator(exp_bath):
    model = SystemModel(H_QUBIT, (SZ,))
    gen = build_wcl_generator(model, None, [CosineSteering(OMEGA_FAST)], exp_bath)
    for k, w in enumerate(gen.frequencies):
        if w != 0.0:
            assert np.abs(gen.jumps[0, k]).max() == 0.0
    g0 = 0.5 * exp_h(0.0)
    dH = gen.lamb_shift()
    assert_allclose(dH, dH[0, 0] * I2, atol=1e-14)
    D = g0 * (algebra.sandwich(SZ, SZ) - np.eye(4))
    assert_allclose(gen.dissipator(), D, atol=1e-12)


def test_congruence_violation(qubit_model, qubit_spec, exp_bath):
    with pytest.raises(CongruenceViolation) as info:
        build_wcl_generator(qubit_model, qubit_spec, [CosineSteering(2.0)], exp_bath)
    assert info.value.violations


def test_omega_mismatch_rejected(qubit_model, qubit_spec, cos_fast, exp_bath):
    with pytest.raises(ValueError):
        build_wcl_generator(qubit_model, qubit_spec, [cos_fast], exp_bath, Omega=5.0)


# -------------------------------------------------------- adiabatic generator
def test_adiabatic_uniform_factorization(qubit_model, qubit_spec, exp_bath):
    W = 0.5
    g = CosineSteering(W)
    gen = build_adiabatic_generator(qubit_model, qubit_spec, [g], exp_bath)
    # any congruence-free frequency works: constant steering has Gram factor 1
    unit = build_wcl_generator(qubit_model, qubit_spec, [ConstantSteering(1.0, OMEGA_FAST)], exp_bath)
    dH1 = unit.lamb_shift()
    D = unit.dissipator()
    for t in np.linspace(0, 4 * np.pi / W, 7):
        w2 = abs(g(t)) ** 2
        expected = algebra.hamiltonian_part(H_QUBIT + w2 * dH1) + w2 * D
        assert_allclose(gen.superoperator(t), expected, atol=1e-12)
    assert_allclose(gen.superoperator(np.pi / (2 * W)), algebra.hamiltonian_part(H_QUBIT), atol=1e-15)


def test_adiabatic_constant_steering_matches_wcl(qubit_model, qubit_spec, exp_bath):
    one = ConstantSteering(1.0, OMEGA_FAST)
    a = build_adiabatic_generator(qubit_model, qubit_spec, [one], exp_bath)
    c = build_wcl_generator(qubit_model, qubit_spec, [one], exp_bath)
    for t in (0.0, 1.3, 9.0):
        assert_allclose(a.superoperator(t), c.superoperator(), atol=1e-13)


def test_adiabatic_periodic(qubit_model, qubit_spec, exp_bath):
    g = square_wave(0.5, duty=0.3, high=1.0, low=0.2)
    gen = build_adiabatic_generator(qubit_model, qubit_spec, [g], exp_bath)
    for t in (0.1, 2.0, 7.7):
        assert_allclose(gen.superoperator(t + gen.period), gen.superoperator(t), atol=1e-12)


def test_antiderivative_matches_quadrature(qubit_model, qubit_spec, exp_bath):
    from scipy import integrate

    gen = build_adiabatic_generator(qubit_model, qubit_spec, [CosineSteering(0.5)], exp_bath)
    t = 3.1
    ref = integrate.quad_vec(gen.superoperator, 0, t, epsabs=1e-13)[0]
    assert_allclose(gen.antiderivative(t), ref, atol=1e-10)


# -------------------------------------------------------------- invariants
def _generators():
    W_fast, W_slow = OMEGA_FAST, 0.5
    model = SystemModel(H_QUBIT, (SX,))
    two = SystemModel(H_QUBIT, (SX, SY))
    M = np.array([[1.0, 0.3j], [-0.3j, 0.7]])
    out = {
        "wcl_cos": build_wcl_generator(model, None, [CosineSteering(W_fast)], ExponentialBath()),
        "wcl_square": build_wcl_generator(model, None, [square_wave(W_fast)], ExponentialBath()),
        "wcl_two": build_wcl_generator(
            two, None, [CosineSteering(W_fast), SineSteering(W_fast)], ExponentialBath(mixing=M)
        ),
        "adiabatic_cos": build_adiabatic_generator(model, None, [CosineSteering(W_slow)], ExponentialBath()),
        "adiabatic_two": build_adiabatic_generator(
            two, None, [CosineSteering(W_slow), SineSteering(W_slow)], ExponentialBath(mixing=M)
        ),
    }
    return out


GENERATORS = _generators()


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_cptp_of_exponential(name):
    gen = GENERATORS[name]
    for t in (0.1, 1.0, 10.0):
        for s in (0.0, 0.7):
            rep = algebra.cptp_report(algebra.matrix_exp(t * gen.superoperator(s)), 1e-9)
            assert rep.min_choi_eig >= -1e-9 and rep.tp_residual <= 1e-9, (t, s)


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_rebuild_and_trace_annihilation(name, rng):
    gen = GENERATORS[name]
    for t in (0.0, 0.9):
        assert np.abs(gen.rebuild(t) - gen.superoperator(t)).max() <= 1e-12
        for _ in range(3):
            rho = random_density(2, rng)
            assert abs(np.trace(algebra.apply(gen.superoperator(t), rho))) <= 1e-12
        H = gen.H_eff(t)
        assert_allclose(H, H.conj().T, atol=1e-14)
        assert gen.psd_residual(t) >= -1e-12


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_covariance(name):
    res = covariance_check(GENERATORS[name])
    assert res["lamb_residual"] <= 1e-10
    assert res["dissipator_residual"] <= 1e-10


def test_covariance_negative_control():
    S = np.array([[1, 1], [0, -1]], dtype=complex)[None, None]  # not split into Bohr components
    gen = GklsGenerator(H_QUBIT, np.array([0.0]), S, np.ones((1, 1, 1)), np.ones((1, 1, 1)))
    res = covariance_check(gen)
    assert res["dissipator_residual"] > 1e-3
    assert res["lamb_residual"] > 1e-3


def test_to_dict_contents():
    d = GENERATORS["wcl_cos"].to_dict()
    assert d["kind"] == "constant" and d["dim"] == 2
    assert len(d["rates"]) == 3
