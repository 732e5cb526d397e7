"""Exact system-plus-finite-reservoir evolution used as ground truth.

The compound Hamiltonian is

    H(t) = H (x) 1 + 1 (x) H_e + lam * sum_mu g_mu(t) S_mu (x) R_mu

and the reduced state is the partial trace over the reservoir of
``U(t) (rho_S (x) rho_e) U(t)^+``.  Because ``H(t)`` is periodic, ``U`` is
integrated over one period only and later times use powers of ``U(T)``.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from . import algebra
from ._validation import check_density_matrix, check_hermitian
from .bath import FiniteBath
from .exceptions import DimensionMismatch, DimensionTooLarge, IntegratorStepFailure, NonHermitianInput
from .spectral import SystemModel

MAX_TOTAL_DIM = 1024


@dataclass(frozen=True)
class CompoundModel:
    """System, finite reservoir and coupling.

    Set ``strict=False`` to skip the zero-mean and stationarity checks (used
    for negative-control fixtures).
    """

    system: SystemModel
    H_e: np.ndarray
    R: tuple
    rho_e: np.ndarray
    lam: float
    steering: tuple
    strict: bool = field(default=True, repr=False)
    atol: float = field(default=1e-9, repr=False)

    def __post_init__(self):
        H_e = check_hermitian(self.H_e, name="H_e")
        rho_e = check_density_matrix(self.rho_e, name="rho_e")
        R = tuple(check_hermitian(r, name=f"R[{i}]") for i, r in enumerate(self.R))
        steering = tuple(self.steering)
        dE = H_e.shape[0]
        if rho_e.shape != H_e.shape or any(r.shape != H_e.shape for r in R):
            raise DimensionMismatch("H_e, rho_e and R must share the reservoir dimension")
        if len(R) != len(self.system.couplings) or len(steering) != len(R):
            raise DimensionMismatch("need one reservoir operator and one steering function per coupling")
        if not self.lam >= 0:
            raise ValueError("lam must be non-negative")
        if self.system.dim * dE > MAX_TOTAL_DIM:
            raise DimensionTooLarge(f"total dimension {self.system.dim * dE} exceeds {MAX_TOTAL_DIM}")
        if self.strict:
            for i, r in enumerate(R):
                m = abs(np.trace(r @ rho_e))
                if m > self.atol:
                    raise ValueError(f"Tr(R[{i}] rho_e) = {m:.3e} is not zero")
            if np.linalg.norm(H_e @ rho_e - rho_e @ H_e) > self.atol:
                raise ValueError("rho_e does not commute with H_e")
        object.__setattr__(self, "H_e", H_e)
        object.__setattr__(self, "rho_e", rho_e)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "steering", steering)

    @property
    def dims(self):
        return self.system.dim, self.H_e.shape[0]

    @property
    def period(self):
        return self.steering[0].period

    @property
    def Omega(self):
        return self.steering[0].Omega

    def with_lambda(self, lam):
        return CompoundModel(self.system, self.H_e, self.R, self.rho_e, lam, self.steering, self.strict, self.atol)

    def free_hamiltonian(self):
        dS, dE = self.dims
        return np.kron(self.system.H, np.eye(dE)) + np.kron(np.eye(dS), self.H_e)

    def interaction(self, t):
        """``sum_mu g_mu(t) S_mu (x) R_mu`` (without the factor ``lam``)."""
        out = 0
        for S, R, g in zip(self.system.couplings, self.R, self.steering):
            out = out + complex(g(t)) * np.kron(S, R)
        return out

    def hamiltonian(self, t):
        H = self.free_hamiltonian() + self.lam * self.interaction(t)
        if self.strict and np.linalg.norm(H - H.conj().T) > self.atol:
            raise NonHermitianInput(f"compound Hamiltonian is not Hermitian at t={t:g}")
        return H

    def bath(self, eta=0.0):
        """The reservoir as a :class:`FiniteBath` (optionally damped)."""
        return FiniteBath(self.H_e, self.R, self.rho_e, eta)

    def recurrence_time(self):
        """``2 pi / (smallest gap of H_e)``."""
        gaps = np.diff(np.linalg.eigvalsh(self.H_e))
        gaps = gaps[gaps > 1e-12]
        return 2 * math.pi / gaps.min() if gaps.size else math.inf


def _gibbs(E, beta):
    w = np.exp(-beta * (E - E.min()))
    return w / w.sum()


def random_compound_model(system, steering, dE=8, lam=0.1, seed=0, beta=0.5,
                          bandwidth=4.0, min_gap_fraction=0.3):
    """Random finite reservoir with a stationary Gibbs state and zero-mean couplings.

    Reservoir levels sit on a jittered grid spanning ``bandwidth``; adjacent
    gaps are at least ``min_gap_fraction * bandwidth / dE``.  Each ``R_mu`` is
    a random Hermitian matrix with its diagonal (in the eigenbasis of ``H_e``)
    removed and scaled so that ``Tr(R_mu^2 rho_e) = 1``.
    """
    rng = np.random.default_rng(seed)
    step = bandwidth / dE
    jitter = (1 - min_gap_fraction) * step * (rng.random(dE) - 0.5)
    E = -bandwidth / 2 + step * (np.arange(dE) + 0.5) + jitter
    Z = rng.normal(size=(dE, dE)) + 1j * rng.normal(size=(dE, dE))
    U, _ = np.linalg.qr(Z)
    H_e = U @ np.diag(E) @ U.conj().T
    p = _gibbs(E, beta)
    rho_e = U @ np.diag(p) @ U.conj().T
    Rs = []
    for _ in system.couplings:
        A = rng.normal(size=(dE, dE)) + 1j * rng.normal(size=(dE, dE))
        A = 0.5 * (A + A.conj().T)
        np.fill_diagonal(A, 0.0)
        A /= math.sqrt(float(np.real(np.sum(p * np.sum(np.abs(A) ** 2, axis=0)))))
        Rs.append(U @ A @ U.conj().T)
    H_e = 0.5 * (H_e + H_e.conj().T)
    rho_e = 0.5 * (rho_e + rho_e.conj().T)
    return CompoundModel(system, H_e, tuple(0.5 * (r + r.conj().T) for r in Rs), rho_e, lam, tuple(steering))


# ------------------------------------------------------------------ evolution
def _period_unitaries(cm, phases, rtol, atol):
    """``U(s)`` for each ``s`` in ``phases`` (all in ``[0, T]``), integrated from 0."""
    D = cm.dims[0] * cm.dims[1]
    T = cm.period
    cuts = sorted({tau for g in cm.steering for tau in g.discontinuities if 0 < tau < T})
    edges = [0.0] + cuts + [T]
    phases = np.asarray(phases, dtype=float)
    out = {}
    y = np.eye(D, dtype=complex).ravel()

    def rhs(t, y):
        return (-1j * cm.hamiltonian(t) @ y.reshape(D, D)).ravel()

    for a, b in zip(edges[:-1], edges[1:]):
        sel = phases[(phases > a) & (phases <= b)]
        t_eval = np.unique(np.concatenate([sel, [b]]))
        sol = solve_ivp(rhs, (a, b), y, method="RK45", t_eval=t_eval, rtol=rtol, atol=atol)
        if sol.status != 0:
            raise IntegratorStepFailure(f"compound integration failed on [{a:g}, {b:g}]: {sol.message}")
        for k, t in enumerate(sol.t):
            out[float(t)] = sol.y[:, k].reshape(D, D)
        y = sol.y[:, -1]
    out[0.0] = np.eye(D, dtype=complex)
    return out


def compound_unitaries(cm, t_grid, rtol=1e-10, atol=1e-12, method="floquet"):
    """Compound propagators ``U(t)`` on ``t_grid``.

    ``method="floquet"`` integrates one period and uses ``U(nT+s) = U(s) U(T)^n``
    (or the exact exponential when every steering function is constant);
    ``method="direct"`` integrates straight through to the last time.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid < 0):
        raise ValueError("times must be non-negative")
    if method == "direct":
        D = cm.dims[0] * cm.dims[1]
        T = cm.period
        t_end = float(t_grid.max())
        taus = sorted({tau for g in cm.steering for tau in g.discontinuities})
        cuts = sorted(k * T + tau for k in range(int(t_end // T) + 1) for tau in taus if 0 < k * T + tau < t_end)
        edges = [0.0] + cuts + [t_end]
        y = np.eye(D, dtype=complex).ravel()
        res = {0.0: np.eye(D, dtype=complex)}

        def rhs(t, y):
            return (-1j * cm.hamiltonian(t) @ y.reshape(D, D)).ravel()

        for a, b in zip(edges[:-1], edges[1:]):
            if b <= a:
                continue
            sel = t_grid[(t_grid > a) & (t_grid <= b)]
            t_eval = np.unique(np.concatenate([sel, [b]]))
            sol = solve_ivp(rhs, (a, b), y, method="RK45", t_eval=t_eval, rtol=rtol, atol=atol)
            if sol.status != 0:
                raise IntegratorStepFailure(f"compound integration failed on [{a:g}, {b:g}]: {sol.message}")
            for k, t in enumerate(sol.t):
                res[float(t)] = sol.y[:, k].reshape(D, D)
            y = sol.y[:, -1]
        return [res[float(t)] for t in t_grid]
    if method != "floquet":
        raise ValueError(f"unknown method {method!r}")
    if all(g.is_constant() for g in cm.steering):
        # time-independent Hamiltonian: exact spectral exponential
        E, V = np.linalg.eigh(cm.hamiltonian(0.0))
        return [(V * np.exp(-1j * E * t)) @ V.conj().T for t in t_grid]

    T = cm.period
    n = np.floor(t_grid / T).astype(int)
    s = t_grid - n * T
    Us = _period_unitaries(cm, np.concatenate([s, [T]]), rtol, atol)
    UT = Us[float(T)]
    # U(T) is normal, so its complex Schur form is diagonal with a unitary basis
    Tz, V = sla.schur(UT, output="complex")
    theta = np.diag(Tz)
    theta = theta / np.abs(theta)
    out = []
    for nk, sk in zip(n, s):
        Un = (V * theta ** nk) @ V.conj().T
        out.append(Us[float(sk)] @ Un)
    return out


def exact_reduced_evolution(cm, t_grid, rho_S, rtol=1e-10, atol=1e-12, method="floquet"):
    """Reduced system states ``Tr_E[U(t) (rho_S (x) rho_e) U(t)^+]`` on ``t_grid``."""
    rho_S = check_density_matrix(rho_S)
    dS, dE = cm.dims
    if rho_S.shape[0] != dS:
        raise DimensionMismatch(f"rho_S is {rho_S.shape[0]}x{rho_S.shape[0]}, system has d={dS}")
    v0 = np.kron(rho_S, cm.rho_e)
    out = []
    for U in compound_unitaries(cm, t_grid, rtol, atol, method):
        out.append(algebra.partial_trace(U @ v0 @ U.conj().T, (dS, dE), keep=0))
    return out


def free_evolution(H, t_grid, rho_S):
    out = []
    for t in np.atleast_1d(t_grid):
        U = algebra.matrix_exp(-1j * t * np.asarray(H, dtype=complex))
        out.append(U @ rho_S @ U.conj().T)
    return out


# ---------------------------------------------------------- reservoir data
def finite_bath_autocorrelation(cm, t):
    """``f_{mu nu}(t) = Tr[R_mu(t)^+ R_nu rho_e]`` with ``R(t) = e^{i H_e t} R e^{-i H_e t}``."""
    U = algebra.matrix_exp(1j * t * cm.H_e)
    Rt = [U @ r @ U.conj().T for r in cm.R]
    n = len(cm.R)
    f = np.empty((n, n), dtype=complex)
    for mu in range(n):
        for nu in range(n):
            f[mu, nu] = np.trace(Rt[mu].conj().T @ cm.R[nu] @ cm.rho_e)
    return f


def projection_lemma_check(cm, t_samples=None, n_tests=4, seed=0):
    """Residual ``max ||P0 A_t P0 (X)|| / ||X||`` over test operators and times.

    ``P0(X) = Tr_E(X) (x) rho_e`` and ``A_t = -i lam [H_I(t), .]`` with the
    interaction-picture coupling ``H_I(t) = sum g_mu(t) S_mu(t) (x) R_mu(t)``.
    """
    rng = np.random.default_rng(seed)
    dS, dE = cm.dims
    D = dS * dE
    if t_samples is None:
        t_samples = np.linspace(0, cm.period, 7)
    H0 = cm.free_hamiltonian()

    def P0(X):
        return np.kron(algebra.partial_trace(X, (dS, dE), keep=0), cm.rho_e)

    worst = 0.0
    for t in np.atleast_1d(t_samples):
        U = algebra.matrix_exp(1j * t * H0)
        HI = U @ cm.interaction(t) @ U.conj().T
        for _ in range(n_tests):
            X = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
            Y = P0(X)
            Z = P0(-1j * cm.lam * (HI @ Y - Y @ HI))
            worst = max(worst, float(np.linalg.norm(Z) / np.linalg.norm(X)))
    return worst


# --------------------------------------------------------- convergence study
def _threads():
    env = os.environ.get("PL_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def trace_norm(M):
    return float(np.sum(np.linalg.svd(M, compute_uv=False)))


@dataclass(frozen=True)
class ConvergenceRow:
    lam: float
    sup_error: float
    tau_max: float
    recurrence_bound: float


@dataclass(frozen=True)
class ConvergenceStudy:
    rows: tuple

    @property
    def errors(self):
        return [r.sup_error for r in self.rows]

    @property
    def monotone(self):
        e = self.errors
        return all(b < a for a, b in zip(e[:-1], e[1:]))

    def to_rows(self):
        return [(r.lam, r.sup_error, r.tau_max, r.recurrence_bound) for r in self.rows]


def markov_prediction(prediction, lam, t_grid, rho_S):
    """``exp(t (L_H + lam^2 (L - L_H))) rho_S`` where ``L`` is a unit-scale generator."""
    LH = algebra.hamiltonian_part(prediction.H)
    L = LH + lam ** 2 * (prediction.superoperator() - LH)
    v = algebra.vectorize(rho_S)
    d = prediction.dim
    return [algebra.devectorize(algebra.matrix_exp(t * L) @ v, d) for t in np.atleast_1d(t_grid)]


def convergence_study(cm, lambdas, tau_max, prediction, rho_S=None, n_tau=41, rtol=1e-10, atol=1e-12):
    """Sup over rescaled time of the trace distance between exact and Markovian states.

    Parameters
    ----------
    cm : CompoundModel
        Template; its ``lam`` is replaced by each entry of ``lambdas``.
    lambdas : sequence of float
        Positive and strictly decreasing.
    tau_max : float
        Largest rescaled time ``tau = lam^2 t``; clipped so that
        ``tau_max / min(lambdas)^2`` stays below the reservoir recurrence time.
    prediction : GklsGenerator
        Constant generator at unit scale.

    Returns
    -------
    ConvergenceStudy
    """
    lambdas = [float(x) for x in lambdas]
    if any(x <= 0 for x in lambdas) or any(b >= a for a, b in zip(lambdas[:-1], lambdas[1:])):
        raise ValueError("lambdas must be positive and strictly decreasing")
    if rho_S is None:
        d = cm.dims[0]
        rho_S = np.zeros((d, d), dtype=complex)
        rho_S[-1, -1] = 1.0
    t_rec = cm.recurrence_time()
    tau = min(float(tau_max), min(lambdas) ** 2 * t_rec)
    taus = np.linspace(0.0, tau, n_tau)

    def run(lam):
        ts = taus / lam ** 2
        exact = exact_reduced_evolution(cm.with_lambda(lam), ts, rho_S, rtol, atol)
        markov = markov_prediction(prediction, lam, ts, rho_S)
        err = max(trace_norm(a - b) for a, b in zip(exact, markov))
        return ConvergenceRow(lam, err, tau, t_rec)

    with ThreadPoolExecutor(max_workers=min(_threads(), len(lambdas))) as pool:
        rows = tuple(pool.map(run, lambdas))
    return ConvergenceStudy(rows)


__all__ = [
    "CompoundModel",
    "random_compound_model",
    "compound_unitaries",
    "exact_reduced_evolution",
    "free_evolution",
    "finite_bath_autocorrelation",
    "projection_lemma_check",
    "trace_norm",
    "ConvergenceRow",
    "ConvergenceStudy",
    "markov_prediction",
    "convergence_study",
]
