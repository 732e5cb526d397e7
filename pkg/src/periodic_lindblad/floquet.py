"""Propagation, Floquet normal forms and stability of periodic master equations.

The propagator ``Lam_t`` of ``d rho/dt = L_t rho`` is factored as
``Lam_t = P(t) exp(t X)`` with ``P`` periodic.  For commuting families
``{L_t}`` the factorization is exact and explicit; otherwise ``X`` comes from
the principal logarithm of the monodromy operator ``Lam_T``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import algebra
from ._validation import check_density_matrix, check_superoperator
from .exceptions import DimensionMismatch, IllConditionedEigenbasis, IntegratorStepFailure, NotCommutative

INTEGRATOR_RTOL = 1e-10
INTEGRATOR_ATOL = 1e-12
COMMUTATIVITY_ATOL = 1e-10
MULTIPLIER_ATOL = 1e-7
EIGENBASIS_COND_MAX = 1e8


# ---------------------------------------------------------------- propagation
def _breakpoints(gen, t_end):
    """Discontinuities of ``L_t`` in ``(0, t_end)``."""
    if gen.kind == "constant":
        return []
    T = gen.period
    taus = sorted({tau for g in gen.steering for tau in g.discontinuities})
    if not taus:
        return []
    pts = []
    for k in range(int(math.floor(t_end / T)) + 1):
        for tau in taus:
            p = k * T + tau
            if 0 < p < t_end:
                pts.append(p)
    return pts


def commutativity_check(gen, grid=None, n=8):
    """``max ||L_t L_s - L_s L_t||`` (Frobenius) over pairs of grid times."""
    if gen.kind == "constant":
        return 0.0
    if grid is None:
        grid = np.arange(n) * gen.period / n
    Ls = [gen.superoperator(t) for t in grid]
    worst = 0.0
    for i, A in enumerate(Ls):
        for B in Ls[i + 1:]:
            worst = max(worst, float(np.linalg.norm(A @ B - B @ A)))
    return worst


def _integrate(gen, times, y0, rtol, atol):
    """Integrate ``dY/dt = L_t Y`` from 0, returning ``Y`` at each of ``times``."""
    times = np.asarray(times, dtype=float)
    t_end = float(times.max()) if times.size else 0.0
    d2 = gen.dim ** 2
    shape = y0.shape
    cols = 1 if y0.ndim == 1 else shape[1]

    def rhs(t, y):
        return (gen.superoperator(t) @ y.reshape(d2, cols)).ravel()

    out = np.empty((times.size,) + shape, dtype=complex)
    done = times <= 0
    out[done] = y0
    edges = [0.0] + _breakpoints(gen, t_end) + [t_end]
    y = y0.astype(complex).ravel()
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        sel = (times > a) & (times <= b)
        t_eval = np.unique(np.concatenate([times[sel], [b]]))
        sol = solve_ivp(rhs, (a, b), y, method="RK45", t_eval=t_eval, rtol=rtol, atol=atol)
        if sol.status != 0:
            raise IntegratorStepFailure(f"integration failed on [{a:g}, {b:g}]: {sol.message}")
        for k, t in enumerate(sol.t):
            out[times == t] = sol.y[:, k].reshape(shape)
        y = sol.y[:, -1]
    return out


def propagate(gen, t, rho0=None, method="auto", rtol=INTEGRATOR_RTOL, atol=INTEGRATOR_ATOL):
    """Propagator ``Lam_t`` (or the state ``Lam_t(rho0)``) of the generator.

    Parameters
    ----------
    t : float or array_like
        Non-negative time(s).  An array returns a stacked result.
    rho0 : array_like, optional
        Initial density matrix.  When omitted the full superoperator is returned.
    method : {"auto", "exact", "integrate"}
        ``exact`` uses ``exp(int_0^t L)`` (constant generators or commuting
        families); ``integrate`` always runs the adaptive Runge-Kutta solver;
        ``auto`` picks ``exact`` whenever the family commutes.
    """
    scalar = np.ndim(t) == 0
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(times < 0):
        raise ValueError("t must be non-negative")
    if method not in ("auto", "exact", "integrate"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        exact = gen.kind == "constant" or commutativity_check(gen) <= COMMUTATIVITY_ATOL
        method = "exact" if exact else "integrate"

    d = gen.dim
    if rho0 is not None:
        rho0 = check_density_matrix(rho0)
        if rho0.shape[0] != d:
            raise DimensionMismatch(f"rho0 is {rho0.shape[0]}x{rho0.shape[0]}, generator acts on d={d}")
        y0 = algebra.vectorize(rho0)
    else:
        y0 = np.eye(d * d, dtype=complex)

    if method == "exact":
        res = np.array([algebra.matrix_exp(gen.antiderivative(s)) @ y0 for s in times])
    else:
        res = _integrate(gen, times, y0, rtol, atol)

    if rho0 is not None:
        res = np.array([algebra.devectorize(v, d) for v in res])
    return res[0] if scalar else res


# -------------------------------------------------------------- normal forms
@dataclass(frozen=True)
class FloquetDecomposition:
    """``Lam_t = P(t) exp(t X)`` with ``P`` of period ``T``.

    ``P`` is a callable ``t -> superoperator``; ``monodromy`` is ``Lam_T``.
    """

    T: float
    X: np.ndarray
    P: object = field(repr=False)
    method: str
    monodromy: np.ndarray = field(repr=False)

    def exp_X(self, t):
        return algebra.matrix_exp(t * self.X)

    def propagator(self, t):
        return self.P(t) @ self.exp_X(t)

    def periodicity_residual(self, times):
        return max(float(np.linalg.norm(self.P(t + self.T) - self.P(t))) for t in times)


def normal_form_commutative(gen, T=None, atol=COMMUTATIVITY_ATOL):
    """Exact normal form of a commuting family.

    ``X = (1/T) int_0^T L`` and ``P(t) = exp(int_0^t L - (t/T) int_0^T L)``.
    For uniform steering ``|g|^2`` this is
    ``X = -(i/T)[H_T, .] + (Gamma(T)/T) D`` with ``H_T = int_0^T H_eff``.
    """
    T = gen.period if T is None else float(T)
    if T is None:
        raise ValueError("a period is required for a constant generator")
    res = commutativity_check(gen)
    if res > atol:
        raise NotCommutative(f"generator family does not commute (residual {res:.3e} > {atol:.1e})")
    A_T = gen.antiderivative(T)
    X = A_T / T

    def P(t):
        s = math.fmod(t, T)
        if s < 0:
            s += T
        return algebra.matrix_exp(gen.antiderivative(s) - (s / T) * A_T)

    return FloquetDecomposition(T, X, P, "commutative-exact", algebra.matrix_exp(A_T))


def normal_form_generic(propagator, T, branch_tol=1e-9):
    """Normal form from a propagator ``s -> Lam_s`` on ``[0, T]``.

    ``X = log(Lam_T) / T`` on the principal branch and
    ``P(t) = Lam_{t mod T} exp(-(t mod T) X)``.

    Raises
    ------
    BranchFailure
        When a multiplier lies on or near the negative real axis.
    """
    T = float(T)
    if callable(propagator):
        lam = propagator
    else:
        gen = propagator

        def lam(s):
            return propagate(gen, s, method="integrate")

    M = np.asarray(lam(T), dtype=complex)
    X = algebra.matrix_log_principal(M, branch_tol) / T

    def P(t):
        s = math.fmod(t, T)
        if s < 0:
            s += T
        if s == 0:
            return np.eye(X.shape[0], dtype=complex)
        return lam(s) @ algebra.matrix_exp(-s * X)

    return FloquetDecomposition(T, X, P, "monodromy-log", M)


# ----------------------------------------------------------------- stability
CLASSES = ("decaying", "periodic", "phase-shift", "unstable")


@dataclass(frozen=True)
class MonodromyReport:
    multipliers: np.ndarray
    exponents: np.ndarray
    classes: tuple
    marginal: tuple
    spectral_radius: float
    T: float
    atol: float
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def has_unit_multiplier(self):
        return bool(np.min(np.abs(self.multipliers - 1)) <= self.atol)

    @property
    def unstable(self):
        return "unstable" in self.classes

    def persistent_basis(self):
        """Eigen-matrices of multipliers on the unit circle (periodic or phase-shift)."""
        d = int(round(math.sqrt(self.eigenvectors.shape[0])))
        return [
            algebra.devectorize(self.eigenvectors[:, j], d)
            for j, c in enumerate(self.classes)
            if c in ("periodic", "phase-shift")
        ]

    def to_dict(self):
        return {
            "T": self.T,
            "atol": self.atol,
            "multipliers": self.multipliers,
            "exponents": self.exponents,
            "classes": list(self.classes),
            "marginal": list(self.marginal),
            "spectral_radius": self.spectral_radius,
            "has_unit_multiplier": self.has_unit_multiplier,
            "unstable": self.unstable,
        }


def classify_multiplier(lam, atol=MULTIPLIER_ATOL):
    r = abs(lam)
    if r > 1 + atol:
        return "unstable"
    if abs(lam - 1) <= atol:
        return "periodic"
    if r >= 1 - atol:
        return "phase-shift"
    return "decaying"


def monodromy_analysis(monodromy, T, atol=MULTIPLIER_ATOL):
    """Multipliers of ``Lam_T``, sorted by decreasing modulus, with principal exponents.

    A multiplier whose distance ``||lam| - 1|`` lies within a factor of 10 of
    ``atol`` on either side is annotated as marginal.
    """
    M, _ = check_superoperator(monodromy)
    w, V = np.linalg.eig(M)
    order = np.lexsort((np.angle(w), -np.abs(w)))
    w, V = w[order], V[:, order]
    with np.errstate(divide="ignore"):
        mu = np.where(w == 0, -np.inf + 0j, np.log(np.where(w == 0, 1, w)) / T)
    classes = tuple(classify_multiplier(z, atol) for z in w)
    marginal = tuple(bool(atol / 10 <= abs(abs(z) - 1) <= 10 * atol) for z in w)
    return MonodromyReport(
        multipliers=w,
        exponents=mu,
        classes=classes,
        marginal=marginal,
        spectral_radius=float(np.max(np.abs(w))),
        T=float(T),
        atol=float(atol),
        eigenvectors=V,
    )


def limit_cycle(decomp, rho0, atol=MULTIPLIER_ATOL, cond_max=EIGENBASIS_COND_MAX):
    """Asymptotic trajectory ``t -> rho_t^inf`` reached from ``rho0``.

    ``rho0`` is expanded in eigenvectors of ``Lam_T``; components with
    ``|lam| < 1 - atol`` are dropped.  For ``t = nT + s`` the result is
    ``Lam_s`` applied to ``sum_keep c_j lam_j^n v_j``.
    """
    return limit_cycle_from_propagator(decomp.propagator, decomp.T, rho0, atol, cond_max, decomp.monodromy)


def limit_cycle_from_propagator(propagator, T, rho0, atol=MULTIPLIER_ATOL, cond_max=EIGENBASIS_COND_MAX,
                                monodromy=None):
    """Same as :func:`limit_cycle` from a propagator ``s -> Lam_s`` (no logarithm needed)."""
    rho0 = check_density_matrix(rho0)
    d = rho0.shape[0]
    M = propagator(T) if monodromy is None else monodromy
    w, V = np.linalg.eig(M)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > cond_max:
        raise IllConditionedEigenbasis(f"monodromy eigenvector matrix has condition {cond:.3e} > {cond_max:.1e}")
    c = np.linalg.solve(V, algebra.vectorize(rho0))
    keep = np.abs(w) >= 1 - atol
    Vk, ck, wk = V[:, keep], c[keep], w[keep]

    def rho_inf(t):
        n = math.floor(t / T)
        s = t - n * T
        v = Vk @ (ck * wk ** n)
        if s > 0:
            v = propagator(s) @ v
        return algebra.devectorize(v, d)

    return rho_inf


# ---------------------------------------------------------- Markovianity
@dataclass(frozen=True)
class MarkovianityWindows:
    T: float
    threshold: float
    intervals: list
    cp_ok: bool
    cp_intervals: list
    trivially_global: bool
    degenerate: bool

    @property
    def markov_measure(self):
        return sum(b - a for a, b in self.intervals)

    @property
    def is_global(self):
        return self.markov_measure >= self.T * (1 - 1e-12)

    def to_dict(self):
        return {
            "T": self.T,
            "threshold": self.threshold,
            "markov_intervals": [list(iv) for iv in self.intervals],
            "cp_ok": self.cp_ok,
            "cp_intervals": [list(iv) for iv in self.cp_intervals],
            "trivially_global": self.trivially_global,
            "degenerate": self.degenerate,
        }


def _sign_intervals(phi, segments, n_grid, xtol, atol):
    """Union of sub-intervals of ``segments`` where ``phi >= -atol``, endpoints refined by brentq."""
    out = []
    for a, b in segments:
        # stay off segment edges so one-sided values are used at jumps
        pad = 1e-12 * (b - a)
        ts = np.linspace(a + pad, b - pad, n_grid)
        vals = np.array([phi(t) for t in ts])
        inside = vals >= -atol
        start = a if inside[0] else None
        for k in range(1, ts.size):
            if inside[k] == inside[k - 1]:
                continue
            root = brentq(lambda t: phi(t) + atol, ts[k - 1], ts[k], xtol=xtol, rtol=4 * np.finfo(float).eps)
            if inside[k]:
                start = root
            else:
                out.append([start, root])
                start = None
        if start is not None:
            out.append([start, b])
    merged = []
    for iv in out:
        if merged and iv[0] - merged[-1][1] <= xtol:
            merged[-1][1] = iv[1]
        else:
            merged.append(list(iv))
    # slivers at the level of root-finding noise carry no information
    min_width = 1e-9 * (segments[-1][1] - segments[0][0])
    return [tuple(iv) for iv in merged if iv[1] - iv[0] > min_width]


def markovianity_windows(g, atol=1e-12, n_grid=2048):
    """Sub-intervals of ``[0, T)`` on which the periodic factor ``P_t`` evolves Markovianly.

    For uniform steering the generator of ``P_t`` has dissipative weight
    ``|g(t)|^2 - Gamma(T)/T``; the windows are where it is non-negative.
    ``cp_ok`` reports ``Gamma(t) >= (t/T) Gamma(T)`` on the whole period
    (complete positivity of ``P_t``); ``cp_intervals`` lists where it holds.
    ``degenerate`` flags ``|g|^2`` identically equal to the threshold with a
    non-constant ``g``.
    """
    if not g.is_real:
        raise ValueError("Markovianity windows are defined for real steering functions")
    T = g.period
    thr = g.gamma_integral(T) / T
    xtol = 1e-13 * T
    cuts = sorted({0.0, T, *[tau for tau in g.discontinuities if 0 < tau < T]})
    segments = list(zip(cuts[:-1], cuts[1:]))

    def phi(t):
        return float(abs(g(t)) ** 2) - thr

    def psi(t):
        return float(g.gamma_integral(t)) - (t / T) * thr * T

    flat = max(abs(phi(t)) for t in np.linspace(0, T, 257)[:-1] + 0.37 * T / 256) <= atol
    trivially_global = g.is_constant(atol)
    degenerate = flat and not trivially_global
    if flat:
        intervals = [(0.0, T)]
    else:
        intervals = _sign_intervals(phi, segments, n_grid, xtol, atol)

    psi_scale = max(thr * T, 1e-300)
    cp_intervals = _sign_intervals(psi, [(0.0, T)], n_grid, xtol, atol * psi_scale)
    cp_ok = len(cp_intervals) == 1 and cp_intervals[0][0] <= xtol and cp_intervals[0][1] >= T - xtol
    return MarkovianityWindows(
        T=T,
        threshold=thr,
        intervals=intervals,
        cp_ok=bool(cp_ok),
        cp_intervals=cp_intervals,
        trivially_global=bool(trivially_global),
        degenerate=bool(degenerate),
    )


__all__ = [
    "propagate",
    "commutativity_check",
    "FloquetDecomposition",
    "normal_form_commutative",
    "normal_form_generic",
    "MonodromyReport",
    "classify_multiplier",
    "monodromy_analysis",
    "limit_cycle",
    "limit_cycle_from_propagator",
    "MarkovianityWindows",
    "markovianity_windows",
]
