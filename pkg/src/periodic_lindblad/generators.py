"""GKLS generators for weak periodic coupling.

Two regimes are covered:

* fast driving (weak coupling limit): a constant generator whose rates carry
  the Gram factor ``sum_n g_mu^(n) conj(g_nu^(n))`` of the steering functions;
* slow driving (adiabatic limit): a ``T``-periodic generator with rates
  ``g_mu(t) conj(g_nu(t)) h_{nu mu}(w)``.

Rate matrices are indexed ``[w, nu, mu]`` and enter

    L = -i[H, .] + scale * ( -i[dH, .]
          + sum gamma_{nu mu}(w) (S_{mu w} . S_{nu w}^+ - 1/2 {S_{nu w}^+ S_{mu w}, .}) )

with ``dH = sum xi_{nu mu}(w) S_{nu w}^+ S_{mu w}``.  ``scale`` plays the role
of the squared coupling strength and defaults to 1.
"""

import math

import numpy as np

from . import algebra
from . import steering as _steering
from .bath import require_integrable
from .exceptions import CongruenceViolation, DimensionMismatch, TruncationInsufficient
from .spectral import SystemModel, congruence_check, decompose, jump_components

TRUNCATION_RTOL = 1e-10


def _as_steering_list(steering, n):
    if isinstance(steering, _steering.SteeringFunction):
        steering = [steering] * n
    steering = list(steering)
    if len(steering) != n:
        raise DimensionMismatch(f"{len(steering)} steering functions for {n} couplings")
    T = steering[0].period
    for g in steering[1:]:
        if not math.isclose(g.period, T, rel_tol=1e-12):
            raise ValueError("all steering functions must share one period")
    return steering


def gram_matrix(steering, n_trunc=None, rtol=TRUNCATION_RTOL):
    """``G[nu, mu] = sum_n g_mu^(n) conj(g_nu^(n))``.

    With ``n_trunc=None`` the full series is summed through Parseval's identity
    (an exact time integral).  With an explicit order the truncated sum is
    returned after checking each tail against ``rtol * ||g||^2``.
    """
    n = len(steering)
    G = np.empty((n, n), dtype=complex)
    if n_trunc is None:
        for nu in range(n):
            for mu in range(n):
                G[nu, mu] = _steering.inner_product(steering[mu], steering[nu])
        return G
    for i, g in enumerate(steering):
        tail = g.l2_tail(n_trunc)
        if tail > rtol * max(g.mean_square, 1e-300):
            raise TruncationInsufficient(
                f"steering[{i}]: l2 tail {tail:.3e} beyond order {n_trunc} exceeds "
                f"{rtol:.1e} * ||g||^2"
            )
    C = np.array([g.coefficients(n_trunc) for g in steering])
    return C.conj() @ C.T


def wcl_rates(steering, bath, omega, n_trunc=None, shifted=False, rtol=TRUNCATION_RTOL):
    """Rate and Lamb-shift matrices ``(gamma(w), xi(w))`` of the fast-driving limit.

    Parameters
    ----------
    steering : sequence of SteeringFunction
        One function per channel, sharing a period.
    bath : BathModel
        Bath with ``len(steering)`` channels.
    omega : float
        Bohr frequency.
    n_trunc : int, optional
        Fourier truncation order; ``None`` sums the series exactly.
    shifted : bool
        Experimental.  Evaluate the bath transform at ``w + n Omega`` inside
        the Fourier sum instead of at ``w``.

    Returns
    -------
    gamma, xi : ndarray, shape (n, n)
        Indexed ``[nu, mu]``.
    """
    steering = list(steering)
    if bath.n_channels != len(steering):
        raise DimensionMismatch(f"bath has {bath.n_channels} channels, steering has {len(steering)}")
    if not shifted:
        G = gram_matrix(steering, n_trunc, rtol)
        h, zeta = bath.transform(omega)
        return G * h, G * zeta

    Omega = steering[0].Omega
    if n_trunc is None:
        orders = [g.truncation_order(rtol, max_order=1 << 10) for g in steering]
        if any(o is None for o in orders):
            raise TruncationInsufficient("no truncation order below 1024 meets the tail tolerance")
        n_trunc = max(orders)
    else:
        gram_matrix(steering, n_trunc, rtol)  # tail check only
    C = np.array([g.coefficients(n_trunc) for g in steering])  # [mu, n]
    n = len(steering)
    gamma = np.zeros((n, n), dtype=complex)
    xi = np.zeros((n, n), dtype=complex)
    for k, m in enumerate(range(-n_trunc, n_trunc + 1)):
        col = C[:, k]
        if not np.any(col):
            continue
        G = np.outer(col.conj(), col)
        h, zeta = bath.transform(omega + m * Omega)
        gamma += G * h
        xi += G * zeta
    return gamma, xi


def adiabatic_rates(steering, bath, omega, t):
    """``gamma_{nu mu}(w, t) = g_mu(t) conj(g_nu(t)) h_{nu mu}(w)``; ``xi`` likewise with ``zeta``."""
    steering = list(steering)
    if bath.n_channels != len(steering):
        raise DimensionMismatch(f"bath has {bath.n_channels} channels, steering has {len(steering)}")
    gt = np.array([complex(g(t)) for g in steering])
    G = np.outer(gt.conj(), gt)
    h, zeta = bath.transform(omega)
    return G * h, G * zeta


def _pair_blocks(jumps):
    """Unit superoperators ``D[w, nu, mu]`` (dissipative) and ``C[w, nu, mu]`` (Lamb)."""
    n_ch, n_w, d, _ = jumps.shape
    D = np.zeros((n_w, n_ch, n_ch, d * d, d * d), dtype=complex)
    C = np.zeros_like(D)
    for w in range(n_w):
        for nu in range(n_ch):
            Snu_dag = jumps[nu, w].conj().T
            for mu in range(n_ch):
                Smu = jumps[mu, w]
                if not (np.any(Smu) and np.any(Snu_dag)):
                    continue
                A = Snu_dag @ Smu
                D[w, nu, mu] = algebra.sandwich(Smu, Snu_dag) - 0.5 * algebra.anticommutator(A)
                C[w, nu, mu] = -1j * algebra.commutator(A)
    return D, C


class GklsGenerator:
    """Assembled master-equation generator, constant or ``T``-periodic.

    Parameters
    ----------
    H : ndarray
        System Hamiltonian.
    frequencies : array_like
        Bohr frequencies labelling the second axis of ``jumps``.
    jumps : ndarray, shape (n_channels, n_freq, d, d)
        Jump components ``S_{mu w}``.
    gamma, xi : ndarray, shape (n_freq, n, n)
        Constant rate and Lamb-shift matrices (``kind="constant"``), or the unit
        bath matrices ``h``, ``zeta`` multiplied by ``g_mu(t) conj(g_nu(t))``
        (``kind="periodic"``).
    steering : sequence of SteeringFunction, optional
        Required for ``kind="periodic"``; informational otherwise.
    scale : float
        Overall factor on the Lamb shift and the dissipator.
    """

    def __init__(self, H, frequencies, jumps, gamma, xi, kind="constant", steering=None, scale=1.0):
        if kind not in ("constant", "periodic"):
            raise ValueError(f"kind must be 'constant' or 'periodic', got {kind!r}")
        self.H = algebra.as_square_matrix(H, "H")
        self.frequencies = np.asarray(frequencies, dtype=float)
        self.jumps = np.asarray(jumps, dtype=complex)
        self.gamma = np.asarray(gamma, dtype=complex)
        self.xi = np.asarray(xi, dtype=complex)
        self.kind = kind
        self.scale = float(scale)
        self.steering = tuple(steering) if steering is not None else None
        n_ch, n_w, d, _ = self.jumps.shape
        if d != self.H.shape[0] or n_w != self.frequencies.size:
            raise DimensionMismatch("jumps must have shape (n_channels, n_freq, d, d)")
        if self.gamma.shape != (n_w, n_ch, n_ch) or self.xi.shape != self.gamma.shape:
            raise DimensionMismatch("rate matrices must have shape (n_freq, n_channels, n_channels)")
        if kind == "periodic" and self.steering is None:
            raise ValueError("a periodic generator needs steering functions")

        D, C = _pair_blocks(self.jumps)
        self._LH = algebra.hamiltonian_part(self.H)
        # K[nu, mu] = sum_w gamma D + xi C
        self._K = np.einsum("wnm,wnmij->nmij", self.gamma, D) + np.einsum("wnm,wnmij->nmij", self.xi, C)
        if kind == "constant":
            self._L = self._LH + self.scale * self._K.sum(axis=(0, 1))

    # ------------------------------------------------------------------
    @property
    def dim(self):
        return self.H.shape[0]

    @property
    def n_channels(self):
        return self.jumps.shape[0]

    @property
    def period(self):
        if self.steering:
            return self.steering[0].period
        return None

    @property
    def is_uniform(self):
        """True when every channel carries the same steering function."""
        return self.kind == "constant" or all(g == self.steering[0] for g in self.steering)

    def _gram(self, t):
        gt = np.array([complex(g(t)) for g in self.steering])
        return np.outer(gt.conj(), gt)

    def rates(self, t=None):
        """``(gamma, xi)`` entering the generator at time ``t``, scale included."""
        if self.kind == "constant":
            return self.scale * self.gamma, self.scale * self.xi
        G = self.scale * self._gram(t)
        return G * self.gamma, G * self.xi

    def lamb_shift(self, t=None):
        _, xi = self.rates(t)
        d = self.dim
        out = np.zeros((d, d), dtype=complex)
        for w in range(self.frequencies.size):
            S = self.jumps[:, w]
            out += np.einsum("nm,nji,mjk->ik", xi[w], S.conj(), S)
        return out

    def H_eff(self, t=None):
        return self.H + self.lamb_shift(t)

    def superoperator(self, t=None):
        if self.kind == "constant":
            return self._L
        G = self.scale * self._gram(t)
        return self._LH + np.einsum("nm,nmij->ij", G, self._K)

    def dissipator(self, t=None):
        """Superoperator of the dissipative part alone."""
        gamma, _ = self.rates(t)
        d = self.dim
        out = np.zeros((d * d, d * d), dtype=complex)
        for w in range(self.frequencies.size):
            for nu in range(self.n_channels):
                for mu in range(self.n_channels):
                    r = gamma[w, nu, mu]
                    if r == 0:
                        continue
                    Smu, Snu = self.jumps[mu, w], self.jumps[nu, w]
                    out += r * (
                        algebra.sandwich(Smu, Snu.conj().T)
                        - 0.5 * algebra.anticommutator(Snu.conj().T @ Smu)
                    )
        return out

    def rebuild(self, t=None):
        """Assemble ``L`` term by term from ``H_eff`` and the rates."""
        return algebra.hamiltonian_part(self.H_eff(t)) + self.dissipator(t)

    def antiderivative(self, t):
        """``int_0^t L_s ds`` in closed form."""
        if self.kind == "constant":
            return t * self._L
        n = self.n_channels
        A = np.empty((n, n), dtype=complex)
        for nu in range(n):
            for mu in range(n):
                A[nu, mu] = _steering.cross_integral(self.steering[mu], self.steering[nu], t)
        return t * self._LH + self.scale * np.einsum("nm,nmij->ij", A, self._K)

    def psd_residual(self, t=None):
        """Most negative eigenvalue over frequencies of the rate matrices (0 if all PSD)."""
        gamma, _ = self.rates(t)
        worst = 0.0
        for g in gamma:
            worst = min(worst, float(np.linalg.eigvalsh(0.5 * (g + g.conj().T))[0]))
        return worst

    def to_dict(self, t=None):
        gamma, xi = self.rates(t)
        out = {
            "kind": self.kind,
            "dim": self.dim,
            "scale": self.scale,
            "H_eff": self.H_eff(t),
            "frequencies": self.frequencies,
            "rates": [
                {"omega": float(w), "gamma": gamma[i], "xi": xi[i]}
                for i, w in enumerate(self.frequencies)
            ],
            "jumps": [
                [{"omega": float(w), "S": self.jumps[mu, i]} for i, w in enumerate(self.frequencies)]
                for mu in range(self.n_channels)
            ],
        }
        if self.period is not None:
            out["period"] = self.period
        if self.steering is not None:
            out["steering"] = [g.to_dict() for g in self.steering]
        if t is not None:
            out["t"] = float(t)
        return out


def _prepare(model, spec, steering, bath):
    if not isinstance(model, SystemModel):
        raise TypeError("model must be a SystemModel")
    spec = decompose(model) if spec is None else spec
    n = len(model.couplings)
    if n == 0:
        raise ValueError("model has no couplings")
    steering = _as_steering_list(steering, n)
    if bath.n_channels != n:
        raise DimensionMismatch(f"bath has {bath.n_channels} channels, model has {n} couplings")
    jumps = np.array([jump_components(S, spec) for S in model.couplings])
    return spec, steering, jumps


def build_wcl_generator(model, spec, steering, bath, Omega=None, n_trunc=None, scale=1.0,
                        shifted=False, check_integrability=True):
    """Constant generator of the weak coupling limit.

    Raises
    ------
    CongruenceViolation
        If two distinct Bohr frequencies differ by a nonzero multiple of
        ``Omega``; the offending triples are attached.
    """
    spec, steering, jumps = _prepare(model, spec, steering, bath)
    Omega = steering[0].Omega if Omega is None else float(Omega)
    if not math.isclose(Omega, steering[0].Omega, rel_tol=1e-12):
        raise ValueError(f"Omega={Omega} does not match the steering frequency {steering[0].Omega}")
    report = congruence_check(spec, Omega)
    if not report.free:
        raise CongruenceViolation(
            f"Bohr frequencies are not congruence-free for Omega={Omega}: {report.violations}",
            report.violations,
        )
    if check_integrability and not bath.has_closed_form:
        require_integrable(bath)
    freqs = spec.bohr_frequencies
    n = len(steering)
    gamma = np.zeros((freqs.size, n, n), dtype=complex)
    xi = np.zeros_like(gamma)
    if not shifted:
        G = gram_matrix(steering, n_trunc)
        for i, w in enumerate(freqs):
            h, zeta = bath.transform(w)
            gamma[i], xi[i] = G * h, G * zeta
    else:
        for i, w in enumerate(freqs):
            gamma[i], xi[i] = wcl_rates(steering, bath, w, n_trunc, shifted=True)
    return GklsGenerator(model.H, freqs, jumps, gamma, xi, "constant", steering, scale)


def build_adiabatic_generator(model, spec, steering, bath, scale=1.0, check_integrability=True):
    """``T``-periodic generator of the slow-driving limit."""
    spec, steering, jumps = _prepare(model, spec, steering, bath)
    if check_integrability and not bath.has_closed_form:
        require_integrable(bath)
    freqs = spec.bohr_frequencies
    hs, zs = zip(*(bath.transform(w) for w in freqs))
    return GklsGenerator(model.H, freqs, jumps, np.array(hs), np.array(zs), "periodic", steering, scale)


def covariance_check(gen, spec=None, n_samples=16):
    """Sup norms of ``[dH, H]`` and ``G o [H, .] - [H, .] o G``.

    Periodic generators are sampled at ``n_samples`` equally spaced points of
    ``[0, T)``.  The dissipator residual is the spectral norm of the
    superoperator commutator, i.e. the sup over all unit-norm test matrices.
    """
    H = gen.H if spec is None else sum(e * P for e, P in zip(spec.eigenvalues, spec.projectors))
    adH = algebra.commutator(H)
    times = [None] if gen.kind == "constant" else np.arange(n_samples) * gen.period / n_samples
    lamb = diss = 0.0
    for t in times:
        dH = gen.lamb_shift(t)
        G = gen.dissipator(t)
        lamb = max(lamb, float(np.linalg.norm(dH @ H - H @ dH, 2)))
        diss = max(diss, float(np.linalg.norm(G @ adH - adH @ G, 2)))
    return {"lamb_residual": lamb, "dissipator_residual": diss}


__all__ = [
    "GklsGenerator",
    "gram_matrix",
    "wcl_rates",
    "adiabatic_rates",
    "build_wcl_generator",
    "build_adiabatic_generator",
    "covariance_check",
]
