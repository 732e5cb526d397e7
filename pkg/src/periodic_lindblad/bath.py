"""Reservoir autocorrelation functions and their one-sided Fourier transforms.

A bath with ``n`` channels provides the matrix function ``f_{mu nu}(t)``.  Its
one-sided transform is split as

    int_0^inf e^{-i w t} f_{mu nu}(t) dt = h_{mu nu}(w) / 2 + i zeta_{mu nu}(w)

with ``h`` the full Fourier transform and ``h``, ``zeta`` Hermitian in the
channel indices.  Using ``f_{mu nu}(-t) = conj(f_{nu mu}(t))`` both follow from
the one-sided integrals ``I``:  ``h = I + I^+`` and ``zeta = (I - I^+) / 2i``.
"""

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .exceptions import DimensionMismatch, QuadratureNonConvergence, TailDivergence

_QUAD_OPTS = dict(limit=400, epsabs=1e-14, epsrel=1e-12)


class BathModel:
    """Base class: ``n_channels`` and ``correlation(t) -> (n, n)`` array.

    Subclasses may override ``one_sided`` with a closed form; ``support`` is the
    time beyond which ``f`` vanishes identically (``inf`` if it does not).
    """

    kind = "abstract"
    support = math.inf
    #: characteristic decay time, used to size the first quadrature panel
    time_scale = 1.0

    @property
    def n_channels(self):
        raise NotImplementedError

    def correlation(self, t):
        raise NotImplementedError

    def f(self, mu, nu, t):
        return self.correlation(t)[mu, nu]

    @property
    def has_closed_form(self):
        return type(self).one_sided is not BathModel.one_sided

    def one_sided(self, omega):
        """Matrix ``I_{mu nu}(w)``; the default integrates numerically."""
        n = self.n_channels
        out = np.empty((n, n), dtype=complex)
        for mu in range(n):
            for nu in range(n):
                out[mu, nu] = one_sided_quadrature(self, mu, nu, omega)
        return out

    def transform(self, omega, method="auto"):
        """``(h, zeta)`` channel matrices at frequency ``omega``."""
        if method == "quadrature" or (method == "auto" and not self.has_closed_form):
            I = BathModel.one_sided(self, omega)
        else:
            I = self.one_sided(omega)
        h = I + I.conj().T
        zeta = (I - I.conj().T) / 2j
        return h, zeta

    def select(self, rows):
        """Bath seen through couplings attached to ``rows`` (repeats allowed)."""
        return SelectedBath(self, tuple(int(r) for r in rows))


@dataclass(frozen=True)
class SelectedBath(BathModel):
    parent: BathModel
    rows: tuple
    kind = "selected"

    @property
    def n_channels(self):
        return len(self.rows)

    @property
    def support(self):
        return self.parent.support

    @property
    def time_scale(self):
        return self.parent.time_scale

    @property
    def has_closed_form(self):
        return self.parent.has_closed_form

    def _pick(self, M):
        r = np.array(self.rows)
        return M[np.ix_(r, r)]

    def correlation(self, t):
        return self._pick(self.parent.correlation(t))

    def one_sided(self, omega):
        return self._pick(self.parent.one_sided(omega))

    def transform(self, omega, method="auto"):
        h, z = self.parent.transform(omega, method)
        return self._pick(h), self._pick(z)


def _mixing(mixing, n):
    if mixing is None:
        M = np.eye(n, dtype=complex)
    else:
        M = np.asarray(mixing, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch("mixing matrix must be square")
    if np.linalg.norm(M - M.conj().T) > 1e-12:
        raise ValueError("mixing matrix must be Hermitian")
    if np.linalg.eigvalsh(M)[0] < -1e-12:
        raise ValueError("mixing matrix must be positive semidefinite")
    return M


@dataclass(frozen=True)
class ExponentialBath(BathModel):
    """``f_{mu nu}(t) = M_{mu nu} c e^{-a t}``; ``M`` is a PSD channel mixing matrix."""

    a: float = 1.0
    c: float = 1.0
    mixing: np.ndarray = field(default=None, compare=False)
    n: int = 1
    kind = "exponential"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("decay rate a must be positive")
        if not self.c >= 0:
            raise ValueError("amplitude c must be non-negative")
        n = self.n if self.mixing is None else np.shape(self.mixing)[0]
        object.__setattr__(self, "mixing", _mixing(self.mixing, n))
        object.__setattr__(self, "n", n)

    @property
    def n_channels(self):
        return self.n

    @property
    def time_scale(self):
        return 1.0 / self.a

    def correlation(self, t):
        return self.mixing * (self.c * np.exp(-self.a * t))

    def one_sided(self, omega):
        return self.mixing * (self.c / (self.a + 1j * omega))


@dataclass(frozen=True)
class DampedOscillatoryBath(BathModel):
    """``f_{mu nu}(t) = M_{mu nu} c e^{-a t} cos(omega_c t)``."""

    a: float = 1.0
    omega_c: float = 1.0
    c: float = 1.0
    mixing: np.ndarray = field(default=None, compare=False)
    n: int = 1
    kind = "damped_oscillatory"

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("decay rate a must be positive")
        if not self.c >= 0:
            raise ValueError("amplitude c must be non-negative")
        n = self.n if self.mixing is None else np.shape(self.mixing)[0]
        object.__setattr__(self, "mixing", _mixing(self.mixing, n))
        object.__setattr__(self, "n", n)

    @property
    def n_channels(self):
        return self.n

    @property
    def time_scale(self):
        return 1.0 / self.a

    def correlation(self, t):
        return self.mixing * (self.c * np.exp(-self.a * t) * np.cos(self.omega_c * t))

    def one_sided(self, omega):
        a, wc = self.a, self.omega_c
        val = 0.5 * self.c * (1.0 / (a + 1j * (omega - wc)) + 1.0 / (a + 1j * (omega + wc)))
        return self.mixing * val


class CallableBath(BathModel):
    """Wrap an arbitrary ``f(t) -> (n, n)`` array (or scalar for one channel)."""

    kind = "callable"

    def __init__(self, fn, n_channels=1, time_scale=1.0, support=math.inf):
        self._fn = fn
        self._n = int(n_channels)
        self.time_scale = float(time_scale)
        self.support = support

    @property
    def n_channels(self):
        return self._n

    def correlation(self, t):
        return np.asarray(self._fn(t), dtype=complex).reshape(self._n, self._n)


class TabulatedBath(BathModel):
    """Cubic-spline interpolation of sampled ``f_{mu nu}(t_k)``; zero past the last sample.

    Parameters
    ----------
    times : array_like, shape (m,)
        Increasing sample times starting at 0.
    values : array_like, shape (m, n, n) or (m,)
        Samples of the correlation matrix.
    """

    kind = "tabulated"

    def __init__(self, times, values):
        t = np.asarray(times, dtype=float)
        v = np.asarray(values, dtype=complex)
        if v.ndim == 1:
            v = v[:, None, None]
        if t.ndim != 1 or v.shape[0] != t.size or v.shape[1] != v.shape[2]:
            raise DimensionMismatch("values must have shape (len(times), n, n)")
        if t[0] != 0 or np.any(np.diff(t) <= 0):
            raise ValueError("times must start at 0 and increase strictly")
        self.times = t
        self.values = v
        self._spline = CubicSpline(t, v, axis=0)
        self.support = float(t[-1])
        self.time_scale = float(t[-1]) / 8

    @property
    def n_channels(self):
        return self.values.shape[1]

    def correlation(self, t):
        if t > self.support:
            return np.zeros(self.values.shape[1:], dtype=complex)
        return self._spline(t)

    @classmethod
    def from_model(cls, bath, times):
        times = np.asarray(times, dtype=float)
        return cls(times, np.array([bath.correlation(t) for t in times]))

    @classmethod
    def from_csv(cls, path):
        return read_bath_csv(path)

    def to_csv(self, path):
        write_bath_csv(path, self.times, self.values)


class FiniteBath(BathModel):
    """Correlations of a finite reservoir, optionally damped by ``e^{-eta t}``.

    ``f_{mu nu}(t) = sum_{a,b} p_a conj(R_mu[b,a]) R_nu[b,a] e^{i (E_a - E_b) t}``
    in the eigenbasis of ``H_e`` (where ``rho_e`` must be diagonal).  With
    ``eta > 0`` each line becomes a Lorentzian and the one-sided transform is
    ``sum w / (eta + i (w - nu))``.
    """

    kind = "finite"

    def __init__(self, H_e, R, rho_e, eta=0.0):
        H_e = np.asarray(H_e, dtype=complex)
        E, U = np.linalg.eigh(0.5 * (H_e + H_e.conj().T))
        rho = U.conj().T @ np.asarray(rho_e, dtype=complex) @ U
        if np.linalg.norm(rho - np.diag(np.diag(rho))) > 1e-9 * max(1.0, np.linalg.norm(rho)):
            raise ValueError("rho_e must commute with H_e")
        p = np.diag(rho).real
        Rs = [U.conj().T @ np.asarray(r, dtype=complex) @ U for r in R]
        self.E, self.p, self.eta = E, p, float(eta)
        self.time_scale = 1.0 / self.eta if self.eta > 0 else 1.0
        # line frequencies nu_ab = E_a - E_b and weights w[mu, nu, a, b]
        self.lines = np.subtract.outer(E, E)
        self.weights = np.einsum("a,mba,nba->mnab", p, np.conj(Rs), np.array(Rs))

    @property
    def n_channels(self):
        return self.weights.shape[0]

    @property
    def has_closed_form(self):
        return self.eta > 0

    def correlation(self, t):
        phase = np.exp(1j * self.lines * t - self.eta * t)
        return np.einsum("mnab,ab->mn", self.weights, phase)

    def one_sided(self, omega):
        if self.eta <= 0:
            raise QuadratureNonConvergence("undamped finite bath has no one-sided transform")
        kernel = 1.0 / (self.eta + 1j * (omega - self.lines))
        return np.einsum("mnab,ab->mn", self.weights, kernel)


def one_sided_quadrature(bath, mu, nu, omega, rtol=1e-10, atol=1e-13, max_doublings=40):
    """``int_0^inf e^{-i w t} f_{mu nu}(t) dt`` by doubling panels.

    Panels ``[0, L], [L, 2L], [2L, 4L], ...`` are integrated with Fourier-weighted
    adaptive quadrature until a panel contributes less than ``rtol`` of the
    running total.  If panel contributions shrink geometrically the remaining
    tail is extrapolated.
    """

    def fr(t):
        return bath.f(mu, nu, t).real

    def fi(t):
        return bath.f(mu, nu, t).imag

    def panel(a, b):
        # panel-level accuracy warnings are superseded by the doubling test below
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            return _panel(a, b)

    def _panel(a, b):
        if omega == 0:
            re = integrate.quad(fr, a, b, **_QUAD_OPTS)[0]
            im = integrate.quad(fi, a, b, **_QUAD_OPTS)[0]
            return complex(re, im)
        kw = dict(_QUAD_OPTS, wvar=omega)
        c_r = integrate.quad(fr, a, b, weight="cos", **kw)[0]
        s_r = integrate.quad(fr, a, b, weight="sin", **kw)[0]
        c_i = integrate.quad(fi, a, b, weight="cos", **kw)[0]
        s_i = integrate.quad(fi, a, b, weight="sin", **kw)[0]
        # e^{-iwt}(fr + i fi) = fr cos + fi sin + i (fi cos - fr sin)
        return complex(c_r + s_i, c_i - s_r)

    end = bath.support
    L = min(8.0 * bath.time_scale, end)
    total = panel(0.0, L)
    prev = None
    for _ in range(max_doublings):
        if L >= end:
            return total
        b = min(2 * L, end)
        p = panel(L, b)
        total += p
        L = b
        if abs(p) <= max(rtol * abs(total), atol):
            if prev is not None and abs(prev) > 0:
                r = abs(p) / abs(prev)
                if r < 0.5:
                    total += p * r / (1 - r)
            return total
        prev = p
    raise QuadratureNonConvergence(
        f"one-sided transform of f[{mu},{nu}] at w={omega} did not converge by t={L:g}"
    )


def half_fourier(bath, mu, nu, omega, method="auto"):
    """``(h, zeta)`` for the channel pair ``(mu, nu)``.

    Real floats on the diagonal, complex numbers off it.
    """
    if method == "quadrature" or (method == "auto" and not bath.has_closed_form):
        I_mn = one_sided_quadrature(bath, mu, nu, omega)
        I_nm = I_mn if mu == nu else one_sided_quadrature(bath, nu, mu, omega)
    else:
        I = bath.one_sided(omega)
        I_mn, I_nm = I[mu, nu], I[nu, mu]
    h = I_mn + np.conj(I_nm)
    zeta = (I_mn - np.conj(I_nm)) / 2j
    if mu == nu:
        return float(h.real), float(zeta.real)
    return complex(h), complex(zeta)


@dataclass(frozen=True)
class PSDReport:
    omegas: np.ndarray
    min_eigenvalues: np.ndarray
    atol: float

    @property
    def passed(self):
        return bool(np.all(self.min_eigenvalues >= -self.atol))

    @property
    def failures(self):
        return [float(w) for w, e in zip(self.omegas, self.min_eigenvalues) if e < -self.atol]


def psd_check(bath, omega_grid, atol=1e-9, method="auto"):
    """Minimum eigenvalue of the Hermitian matrix ``[h_{mu nu}(w)]`` at each ``w``."""
    omegas = np.atleast_1d(np.asarray(omega_grid, dtype=float))
    mins = []
    for w in omegas:
        h, _ = bath.transform(w, method)
        mins.append(np.linalg.eigvalsh(0.5 * (h + h.conj().T))[0])
    return PSDReport(omegas, np.array(mins), atol)


@dataclass(frozen=True)
class IntegrabilityReport:
    finite: bool
    value: float
    t_reached: float
    epsilon: float


def integrability_check(bath, mu, nu, epsilon=1.0, rtol=1e-9, max_doublings=60):
    """Estimate ``int_0^inf |f_{mu nu}(t)| (1 + t)^eps dt``.

    Doubling panels are added until one contributes less than ``rtol`` of the
    total (finite) or three consecutive panels stop shrinking, or the doubling
    budget runs out (not finite).
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")

    def g(t):
        return abs(bath.f(mu, nu, t)) * (1.0 + t) ** epsilon

    def panel(a, b):
        return integrate.quad(g, a, b, limit=400, epsabs=1e-15, epsrel=1e-11)[0]

    end = bath.support
    L = min(8.0 * bath.time_scale, end)
    total = panel(0.0, L)
    prev, growing = None, 0
    for _ in range(max_doublings):
        if L >= end:
            return IntegrabilityReport(True, total, L, epsilon)
        b = min(2 * L, end)
        p = panel(L, b)
        total += p
        L = b
        if p <= max(rtol * total, 1e-15):
            return IntegrabilityReport(True, total, L, epsilon)
        if prev is not None and p >= 0.95 * prev:
            growing += 1
            if growing >= 3:
                break
        else:
            growing = 0
        prev = p
    return IntegrabilityReport(False, total, L, epsilon)


def require_integrable(bath, epsilon=1.0):
    """Raise TailDivergence unless every channel pair passes :func:`integrability_check`."""
    n = bath.n_channels
    for mu in range(n):
        for nu in range(n):
            rep = integrability_check(bath, mu, nu, epsilon)
            if not rep.finite:
                raise TailDivergence(
                    f"int |f[{mu},{nu}]|(1+t)^{epsilon} dt does not converge (reached t={rep.t_reached:g})"
                )


def builtin_models():
    """Catalog of bath constructors keyed by config name."""
    return {
        "exponential": ExponentialBath,
        "damped_oscillatory": DampedOscillatoryBath,
        "tabulated": TabulatedBath.from_csv,
    }


def bath_from_dict(spec, base_dir=None):
    import os

    spec = dict(spec)
    kind = spec.pop("type")
    params = dict(spec.pop("params", {}))
    params.update(spec)
    if "mixing" in params and params["mixing"] is not None:
        from .serialization import decode_matrix

        params["mixing"] = decode_matrix(params["mixing"])
    if kind == "tabulated":
        path = params["table"]
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        return TabulatedBath.from_csv(path)
    if kind not in builtin_models():
        raise ValueError(f"unknown bath type {kind!r}")
    return builtin_models()[kind](**params)


def read_bath_csv(path):
    """Columns ``t, Re f_00, Im f_00, Re f_01, Im f_01, ...`` (pairs row-major)."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in rec])
            except ValueError:
                continue  # header
    data = np.array(rows)
    npairs = (data.shape[1] - 1) // 2
    n = int(round(math.sqrt(npairs)))
    if n * n != npairs or 2 * npairs + 1 != data.shape[1]:
        raise DimensionMismatch(f"{path}: column count {data.shape[1]} is not 1 + 2 n^2")
    vals = data[:, 1::2] + 1j * data[:, 2::2]
    return TabulatedBath(data[:, 0], vals.reshape(-1, n, n))


def write_bath_csv(path, times, values):
    from .serialization import fmt

    values = np.asarray(values, dtype=complex)
    n = values.shape[1]
    header = ["t"]
    for mu in range(n):
        for nu in range(n):
            header += [f"re_f_{mu}_{nu}", f"im_f_{mu}_{nu}"]
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for t, F in zip(times, values):
            cells = [fmt(t)]
            for z in F.ravel():
                cells += [fmt(z.real), fmt(z.imag)]
            fh.write(",".join(cells) + "\n")
