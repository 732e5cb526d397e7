"""Periodic steering functions ``g(t)``.

Every steering function knows its period, its Fourier coefficients
``g^(n) = (1/T) int_0^T g(t) e^{-i n Omega t} dt`` and the antiderivative
``Gamma(t) = int_0^t |g|^2``.  Closed forms are used throughout; the
piecewise-linear ``SampledSteering`` integrates its interpolant exactly.
"""

import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

TWO_PI = 2.0 * math.pi


def _as_array(t):
    return np.asarray(t, dtype=float)


class SteeringFunction:
    """Base class. Subclasses set ``Omega`` and implement ``_eval``, ``_coefficients``,
    ``mean_square`` and ``_gamma_partial``."""

    Omega: float
    #: highest |n| with nonzero coefficient, or None when not band-limited
    bandwidth = None
    kind = "abstract"

    @property
    def period(self):
        return TWO_PI / self.Omega

    @property
    def discontinuities(self):
        return ()

    @property
    def is_real(self):
        return True

    def __call__(self, t):
        t = _as_array(t)
        out = self._eval(np.mod(t, self.period))
        return out if out.ndim else out[()]

    def coefficients(self, N):
        """Fourier coefficients for ``n = -N..N``."""
        ns = np.arange(-N, N + 1)
        return self._coefficients(ns)

    def fourier_coefficient(self, n):
        return complex(self._coefficients(np.array([int(n)]))[0])

    def reconstruct(self, t, N):
        """Partial Fourier sum of order ``N`` evaluated at ``t``."""
        t = _as_array(t)
        ns = np.arange(-N, N + 1)
        c = self._coefficients(ns)
        return np.exp(1j * self.Omega * np.multiply.outer(t, ns)) @ c

    def gamma_integral(self, t):
        """``Gamma(t) = int_0^t |g(s)|^2 ds`` for ``t >= 0``."""
        t = _as_array(t)
        if np.any(t < 0):
            raise ValueError("gamma_integral is defined for t >= 0")
        T = self.period
        k = np.floor(t / T)
        r = t - k * T
        out = k * self.mean_square * T + self._gamma_partial(r)
        return out if out.ndim else float(out)

    def l2_tail(self, N):
        """``sum_{|n|>N} |g^(n)|^2`` via Parseval, clipped at zero."""
        if N < 0:
            raise ValueError("N must be non-negative")
        if self.bandwidth is not None and N >= self.bandwidth:
            return 0.0
        head = float(np.sum(np.abs(self.coefficients(N)) ** 2))
        return max(self.mean_square - head, 0.0)

    def truncation_order(self, rtol=1e-10, max_order=1 << 14):
        """Smallest ``N`` with ``l2_tail(N) <= rtol * mean_square``, or None if above ``max_order``."""
        if self.bandwidth is not None:
            return self.bandwidth
        target = rtol * self.mean_square
        N = 1
        while N <= max_order:
            if self.l2_tail(N) <= target:
                lo, hi = N // 2, N
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    if self.l2_tail(mid) <= target:
                        hi = mid
                    else:
                        lo = mid
                return hi
            N *= 2
        return None

    def is_constant(self, atol=1e-12):
        c = self.coefficients(max(self.bandwidth or 0, 8))
        mid = len(c) // 2
        return self.mean_square - abs(c[mid]) ** 2 <= atol

    # subclass hooks -------------------------------------------------------
    def _eval(self, t):
        raise NotImplementedError

    def _coefficients(self, ns):
        raise NotImplementedError

    def _gamma_partial(self, r):
        """``int_0^r |g|^2`` for ``0 <= r < T``."""
        raise NotImplementedError

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantSteering(SteeringFunction):
    value: complex = 1.0
    Omega: float = 1.0
    kind = "const"
    bandwidth = 0

    @property
    def is_real(self):
        return complex(self.value).imag == 0

    @property
    def mean_square(self):
        return abs(self.value) ** 2

    def _eval(self, t):
        v = self.value if self.is_real else complex(self.value)
        return np.full(t.shape, v, dtype=float if self.is_real else complex)

    def _coefficients(self, ns):
        return np.where(ns == 0, complex(self.value), 0j)

    def _gamma_partial(self, r):
        return self.mean_square * r

    def to_dict(self):
        return {"type": "const", "value": self.value, "Omega": self.Omega}


@dataclass(frozen=True)
class CosineSteering(SteeringFunction):
    """``amplitude * cos(Omega t + phase)``."""

    Omega: float = 1.0
    amplitude: float = 1.0
    phase: float = 0.0
    kind = "cos"
    bandwidth = 1

    @property
    def mean_square(self):
        return 0.5 * self.amplitude ** 2

    def _eval(self, t):
        return self.amplitude * np.cos(self.Omega * t + self.phase)

    def _coefficients(self, ns):
        half = 0.5 * self.amplitude
        return np.select(
            [ns == 1, ns == -1],
            [half * np.exp(1j * self.phase), half * np.exp(-1j * self.phase)],
            0j,
        )

    def _gamma_partial(self, r):
        A2, W, p = self.amplitude ** 2, self.Omega, self.phase
        return A2 * (0.5 * r + (np.sin(2 * (W * r + p)) - np.sin(2 * p)) / (4 * W))

    def to_dict(self):
        return {"type": "cos", "Omega": self.Omega, "amplitude": self.amplitude, "phase": self.phase}


@dataclass(frozen=True)
class SineSteering(SteeringFunction):
    """``amplitude * sin(Omega t + phase)``."""

    Omega: float = 1.0
    amplitude: float = 1.0
    phase: float = 0.0
    kind = "sin"
    bandwidth = 1

    @property
    def mean_square(self):
        return 0.5 * self.amplitude ** 2

    def _eval(self, t):
        return self.amplitude * np.sin(self.Omega * t + self.phase)

    def _coefficients(self, ns):
        c = self.amplitude / 2j
        return np.select(
            [ns == 1, ns == -1],
            [c * np.exp(1j * self.phase), -c * np.exp(-1j * self.phase)],
            0j,
        )

    def _gamma_partial(self, r):
        A2, W, p = self.amplitude ** 2, self.Omega, self.phase
        return A2 * (0.5 * r - (np.sin(2 * (W * r + p)) - np.sin(2 * p)) / (4 * W))

    def to_dict(self):
        return {"type": "sin", "Omega": self.Omega, "amplitude": self.amplitude, "phase": self.phase}


@dataclass(frozen=True)
class FourierSteering(SteeringFunction):
    """Finite Fourier series ``sum_n c_n e^{i n Omega t}``; ``coeffs`` maps ``n -> c_n``."""

    Omega: float = 1.0
    coeffs: tuple = ()
    kind = "fourier"

    def __post_init__(self):
        items = self.coeffs.items() if isinstance(self.coeffs, dict) else self.coeffs
        merged = {}
        for n, c in items:
            merged[int(n)] = merged.get(int(n), 0j) + complex(c)
        object.__setattr__(self, "coeffs", tuple(sorted(merged.items())))

    @property
    def bandwidth(self):
        return max((abs(n) for n, _ in self.coeffs), default=0)

    @property
    def is_real(self):
        d = dict(self.coeffs)
        return all(abs(d.get(-n, 0j) - np.conj(c)) <= 1e-14 * (1 + abs(c)) for n, c in d.items())

    @property
    def mean_square(self):
        return float(sum(abs(c) ** 2 for _, c in self.coeffs))

    def _eval(self, t):
        out = np.zeros(t.shape, dtype=complex)
        for n, c in self.coeffs:
            out = out + c * np.exp(1j * n * self.Omega * t)
        return out.real if self.is_real else out

    def _coefficients(self, ns):
        d = dict(self.coeffs)
        return np.array([d.get(int(n), 0j) for n in ns], dtype=complex)

    def _gamma_partial(self, r):
        W = self.Omega
        out = np.zeros(np.shape(r), dtype=complex)
        for n, cn in self.coeffs:
            for m, cm in self.coeffs:
                k = n - m
                if k == 0:
                    out = out + cn * np.conj(cm) * r
                else:
                    out = out + cn * np.conj(cm) * (np.exp(1j * k * W * r) - 1) / (1j * k * W)
        return out.real

    def to_dict(self):
        return {
            "type": "fourier",
            "Omega": self.Omega,
            "coefficients": [[n, c] for n, c in self.coeffs],
        }


@dataclass(frozen=True)
class PiecewiseConstantSteering(SteeringFunction):
    """Value ``values[j]`` on ``[breakpoints[j], breakpoints[j+1])`` with ``breakpoints``
    starting at 0; the last piece extends to the period."""

    Omega: float = 1.0
    breakpoints: tuple = (0.0,)
    values: tuple = (1.0,)
    kind = "piecewise"

    def __post_init__(self):
        b = tuple(float(x) for x in self.breakpoints)
        v = tuple(self.values)
        if len(b) != len(v) or not b or b[0] != 0.0:
            raise ValueError("breakpoints must start at 0 and match values in length")
        if any(y <= x for x, y in zip(b, b[1:])) or b[-1] >= self.period:
            raise ValueError("breakpoints must be strictly increasing within [0, T)")
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    @property
    def _edges(self):
        return np.array(self.breakpoints + (self.period,))

    @property
    def is_real(self):
        return all(complex(v).imag == 0 for v in self.values)

    @property
    def discontinuities(self):
        v = self.values
        return tuple(
            self.breakpoints[j] for j in range(len(v)) if v[j] != v[j - 1]
        )

    @property
    def mean_square(self):
        e = self._edges
        return float(sum(abs(v) ** 2 * (b - a) for v, a, b in zip(self.values, e[:-1], e[1:])) / self.period)

    def _eval(self, t):
        vals = np.array(self.values, dtype=float if self.is_real else complex)
        idx = np.searchsorted(self.breakpoints, t, side="right") - 1
        out = vals[idx]
        scale = np.finfo(float).eps * 16 * self.period
        for j in range(len(vals)):
            if vals[j] == vals[j - 1]:
                continue
            tj = self.breakpoints[j]
            hit = (np.abs(t - tj) <= scale) | ((j == 0) & (np.abs(t - self.period) <= scale))
            out = np.where(hit, 0.5 * (vals[j] + vals[j - 1]), out)
        return out

    def _coefficients(self, ns):
        e = self._edges
        W, T = self.Omega, self.period
        out = np.zeros(ns.shape, dtype=complex)
        zero = ns == 0
        nz = np.where(zero, 1, ns)
        for v, a, b in zip(self.values, e[:-1], e[1:]):
            piece = (np.exp(-1j * nz * W * b) - np.exp(-1j * nz * W * a)) / (-1j * nz * W)
            out += v * np.where(zero, b - a, piece)
        return out / T

    def _gamma_partial(self, r):
        e = self._edges
        out = np.zeros(np.shape(r))
        for v, a, b in zip(self.values, e[:-1], e[1:]):
            out = out + abs(v) ** 2 * np.clip(r - a, 0.0, b - a)
        return out

    def to_dict(self):
        return {
            "type": "piecewise",
            "Omega": self.Omega,
            "breakpoints": list(self.breakpoints),
            "values": list(self.values),
        }


def square_wave(Omega=1.0, high=1.0, low=-1.0, duty=0.5):
    """``high`` on the first ``duty`` fraction of the period, ``low`` after."""
    T = TWO_PI / Omega
    return PiecewiseConstantSteering(Omega=Omega, breakpoints=(0.0, duty * T), values=(high, low))


@dataclass(frozen=True)
class SampledSteering(SteeringFunction):
    """Periodic piecewise-linear interpolant of samples ``(times, values)`` on ``[0, T)``."""

    times: tuple = ()
    values: tuple = ()
    Omega: float = 1.0
    kind = "sampled"
    _nodes: tuple = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=complex)
        T = self.period
        if t.ndim != 1 or t.size < 2 or t.size != v.size:
            raise ValueError("need at least two samples with matching times and values")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("sample times and values must be finite")
        if np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] >= T:
            raise ValueError("sample times must be strictly increasing within [0, T)")
        # close the loop: value at T equals value at 0 (interpolated across the wrap)
        if t[0] > 0:
            gap = t[0] + T - t[-1]
            v0 = v[-1] + (v[0] - v[-1]) * (T - t[-1]) / gap
            t = np.concatenate([[0.0], t])
            v = np.concatenate([[v0], v])
        nodes_t = np.concatenate([t, [T]])
        nodes_v = np.concatenate([v, [v[0]]])
        object.__setattr__(self, "times", tuple(self.times))
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "_nodes", (nodes_t, nodes_v))

    @property
    def is_real(self):
        return bool(np.all(np.imag(self._nodes[1]) == 0))

    @property
    def mean_square(self):
        t, v = self._nodes
        a, b = v[:-1], v[1:]
        seg = (np.abs(a) ** 2 + (a * np.conj(b)).real + np.abs(b) ** 2) / 3.0
        return float(np.sum(seg * np.diff(t)) / self.period)

    def _eval(self, t):
        nt, nv = self._nodes
        re = np.interp(t, nt, nv.real)
        if self.is_real:
            return re
        return re + 1j * np.interp(t, nt, nv.imag)

    def _coefficients(self, ns):
        nt, nv = self._nodes
        a, b = nt[:-1], nt[1:]
        va, vb = nv[:-1], nv[1:]
        L = b - a
        s = (vb - va) / L
        out = np.empty(ns.shape, dtype=complex)
        for i, n in enumerate(ns):
            k = n * self.Omega
            if n == 0:
                out[i] = np.sum(0.5 * (va + vb) * L)
                continue
            ea, eb = np.exp(-1j * k * a), np.exp(-1j * k * b)
            I0 = (eb - ea) / (-1j * k)
            I1 = L * eb / (-1j * k) - (eb - ea) / (-1j * k) ** 2
            out[i] = np.sum(va * I0 + s * I1)
        return out / self.period

    def _gamma_partial(self, r):
        nt, nv = self._nodes
        r = np.asarray(r, dtype=float)
        a, b = nt[:-1], nt[1:]
        va = nv[:-1]
        s = (nv[1:] - va) / (b - a)
        u = np.clip(np.subtract.outer(r, a), 0.0, b - a)
        seg = np.abs(va) ** 2 * u + (va * np.conj(s)).real * u ** 2 + np.abs(s) ** 2 * u ** 3 / 3.0
        return seg.sum(axis=-1)

    def to_dict(self):
        return {
            "type": "sampled",
            "Omega": self.Omega,
            "times": list(self.times),
            "values": list(self.values),
        }


def fourier_coefficient(g, n):
    return g.fourier_coefficient(n)


def gamma_integral(g, t):
    return g.gamma_integral(t)


def l2_tail(g, N):
    return g.l2_tail(N)


def _points(*gs):
    pts = sorted({p for g in gs for p in g.discontinuities})
    return pts or None


def inner_product(g1, g2):
    """``(1/T) int_0^T g1 conj(g2) dt`` which equals ``sum_n g1^(n) conj(g2^(n))``."""
    if g1.period != g2.period and not math.isclose(g1.period, g2.period, rel_tol=1e-12):
        raise ValueError("steering functions must share the period")
    if g1 == g2:
        return complex(g1.mean_square)
    if g1.bandwidth is not None and g2.bandwidth is not None:
        N = max(g1.bandwidth, g2.bandwidth)
        return complex(np.vdot(g2.coefficients(N), g1.coefficients(N)))
    return _cross_quad(g1, g2, g1.period) / g1.period


def _cross_quad(g1, g2, upper):
    pts = [p for p in (_points(g1, g2) or []) if 0 < p < upper]
    def f(t):
        return complex(g1(t) * np.conj(g2(t)))
    opts = dict(limit=400, epsabs=1e-13, epsrel=1e-12, points=pts or None)
    re = integrate.quad(lambda t: f(t).real, 0.0, upper, **opts)[0]
    im = integrate.quad(lambda t: f(t).imag, 0.0, upper, **opts)[0]
    return complex(re, im)


def cross_integral(g1, g2, t):
    """``int_0^t g1(s) conj(g2(s)) ds``; reduces to ``gamma_integral`` when ``g1 == g2``."""
    if g1 == g2:
        return complex(g1.gamma_integral(t))
    T = g1.period
    k = math.floor(t / T)
    r = t - k * T
    full = inner_product(g1, g2) * T
    return k * full + (_cross_quad(g1, g2, r) if r > 0 else 0j)


def rate_series_bound(g_mu, g_nu, N=None):
    """Return ``(lhs, rhs)`` of the Hoelder bound on ``sum_n |g_mu^(n) g_nu^(-n)|``.

    Both sides are evaluated with coefficients up to order ``N`` (the
    truncation order of the worse-converging function when omitted).
    """
    if N is None:
        orders = [g.truncation_order(1e-10, max_order=1 << 12) for g in (g_mu, g_nu)]
        N = max(o if o is not None else 1 << 12 for o in orders)
    a = g_mu.coefficients(N)
    b = g_nu.coefficients(N)
    lhs = float(np.sum(np.abs(a * b[::-1])))
    mid = N
    plus = lambda c: float(np.linalg.norm(c[mid + 1:]))
    minus = lambda c: float(np.linalg.norm(c[:mid]))
    rhs = abs(a[mid] * b[mid]) + plus(a) * minus(b) + minus(a) * plus(b)
    return lhs, rhs


def builtin_steering(Omega=1.0):
    """One instance of every built-in family (used by property tests and demos)."""
    T = TWO_PI / Omega
    return {
        "const": ConstantSteering(1.0, Omega),
        "cos": CosineSteering(Omega),
        "sin": SineSteering(Omega),
        "fourier": FourierSteering(Omega, ((0, 0.5), (1, 0.25), (-1, 0.25), (2, 0.1j), (-2, -0.1j))),
        "square": square_wave(Omega),
        "pulse": square_wave(Omega, high=1.0, low=0.0, duty=0.3),
        "sampled": SampledSteering(
            times=tuple(np.linspace(0, T, 16, endpoint=False)),
            values=tuple(1.0 + 0.5 * np.sin(np.linspace(0, TWO_PI, 16, endpoint=False)) ** 2),
            Omega=Omega,
        ),
    }


def steering_from_dict(spec, Omega=None, base_dir=None):
    """Build a steering function from its JSON description.

    Relative CSV paths of sampled steering are resolved against ``base_dir``.
    """
    spec = dict(spec)
    kind = spec.pop("type")
    W = float(spec.pop("Omega", Omega if Omega is not None else 1.0))
    if kind in ("const", "constant"):
        return ConstantSteering(spec.get("value", 1.0), W)
    if kind == "cos":
        return CosineSteering(W, spec.get("amplitude", 1.0), spec.get("phase", 0.0))
    if kind == "sin":
        return SineSteering(W, spec.get("amplitude", 1.0), spec.get("phase", 0.0))
    if kind == "fourier":
        coeffs = [(int(n), c[0] + 1j * c[1] if isinstance(c, (list, tuple)) else c) for n, c in spec["coefficients"]]
        return FourierSteering(W, tuple(coeffs))
    if kind == "square":
        return square_wave(W, spec.get("high", 1.0), spec.get("low", -1.0), spec.get("duty", 0.5))
    if kind == "piecewise":
        return PiecewiseConstantSteering(W, tuple(spec["breakpoints"]), tuple(spec["values"]))
    if kind == "sampled":
        if "path" in spec:
            path = spec["path"]
            if base_dir is not None and not os.path.isabs(path):
                path = os.path.join(base_dir, path)
            times, values = read_sampled_csv(path)
        else:
            times, values = spec["times"], spec["values"]
        return SampledSteering(tuple(times), tuple(values), W)
    raise ValueError(f"unknown steering type {kind!r}")


def read_sampled_csv(path):
    """Read ``t, Re g, Im g`` rows (header optional)."""
    data = np.genfromtxt(path, delimiter=",", comments="#", dtype=float)
    if np.isnan(data[0]).any():
        data = data[1:]
    data = np.atleast_2d(data)
    times = data[:, 0]
    values = data[:, 1] + (1j * data[:, 2] if data.shape[1] > 2 else 0.0)
    if np.all(np.imag(values) == 0):
        values = np.real(values)
    return tuple(times), tuple(values)
