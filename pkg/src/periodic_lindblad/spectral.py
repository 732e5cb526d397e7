"""Spectral bookkeeping for the system Hamiltonian.

Eigenvalues of ``H`` are clustered into degenerate levels with joint
projectors.  Bohr frequencies are the distinct level differences; each one
remembers the ``(k, l)`` level pairs producing it, which is all that is needed
to split couplings into frequency components and to build the frequency
projections ``E_w(rho) = sum_{(k,l)~w} P_k rho P_l``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import algebra
from ._validation import as_square_matrix, check_hermitian, check_superoperator
from .exceptions import DimensionMismatch, UnknownFrequency


@dataclass(frozen=True)
class SystemModel:
    """Hamiltonian ``H`` (hbar = 1) and the system-side coupling operators."""

    H: np.ndarray
    couplings: tuple = ()
    labels: tuple = ()

    def __post_init__(self):
        H = check_hermitian(self.H, name="H")
        couplings = tuple(as_square_matrix(S, f"couplings[{i}]") for i, S in enumerate(self.couplings))
        for i, S in enumerate(couplings):
            if S.shape != H.shape:
                raise DimensionMismatch(f"couplings[{i}] has shape {S.shape}, H has {H.shape}")
        labels = tuple(self.labels) or tuple(f"S{i}" for i in range(len(couplings)))
        if len(labels) != len(couplings):
            raise ValueError("labels and couplings differ in length")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "couplings", couplings)
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self):
        return self.H.shape[0]


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    projectors: tuple
    bohr_frequencies: np.ndarray
    pairs: tuple = field(repr=False)
    degeneracy_tol: float = 0.0

    @property
    def dim(self):
        return self.projectors[0].shape[0]

    def index_of(self, omega):
        """Index of the Bohr frequency matching ``omega`` within the clustering tolerance."""
        tol = max(self.degeneracy_tol, 1e-12)
        i = int(np.argmin(np.abs(self.bohr_frequencies - omega)))
        if abs(self.bohr_frequencies[i] - omega) > tol:
            raise UnknownFrequency(f"{omega!r} is not a Bohr frequency of H")
        return i

    def frequency_projector(self, omega):
        """Superoperator ``E_w``."""
        d = self.dim
        E = np.zeros((d * d, d * d), dtype=complex)
        for k, l in self.pairs[self.index_of(omega)]:
            E += algebra.sandwich(self.projectors[k], self.projectors[l])
        return E

    def to_dict(self):
        return {
            "eigenvalues": self.eigenvalues,
            "degeneracies": [int(round(np.trace(P).real)) for P in self.projectors],
            "bohr_frequencies": self.bohr_frequencies,
            "pairs": [[list(p) for p in ps] for ps in self.pairs],
            "degeneracy_tol": self.degeneracy_tol,
        }


def _cluster(values, tol):
    """Group sorted values into runs whose consecutive gaps are <= tol."""
    groups = []
    for idx in np.argsort(values, kind="stable"):
        if groups and values[idx] - values[groups[-1][-1]] <= tol:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    return groups


def decompose(model, degeneracy_tol=None):
    """Spectral decomposition of ``model.H`` (a SystemModel or a bare matrix).

    ``degeneracy_tol`` defaults to ``1e-9 * max|eps|`` (floored at 1e-12); it
    is used both to merge eigenvalues into levels and to merge level
    differences into Bohr frequencies.
    """
    H = model.H if isinstance(model, SystemModel) else check_hermitian(model, name="H")
    w, V = np.linalg.eigh(0.5 * (H + H.conj().T))
    if degeneracy_tol is None:
        degeneracy_tol = max(1e-9 * float(np.max(np.abs(w))), 1e-12)

    levels = _cluster(w, degeneracy_tol)
    eps = np.array([w[g].mean() for g in levels])
    projectors = tuple(V[:, g] @ V[:, g].conj().T for g in levels)

    n = len(eps)
    kl = [(k, l) for k in range(n) for l in range(n)]
    diffs = np.array([eps[k] - eps[l] for k, l in kl])
    groups = _cluster(diffs, degeneracy_tol)
    freqs, pairs = [], []
    for g in groups:
        members = [kl[i] for i in g]
        if any(k == l for k, l in members):
            freqs.append(0.0)
        else:
            freqs.append(float(diffs[g].mean()))
        pairs.append(tuple(sorted(members)))
    return SpectralData(
        eigenvalues=eps,
        projectors=projectors,
        bohr_frequencies=np.array(freqs),
        pairs=tuple(pairs),
        degeneracy_tol=float(degeneracy_tol),
    )


def jump_component(S, spec, omega):
    """``S_w = sum_{(k,l)~w} P_k S P_l``; satisfies ``[H, S_w] = w S_w``."""
    S = as_square_matrix(S, "S")
    P = spec.projectors
    out = np.zeros_like(S)
    for k, l in spec.pairs[spec.index_of(omega)]:
        out += P[k] @ S @ P[l]
    return out


def jump_components(S, spec):
    """All frequency components of ``S``, stacked along the first axis in Bohr order."""
    return np.array([jump_component(S, spec, w) for w in spec.bohr_frequencies])


def interaction_picture_expansion_check(S, spec, t_grid):
    """Max over ``t_grid`` of ``||e^{iHt} S e^{-iHt} - sum_w S_w e^{iwt}||``."""
    S = as_square_matrix(S, "S")
    H = sum(e * P for e, P in zip(spec.eigenvalues, spec.projectors))
    comps = jump_components(S, spec)
    worst = 0.0
    for t in np.atleast_1d(t_grid):
        U = algebra.matrix_exp(1j * t * H)
        direct = U @ S @ U.conj().T
        series = np.tensordot(np.exp(1j * spec.bohr_frequencies * t), comps, axes=1)
        worst = max(worst, float(np.linalg.norm(direct - series)))
    return worst


@dataclass(frozen=True)
class CongruenceReport:
    free: bool
    violations: list
    Omega: float

    def to_dict(self):
        return {
            "free": self.free,
            "Omega": self.Omega,
            "violations": [list(v) for v in self.violations],
        }


def congruence_check(spec, Omega, tol=None):
    """Look for distinct Bohr frequencies differing by a nonzero multiple of ``Omega``.

    Each unordered pair is reported once as ``(w, w', k)`` with ``w > w'`` and
    ``k >= 1``.  Only ``|k| <= ceil(spread / Omega)`` can match, so the search
    is exhaustive.
    """
    if Omega <= 0:
        raise ValueError("Omega must be positive")
    tol = max(spec.degeneracy_tol, 1e-12) if tol is None else tol
    freqs = np.sort(spec.bohr_frequencies)
    spread = freqs[-1] - freqs[0]
    kmax = math.ceil(spread / Omega) if spread > 0 else 0
    violations = []
    for i, w in enumerate(freqs):
        for wp in freqs[:i]:
            for k in range(1, kmax + 1):
                if abs((w - wp) - k * Omega) <= tol:
                    violations.append((float(w), float(wp), k))
    return CongruenceReport(free=not violations, violations=violations, Omega=float(Omega))


def time_average(X, spec):
    """Time-averaged superoperator ``sum_w E_w X E_w``."""
    X, _ = check_superoperator(X, dim=spec.dim)
    out = np.zeros_like(X)
    for w in spec.bohr_frequencies:
        E = spec.frequency_projector(w)
        out += E @ X @ E
    return out


def hamiltonian_from_spectrum(spec):
    return sum(e * P for e, P in zip(spec.eigenvalues, spec.projectors))


def projector_resolution_residual(spec):
    """``max(||sum_w E_w - id||, max_{w != w'} ||E_w E_w'||, max_w ||E_w^2 - E_w||)``."""
    Es = [spec.frequency_projector(w) for w in spec.bohr_frequencies]
    d2 = Es[0].shape[0]
    worst = float(np.linalg.norm(sum(Es) - np.eye(d2)))
    for i, Ei in enumerate(Es):
        worst = max(worst, float(np.linalg.norm(Ei @ Ei - Ei)))
        for Ej in Es[i + 1:]:
            worst = max(worst, float(np.linalg.norm(Ei @ Ej)))
    return worst


__all__ = [
    "SystemModel",
    "SpectralData",
    "decompose",
    "jump_component",
    "jump_components",
    "interaction_picture_expansion_check",
    "CongruenceReport",
    "congruence_check",
    "time_average",
    "hamiltonian_from_spectrum",
    "projector_resolution_residual",
]
