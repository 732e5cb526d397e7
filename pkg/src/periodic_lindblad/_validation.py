"""Input validation helpers shared by every module."""

import numpy as np

from .exceptions import DimensionMismatch, NonHermitianInput

DEFAULT_ATOL = 1e-9
DEFAULT_RTOL = 1e-9


def as_square_matrix(M, name="matrix"):
    """Return ``M`` as a complex square ndarray or raise DimensionMismatch."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be a square matrix, got shape {M.shape}")
    return M


def hermiticity_residual(M):
    M = np.asarray(M)
    return float(np.linalg.norm(M - M.conj().T))


def check_hermitian(M, atol=DEFAULT_ATOL, name="matrix"):
    M = as_square_matrix(M, name)
    res = hermiticity_residual(M)
    if res > atol:
        raise NonHermitianInput(f"{name} is not Hermitian (residual {res:.3e} > {atol:.1e})")
    return M


def check_density_matrix(rho, atol=DEFAULT_ATOL, name="rho"):
    """Validate unit trace, Hermiticity and positivity within ``atol``."""
    rho = check_hermitian(rho, atol=atol, name=name)
    tr = np.trace(rho)
    if abs(tr - 1.0) > atol:
        raise ValueError(f"{name} must have unit trace, got {tr:.6g}")
    lo = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lo < -atol:
        raise ValueError(f"{name} is not positive semidefinite (min eigenvalue {lo:.3e})")
    return rho


def check_superoperator(S, dim=None, name="superoperator"):
    """Return ``(S, d)`` where ``S`` is a d^2 x d^2 complex array."""
    S = as_square_matrix(S, name)
    d = int(round(np.sqrt(S.shape[0])))
    if d * d != S.shape[0]:
        raise DimensionMismatch(f"{name} has size {S.shape[0]}, which is not a perfect square")
    if dim is not None and d != dim:
        raise DimensionMismatch(f"{name} acts on {d}x{d} matrices, expected {dim}x{dim}")
    return S, d


def check_same_dim(*matrices):
    dims = {np.shape(m) for m in matrices}
    if len(dims) != 1:
        raise DimensionMismatch(f"operands have inconsistent shapes {sorted(dims)}")
