"""Dense matrix and superoperator substrate.

Conventions
-----------
Vectorization is column stacking: ``vec(M)[i + d*j] = M[i, j]``.  Under this
convention the map ``rho -> A @ rho @ B`` is the matrix ``kron(B.T, A)``.

The Choi matrix of a map ``L`` is ``sum_ij |i><j| (x) L(|i><j|)``, built from the
unnormalized maximally entangled vector.  The first tensor factor is the input
copy, the second is the output of ``L``.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from ._validation import (
    DEFAULT_ATOL,
    as_square_matrix,
    check_same_dim,
    check_superoperator,
)
from .exceptions import BranchFailure, DimensionMismatch

# eigenvector matrices worse than this fall back to the Schur-based logarithm
_EIG_COND_MAX = 1e8


def vectorize(M):
    """Column-stack a square matrix into a vector of length d^2."""
    M = as_square_matrix(M)
    return M.reshape(-1, order="F")


def devectorize(v, dim=None):
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v, dtype=complex).ravel()
    d = int(round(np.sqrt(v.size))) if dim is None else dim
    if d * d != v.size:
        raise DimensionMismatch(f"vector of length {v.size} is not a vectorized {d}x{d} matrix")
    return v.reshape(d, d, order="F")


def sandwich(A, B):
    """Superoperator of ``rho -> A @ rho @ B``."""
    A = as_square_matrix(A, "A")
    B = as_square_matrix(B, "B")
    check_same_dim(A, B)
    return np.kron(B.T, A)


def identity_superoperator(d):
    return np.eye(d * d, dtype=complex)


def left(A):
    """Superoperator of ``rho -> A @ rho``."""
    A = as_square_matrix(A)
    return np.kron(np.eye(A.shape[0]), A)


def right(B):
    """Superoperator of ``rho -> rho @ B``."""
    B = as_square_matrix(B)
    return np.kron(B.T, np.eye(B.shape[0]))


def commutator(H):
    """Superoperator of ``rho -> [H, rho]``."""
    return left(H) - right(H)


def anticommutator(A):
    return left(A) + right(A)


def hamiltonian_part(H):
    """Superoperator of ``rho -> -i [H, rho]``."""
    return -1j * commutator(H)


def dissipator(jump, rate=1.0):
    """``rate * (J rho J^+ - 1/2 {J^+ J, rho})`` as a superoperator."""
    J = as_square_matrix(jump)
    JdJ = J.conj().T @ J
    return rate * (np.kron(J.conj(), J) - 0.5 * anticommutator(JdJ))


def apply(S, rho):
    """Act with superoperator ``S`` on the matrix ``rho``."""
    rho = as_square_matrix(rho)
    return devectorize(S @ vectorize(rho), rho.shape[0])


def superoperator_from_map(fn, d):
    """Tabulate a linear map on d x d matrices into its column-stacked matrix."""
    S = np.empty((d * d, d * d), dtype=complex)
    for k in range(d * d):
        E = np.zeros(d * d, dtype=complex)
        E[k] = 1.0
        S[:, k] = vectorize(fn(devectorize(E, d)))
    return S


def choi(S):
    S, d = check_superoperator(S)
    # S[a + d*b, i + d*j] = <a| L(|i><j|) |b>  ->  C[(i, a), (j, b)]
    S4 = S.reshape(d, d, d, d)  # indices (b, a, j, i)
    return S4.transpose(3, 1, 2, 0).reshape(d * d, d * d)


def partial_trace(M, dims, keep=0):
    """Partial trace of a bipartite operator.

    Parameters
    ----------
    M : array_like
        Operator on ``C^dS (x) C^dE``.
    dims : tuple of int
        ``(dS, dE)``.
    keep : int or str
        Subsystem to keep: ``0``/``"S"`` for the first factor, ``1``/``"E"`` for
        the second.
    """
    M = as_square_matrix(M)
    dS, dE = (int(x) for x in dims)
    if dS * dE != M.shape[0]:
        raise DimensionMismatch(f"dims {dims} do not factor a {M.shape[0]}x{M.shape[0]} matrix")
    keep = {"S": 0, "E": 1}.get(keep, keep)
    M4 = M.reshape(dS, dE, dS, dE)
    if keep == 0:
        return np.einsum("ikjk->ij", M4)
    if keep == 1:
        return np.einsum("kikj->ij", M4)
    raise ValueError(f"keep must be 0/'S' or 1/'E', got {keep!r}")


@dataclass(frozen=True)
class CPTPReport:
    cp: bool
    tp: bool
    min_choi_eig: float
    tp_residual: float
    hermiticity_residual: float

    @property
    def cptp(self):
        return self.cp and self.tp


def cptp_report(S, atol=DEFAULT_ATOL):
    """Check complete positivity and trace preservation through the Choi matrix.

    ``cp`` holds when the Choi matrix is Hermitian and its smallest eigenvalue
    is at least ``-atol``; ``tp`` when the partial trace over the output
    factor equals the identity within ``atol`` (Frobenius norm).
    """
    S, d = check_superoperator(S)
    C = choi(S)
    herm = float(np.linalg.norm(C - C.conj().T))
    min_eig = float(np.linalg.eigvalsh(0.5 * (C + C.conj().T))[0])
    tp_res = float(np.linalg.norm(partial_trace(C, (d, d), keep=0) - np.eye(d)))
    return CPTPReport(
        cp=bool(herm <= atol and min_eig >= -atol),
        tp=bool(tp_res <= atol),
        min_choi_eig=min_eig,
        tp_residual=tp_res,
        hermiticity_residual=herm,
    )


def matrix_exp(M):
    """Matrix exponential (scaling and squaring with Pade approximants)."""
    return sla.expm(as_square_matrix(M))


def branch_cut_distance(z):
    """Distance-like measure from ``z`` to the closed negative real axis, relative to ``|z|``."""
    z = complex(z)
    if z == 0:
        return 0.0
    if z.real > 0:
        return 1.0
    return abs(z.imag) / abs(z)


def matrix_log_principal(M, branch_tol=1e-9):
    """Principal matrix logarithm.

    Raises
    ------
    BranchFailure
        If an eigenvalue is zero or lies within ``branch_tol`` (relative angle)
        of the negative real axis.
    """
    M = as_square_matrix(M)
    w, V = np.linalg.eig(M)
    bad = [z for z in w if branch_cut_distance(z) <= branch_tol]
    if bad:
        raise BranchFailure(
            "principal logarithm undefined: eigenvalue(s) "
            + ", ".join(f"{z:.6g}" for z in bad)
            + " on or near the negative real axis"
        )
    if np.linalg.cond(V) < _EIG_COND_MAX:
        return V @ np.diag(np.log(w)) @ np.linalg.inv(V)
    return sla.logm(M)
