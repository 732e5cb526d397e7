"""Estimator-style wrappers (``fit`` / ``transform`` / ``predict``).

Hyperparameters go to the constructor and are exposed through
``get_params``/``set_params``; fitted state lives in attributes with a
trailing underscore.  ``fit`` takes a :class:`SystemModel` (or a generator for
:class:`FloquetAnalyzer`) in place of a data matrix.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import algebra, floquet, generators, spectral


def _as_states(X, d):
    X = np.asarray(X, dtype=complex)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[1:] != (d, d):
        raise ValueError(f"expected density matrices of shape (n, {d}, {d}), got {X.shape}")
    return X


class _GeneratorEstimator(BaseEstimator):
    def _build(self, model, spec):
        raise NotImplementedError

    def fit(self, X, y=None):
        """Assemble the generator for the SystemModel ``X``."""
        if not isinstance(X, spectral.SystemModel):
            raise TypeError("fit expects a SystemModel")
        self.spectral_ = spectral.decompose(X)
        self.generator_ = self._build(X, self.spectral_)
        self.dim_ = X.dim
        return self

    def transform(self, X, t=None):
        """Generator action ``L_t(rho)`` on a stack of matrices."""
        check_is_fitted(self, "generator_")
        L = self.generator_.superoperator(t)
        return np.array([algebra.apply(L, r) for r in _as_states(X, self.dim_)])

    def predict(self, times, rho0=None):
        """States ``Lam_t(rho0)`` at ``times`` (default ``rho0``: top basis state)."""
        check_is_fitted(self, "generator_")
        if rho0 is None:
            rho0 = np.zeros((self.dim_, self.dim_), dtype=complex)
            rho0[-1, -1] = 1.0
        return floquet.propagate(self.generator_, np.atleast_1d(times), rho0)


class WCLGenerator(_GeneratorEstimator):
    """Constant generator of the fast-driving weak coupling limit."""

    def __init__(self, steering=None, bath=None, n_trunc=None, scale=1.0, shifted=False):
        self.steering = steering
        self.bath = bath
        self.n_trunc = n_trunc
        self.scale = scale
        self.shifted = shifted

    def _build(self, model, spec):
        return generators.build_wcl_generator(
            model, spec, self.steering, self.bath, n_trunc=self.n_trunc, scale=self.scale, shifted=self.shifted
        )


class AdiabaticGenerator(_GeneratorEstimator):
    """Periodic generator of the slow-driving limit."""

    def __init__(self, steering=None, bath=None, scale=1.0):
        self.steering = steering
        self.bath = bath
        self.scale = scale

    def _build(self, model, spec):
        return generators.build_adiabatic_generator(model, spec, self.steering, self.bath, scale=self.scale)


class FloquetAnalyzer(BaseEstimator):
    """Floquet normal form and monodromy report of a generator.

    Parameters
    ----------
    method : {"auto", "commutative", "generic"}
    T : float, optional
        Period; defaults to the generator's.
    atol : float
        Multiplier classification tolerance.
    """

    def __init__(self, method="auto", T=None, atol=floquet.MULTIPLIER_ATOL):
        self.method = method
        self.T = T
        self.atol = atol

    def fit(self, X, y=None):
        T = X.period if self.T is None else self.T
        method = self.method
        if method == "auto":
            method = "commutative" if floquet.commutativity_check(X) <= floquet.COMMUTATIVITY_ATOL else "generic"
        if method == "commutative":
            self.decomposition_ = floquet.normal_form_commutative(X, T)
        elif method == "generic":
            self.decomposition_ = floquet.normal_form_generic(X, T)
        else:
            raise ValueError(f"unknown method {self.method!r}")
        self.report_ = floquet.monodromy_analysis(self.decomposition_.monodromy, T, self.atol)
        self.dim_ = X.dim
        return self

    def transform(self, times):
        """Propagators ``P(t) exp(tX)`` at ``times``."""
        check_is_fitted(self, "decomposition_")
        return np.array([self.decomposition_.propagator(t) for t in np.atleast_1d(times)])

    def predict(self, times, rho0):
        """Limit-cycle states reached from ``rho0``."""
        check_is_fitted(self, "decomposition_")
        cycle = floquet.limit_cycle(self.decomposition_, rho0, self.atol)
        return np.array([cycle(t) for t in np.atleast_1d(times)])
