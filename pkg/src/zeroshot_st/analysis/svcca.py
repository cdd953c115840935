"""Singular vector canonical correlation analysis."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from ..errors import ArgumentError, IllConditionedError


def _reduce(x, variance_kept, ridge):
    """Orthonormal basis of the top singular directions of centered ``x``."""
    x = x - x.mean(axis=0)
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    power = s ** 2
    total = power.sum()
    if total == 0:
        raise IllConditionedError("a view has zero variance")
    k = int(np.searchsorted(np.cumsum(power) / total, variance_kept - 1e-12) + 1)
    # directions weaker than ridge * strongest are numerically singular
    k = min(k, int((power > ridge * power[0]).sum()))
    return u[:, :k]


def canonical_correlations(x, y, variance_kept=0.99, ridge=1e-6):
    """Canonical correlations between two row-aligned views, strongest first."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2:
        raise ArgumentError("svcca expects two 2-D matrices")
    if x.shape[0] != y.shape[0]:
        raise ArgumentError(f"views have {x.shape[0]} and {y.shape[0]} rows")
    if not 0 < variance_kept <= 1:
        raise ArgumentError(f"variance_kept must lie in (0, 1], got {variance_kept}")
    n = x.shape[0]
    d = max(x.shape[1], y.shape[1])
    if n <= d:
        raise IllConditionedError(
            f"{n} samples for {d} dimensions; collect more samples than dimensions")
    ux = _reduce(x, variance_kept, ridge)
    uy = _reduce(y, variance_kept, ridge)
    # on whitened bases the cross-covariance SVD gives the correlations directly
    rho = np.linalg.svd(ux.T @ uy, compute_uv=False)
    return np.clip(rho, 0.0, 1.0)


def svcca(x, y, variance_kept=0.99, ridge=1e-6):
    """Mean canonical correlation after SVD truncation; in [0, 1]."""
    return float(canonical_correlations(x, y, variance_kept, ridge).mean())


class SVCCA(BaseEstimator):
    """Estimator wrapper: ``fit(X, Y)`` stores ``correlations_`` and ``score_``."""

    def __init__(self, variance_kept=0.99, ridge=1e-6):
        self.variance_kept = variance_kept
        self.ridge = ridge

    def fit(self, X, Y):
        X = check_array(X)
        Y = check_array(Y)
        self.correlations_ = canonical_correlations(X, Y, self.variance_kept, self.ridge)
        self.score_ = float(self.correlations_.mean())
        self.n_components_ = len(self.correlations_)
        return self

    def score(self, X=None, Y=None):
        if X is not None:
            return svcca(X, Y, self.variance_kept, self.ridge)
        check_is_fitted(self, "score_")
        return self.score_
