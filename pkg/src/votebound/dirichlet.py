"""Dirichlet distributions over the voter-weight simplex.

Density, KL divergence and its gradient, moments, and sampling. The KL
gradient includes the cross term -trigamma(alpha_0) * sum_k (alpha_k -
beta_k); dropping it (as some derivations do) fails finite-difference
validation whenever the two concentration vectors have different totals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import DimensionError, DomainError

_SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class DirichletParams:
    """Concentration vector of a Dirichlet distribution; all entries > 0."""

    alpha: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.alpha, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise DomainError("concentration vector must have length >= 2")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise DomainError("concentration parameters must be positive and finite")
        object.__setattr__(self, "alpha", arr)

    @property
    def total(self) -> float:
        return float(self.alpha.sum())

    def __len__(self) -> int:
        return self.alpha.size


def as_concentration(params) -> np.ndarray:
    """Coerce DirichletParams or an array-like into a validated alpha vector."""
    if isinstance(params, DirichletParams):
        return params.alpha
    return DirichletParams(np.asarray(params, dtype=float)).alpha


def as_simplex(theta) -> np.ndarray:
    """Validate a nonnegative vector summing to one."""
    arr = np.asarray(theta, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise DomainError("simplex point must be a vector of length >= 2")
    if np.any(arr < 0.0) or abs(arr.sum() - 1.0) > max(_SIMPLEX_TOL, 1e-15 * arr.size):
        raise DomainError("simplex point must be nonnegative and sum to 1")
    return arr


def log_density(params, theta) -> float:
    """Log of the Dirichlet density at a point of the simplex.

    Boundary points are allowed only when every zero coordinate has
    concentration >= 1 (density 0 gives -inf for concentration > 1).
    """
    alpha = as_concentration(params)
    point = as_simplex(theta)
    if alpha.size != point.size:
        raise DimensionError("concentration and point dimensions differ")
    zero = point == 0.0
    if np.any(zero & (alpha < 1.0)):
        raise DomainError("density diverges at the boundary for concentration < 1")
    from .specfun import log_multivariate_beta

    if np.any(zero & (alpha > 1.0)):
        return float("-inf")
    interior = ~zero
    return float(
        -log_multivariate_beta(alpha)
        + ((alpha[interior] - 1.0) * np.log(point[interior])).sum()
    )


def kl_divergence(posterior, prior) -> float:
    """KL divergence between two Dirichlet distributions."""
    a = as_concentration(posterior)
    b = as_concentration(prior)
    if a.size != b.size:
        raise DimensionError("posterior and prior dimensions differ")
    a0 = a.sum()
    b0 = b.sum()
    return float(
        _sp.gammaln(a0)
        - _sp.gammaln(a).sum()
        - _sp.gammaln(b0)
        + _sp.gammaln(b).sum()
        + ((a - b) * (_sp.digamma(a) - _sp.digamma(a0))).sum()
    )


def kl_divergence_grad(posterior, prior) -> np.ndarray:
    """Gradient of kl_divergence with respect to the posterior concentrations."""
    a = as_concentration(posterior)
    b = as_concentration(prior)
    if a.size != b.size:
        raise DimensionError("posterior and prior dimensions differ")
    a0 = a.sum()
    return (a - b) * _sp.polygamma(1, a) - _sp.polygamma(1, a0) * (a - b).sum()


def mean(params) -> np.ndarray:
    """Mean of the distribution: alpha / alpha_0, a point on the simplex."""
    alpha = as_concentration(params)
    return alpha / alpha.sum()


def sample(params, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` i.i.d. simplex points, one per row.

    Each draw normalizes independent unit-scale Gamma variates. Shapes
    below one go through the shape-boosting transform G(a+1) * U^(1/a)
    so tiny concentrations cannot collapse to degenerate draws.
    """
    alpha = as_concentration(params)
    if count < 1:
        raise DomainError("sample count must be >= 1")
    small = alpha < 1.0
    shapes = np.where(small, alpha + 1.0, alpha)
    g = rng.standard_gamma(shapes, size=(count, alpha.size))
    if small.any():
        u = rng.random((count, alpha.size))
        boost = np.ones_like(g)
        boost[:, small] = u[:, small] ** (1.0 / alpha[small])
        g = g * boost
    return g / g.sum(axis=1, keepdims=True)
