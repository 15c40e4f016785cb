"""Shared oracles and helpers for the test suite."""

import numpy as np
import pytest
from scipy import integrate
from scipy import special as sp


def rel_err(a, b, floor=1e-12):
    """Relative error with a floor denominator for near-zero references."""
    return abs(a - b) / max(abs(a), abs(b), floor)


def vec_rel_err(a, b, floor=1e-12):
    """Norm-wise relative error of a gradient against a reference."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), floor))


def beta_cdf_quadrature(a, b, x=0.5):
    """Adaptive quadrature of the Beta density; independent of the package."""
    lb = sp.betaln(a, b)

    def f(t):
        return np.exp((b - 1.0) * np.log1p(-t) - lb)

    val, _ = integrate.quad(f, 0.0, x, weight="alg", wvar=(a - 1.0, 0.0), limit=200)
    return val


def _d_first_quad(p, q, cdf_pq):
    """d/dp I_{1/2}(p, q) by integral differentiation:
    (1/B) int_0^1/2 t^(p-1) (1-t)^(q-1) ln t dt - I * (psi(p) - psi(p+q))."""
    lb = sp.betaln(p, q)

    def f(t):
        return np.exp((q - 1.0) * np.log1p(-t) - lb)

    val, _ = integrate.quad(f, 0.0, 0.5, weight="alg-loga", wvar=(p - 1.0, 0.0), limit=200)
    return val - cdf_pq * (sp.digamma(p) - sp.digamma(p + q))


def _d_second_quad(p, q, cdf_pq):
    """d/dq I_{1/2}(p, q) by integral differentiation of the (1-t) factor."""
    lb = sp.betaln(p, q)

    def f(t):
        return np.exp((q - 1.0) * np.log1p(-t) - lb) * np.log1p(-t)

    val, _ = integrate.quad(f, 0.0, 0.5, weight="alg", wvar=(p - 1.0, 0.0), limit=200)
    return val - cdf_pq * (sp.digamma(q) - sp.digamma(p + q))


def beta_cdf_grad_quadrature(a, b):
    """Quadrature oracle for both partials of the Beta CDF at 1/2.

    Differentiates whichever tail is the smaller of the two (via the
    reflection I_x(a,b) = 1 - I_{1-x}(b,a)) so the subtraction of the
    digamma term never cancels catastrophically; scipy supplies the CDF
    values, keeping the oracle independent of the package implementation.
    """
    cdf = sp.betainc(a, b, 0.5)
    if cdf <= 0.5:
        return _d_first_quad(a, b, cdf), _d_second_quad(a, b, cdf)
    comp = sp.betainc(b, a, 0.5)
    return -_d_second_quad(b, a, comp), -_d_first_quad(b, a, comp)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
