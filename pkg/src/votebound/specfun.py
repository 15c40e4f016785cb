"""Scalar special functions and the binary-KL inverse.

Everything here is a pure function of its arguments; all operations accept
scalars or numpy arrays (broadcasting) and return a matching type. The
regularized incomplete beta function and its parameter derivatives are the
computational core: the expected loss of a weight-randomized majority vote
is a Beta CDF evaluated at one half, and training differentiates it with
respect to the concentration parameters.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special as _sp

from .errors import ConvergenceError, DegenerateGradientError, DomainError

_FPMIN = 1e-300
_CF_EPS = 1e-15
_CF_MAX_ITER = 400
_SERIES_TOL = 3e-17
_SERIES_MAX_TERMS = 100_000
_HYP3F2_TOL = 1e-14
_HYP3F2_MAX_TERMS = 100_000
KL_INV_TOL = 1e-9
KL_INV_MAX_ITER = 200

_LOG_HALF = math.log(0.5)


def _as_float_array(x):
    a = np.asarray(x, dtype=float)
    return a, (a.ndim == 0)


def _maybe_scalar(value, scalar):
    return float(value) if scalar else value


def log_gamma(a):
    """Natural log of the gamma function, defined for positive arguments."""
    arr, scalar = _as_float_array(a)
    if np.any(arr <= 0.0):
        raise DomainError("log_gamma requires a > 0")
    return _maybe_scalar(_sp.gammaln(arr), scalar)


def digamma(a):
    """First derivative of log_gamma."""
    arr, scalar = _as_float_array(a)
    if np.any(arr <= 0.0):
        raise DomainError("digamma requires a > 0")
    return _maybe_scalar(_sp.digamma(arr), scalar)


def trigamma(a):
    """Second derivative of log_gamma."""
    arr, scalar = _as_float_array(a)
    if np.any(arr <= 0.0):
        raise DomainError("trigamma requires a > 0")
    return _maybe_scalar(_sp.polygamma(1, arr), scalar)


def log_multivariate_beta(alpha):
    """Log of the multivariate beta normalizer of a Dirichlet density."""
    arr = np.asarray(alpha, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise DomainError("log_multivariate_beta requires a vector of length >= 2")
    if np.any(arr <= 0.0):
        raise DomainError("log_multivariate_beta requires positive components")
    return float(_sp.gammaln(arr).sum() - _sp.gammaln(arr.sum()))


def _beta_cont_frac(a, b, x):
    """Continued fraction for the incomplete beta (modified Lentz scheme).

    Assumes the caller already switched to the rapidly convergent
    orientation, i.e. x < (a + 1) / (a + b + 2).
    """
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = np.ones_like(a)
    d = 1.0 - qab * x / qap
    d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
    d = 1.0 / d
    h = d.copy()
    converged = np.zeros(a.shape, dtype=bool)
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        d = 1.0 / d
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        h = np.where(converged, h, h * d * c)
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = np.where(np.abs(d) < _FPMIN, _FPMIN, d)
        d = 1.0 / d
        c = 1.0 + aa / c
        c = np.where(np.abs(c) < _FPMIN, _FPMIN, c)
        delta = d * c
        # freeze converged lanes so results match a scalar evaluation exactly
        h = np.where(converged, h, h * delta)
        converged |= np.abs(delta - 1.0) < _CF_EPS
        if converged.all():
            return h
    raise ConvergenceError("incomplete beta continued fraction did not converge")


def reg_inc_beta(x, a, b):
    """Regularized incomplete beta I_x(a, b): the Beta(a, b) CDF at x.

    Boundary extensions for degenerate parameters: a == 0 is a unit mass
    at 0 (CDF identically 1 on [0, 1]) and b == 0 is a unit mass at 1
    (CDF 0 before 1). Both parameters zero is undefined.
    """
    x_arr, sx = _as_float_array(x)
    a_arr, sa = _as_float_array(a)
    b_arr, sb = _as_float_array(b)
    x_arr, a_arr, b_arr = np.broadcast_arrays(x_arr, a_arr, b_arr)
    scalar = sx and sa and sb
    if np.any((x_arr < 0.0) | (x_arr > 1.0)):
        raise DomainError("reg_inc_beta requires x in [0, 1]")
    if np.any(a_arr < 0.0) or np.any(b_arr < 0.0):
        raise DomainError("reg_inc_beta requires a >= 0 and b >= 0")
    if np.any((a_arr == 0.0) & (b_arr == 0.0)):
        raise DomainError("reg_inc_beta is undefined for a = b = 0")

    out = np.empty(x_arr.shape, dtype=float)
    mass_at_zero = a_arr == 0.0
    mass_at_one = (b_arr == 0.0) & ~mass_at_zero
    out[mass_at_zero] = 1.0
    out[mass_at_one] = np.where(x_arr[mass_at_one] >= 1.0, 1.0, 0.0)

    regular = ~mass_at_zero & ~mass_at_one
    at_zero = regular & (x_arr == 0.0)
    at_one = regular & (x_arr == 1.0)
    out[at_zero] = 0.0
    out[at_one] = 1.0

    interior = regular & ~at_zero & ~at_one
    if interior.any():
        xi = x_arr[interior]
        ai = a_arr[interior]
        bi = b_arr[interior]
        # symmetry switch keeps the continued fraction in its fast region
        swap = xi >= (ai + 1.0) / (ai + bi + 2.0)
        aa = np.where(swap, bi, ai)
        bb = np.where(swap, ai, bi)
        xx = np.where(swap, 1.0 - xi, xi)
        log_front = (
            _sp.gammaln(aa + bb)
            - _sp.gammaln(aa)
            - _sp.gammaln(bb)
            + aa * np.log(xx)
            + bb * np.log1p(-xx)
        )
        val = np.exp(log_front) * _beta_cont_frac(aa, bb, xx) / aa
        out[interior] = np.where(swap, 1.0 - val, val)

    np.clip(out, 0.0, 1.0, out=out)
    return _maybe_scalar(out, scalar)


def _grad_series(p, q):
    """Accumulate the three series S, T, T' used by the CDF partials.

    Terms follow c_{k+1} = c_k * x * (p+q+k) / (p+1+k) at x = 1/2 with
    c_0 equal to the closed-form prefactor, so S sums to I_x(p, q) while
    T = sum c_k * e_k  with e_k = sum_{i<k} 1/((p+q+i)(p+1+i)) and
    T' = sum c_k * e'_k with e'_k = sum_{i<k} 1/(p+q+i).
    All terms are nonnegative, so no cancellation occurs.
    """
    log_c0 = (p + q) * _LOG_HALF - np.log(p) - (
        _sp.gammaln(p) + _sp.gammaln(q) - _sp.gammaln(p + q)
    )
    c = np.exp(log_c0)
    s_sum = c.copy()
    t_sum = np.zeros_like(c)
    tp_sum = np.zeros_like(c)
    e = np.zeros_like(c)
    ep = np.zeros_like(c)
    active = np.ones(c.shape, dtype=bool)
    k = 0.0
    for _ in range(_SERIES_MAX_TERMS):
        denom_pq = p + q + k
        denom_p1 = p + 1.0 + k
        ratio = 0.5 * denom_pq / denom_p1
        c_next = c * ratio
        e_next = e + 1.0 / (denom_pq * denom_p1)
        ep_next = ep + 1.0 / denom_pq
        c = np.where(active, c_next, c)
        e = np.where(active, e_next, e)
        ep = np.where(active, ep_next, ep)
        s_sum += np.where(active, c, 0.0)
        t_sum += np.where(active, c * e, 0.0)
        tp_sum += np.where(active, c * ep, 0.0)
        k += 1.0
        scale = s_sum + t_sum + tp_sum + _FPMIN
        tail_small = c * (1.0 + e + ep) < _SERIES_TOL * scale
        active &= ~(tail_small & (ratio < 0.97))
        if not active.any():
            return s_sum, t_sum, tp_sum
    raise ConvergenceError("beta CDF gradient series exhausted its term budget")


def reg_inc_beta_grad(a, b):
    """Partial derivatives of I_{1/2}(a, b) with respect to a and b.

    Evaluated through single-signed series for the smaller of the two
    tails, so both components stay relatively accurate even when the
    distribution puts almost all mass on one side of 1/2. The direct
    hypergeometric expansion printed in most references cancels
    catastrophically once a + b grows past a few dozen.
    """
    a_arr, sa = _as_float_array(a)
    b_arr, sb = _as_float_array(b)
    a_arr, b_arr = np.broadcast_arrays(a_arr, b_arr)
    scalar = sa and sb
    if np.any(a_arr <= 0.0) or np.any(b_arr <= 0.0):
        raise DomainError("reg_inc_beta_grad requires a > 0 and b > 0")
    a_arr = np.atleast_1d(a_arr).astype(float)
    b_arr = np.atleast_1d(b_arr).astype(float)

    val = np.atleast_1d(reg_inc_beta(0.5, a_arr, b_arr))
    lower_is_small = val <= 0.5
    # evaluate the series at the orientation whose CDF value is <= 1/2
    p = np.where(lower_is_small, a_arr, b_arr)
    q = np.where(lower_is_small, b_arr, a_arr)
    small = np.where(lower_is_small, val, np.atleast_1d(reg_inc_beta(0.5, b_arr, a_arr)))
    _, t_sum, tp_sum = _grad_series(p, q)

    psi_pq = _sp.digamma(p + q)
    # d/dp I(p, q) and d/dq I(p, q) at the small-tail orientation
    d_first = small * (_LOG_HALF - 1.0 / p - _sp.digamma(p) + psi_pq) + (1.0 - q) * t_sum
    d_second = small * (_LOG_HALF - _sp.digamma(q) + psi_pq) + tp_sum

    d_a = np.where(lower_is_small, d_first, -d_second)
    d_b = np.where(lower_is_small, d_second, -d_first)
    if scalar:
        return float(d_a[0]), float(d_b[0])
    return d_a, d_b


def hyp3f2(a, b, c, d, e, z):
    """Generalized hypergeometric sum 3F2(a, b, c; d, e; z) at real z in [0, 1).

    Direct term-by-term summation; terms are truncated once their relative
    magnitude drops below 1e-14 past the growth phase. Exceeding the term
    budget raises rather than silently truncating.
    """
    z = float(z)
    if not 0.0 <= z < 1.0:
        raise DomainError("hyp3f2 requires z in [0, 1)")
    term = 1.0
    total = 1.0
    for t in range(_HYP3F2_MAX_TERMS):
        denom = (d + t) * (e + t) * (t + 1.0)
        if denom == 0.0:
            raise DomainError("hyp3f2 denominator parameter hit a nonpositive integer")
        term *= (a + t) * (b + t) * (c + t) * z / denom
        total += term
        if term == 0.0:
            return total
        if abs(term) < _HYP3F2_TOL * abs(total):
            nxt = abs((a + t + 1) * (b + t + 1) * (c + t + 1) * z / ((d + t + 1) * (e + t + 1) * (t + 2.0)))
            if nxt < 1.0:
                return total
    raise ConvergenceError("hyp3f2 series exhausted its term budget")


def binary_kl(q, p):
    """KL divergence between Bernoulli(q) and Bernoulli(p).

    Uses the 0 * log 0 = 0 convention; returns +inf when p is at a
    boundary that q disagrees with.
    """
    q = float(q)
    p = float(p)
    if not 0.0 <= q <= 1.0 or not 0.0 <= p <= 1.0:
        raise DomainError("binary_kl requires q, p in [0, 1]")
    total = 0.0
    if q > 0.0:
        if p == 0.0:
            return math.inf
        total += q * math.log(q / p)
    if q < 1.0:
        if p == 1.0:
            return math.inf
        total += (1.0 - q) * math.log((1.0 - q) / (1.0 - p))
    return max(total, 0.0)


def kl_inverse(q, eps):
    """Largest p in [q, 1] with binary_kl(q, p) <= eps, found by bisection.

    Always returns a value whose divergence from q is certified <= eps;
    for eps = 0 (or q = 1) this is q itself.
    """
    q = float(q)
    eps = float(eps)
    if not 0.0 <= q <= 1.0:
        raise DomainError("kl_inverse requires q in [0, 1]")
    if eps < 0.0:
        raise DomainError("kl_inverse requires eps >= 0")
    if eps == 0.0 or q == 1.0:
        return q
    lo, hi = q, 1.0
    for _ in range(KL_INV_MAX_ITER):
        if hi - lo < KL_INV_TOL:
            break
        mid = 0.5 * (lo + hi)
        if binary_kl(q, mid) <= eps:
            lo = mid
        else:
            hi = mid
    return lo


def kl_inverse_grad(q, eps):
    """Implicit-function derivatives of kl_inverse.

    With p* = kl_inverse(q, eps): dp*/deps = 1 / kl_p and
    dp*/dq = -kl_q / kl_p, where kl_p and kl_q are partials of
    binary_kl at (q, p*). Requires 0 < q < p* < 1.
    """
    q = float(q)
    p = kl_inverse(q, eps)
    if not 0.0 < q < 1.0 or p <= q or p >= 1.0:
        raise DegenerateGradientError(
            f"kl_inverse gradient undefined at q={q}, p*={p}"
        )
    kl_p = (1.0 - q) / (1.0 - p) - q / p
    kl_q = math.log(q / p) - math.log((1.0 - q) / (1.0 - p))
    return -kl_q / kl_p, 1.0 / kl_p


def kl_inverse_grad_at(q, p):
    """Same derivatives as kl_inverse_grad but at a precomputed p.

    Training loops clamp p away from 1 before differentiating; the value
    itself is never clamped.
    """
    kl_p = (1.0 - q) / (1.0 - p) - q / p
    kl_q = math.log(q / p) - math.log((1.0 - q) / (1.0 - p))
    return -kl_q / kl_p, 1.0 / kl_p
