"""Comparison objectives over categorical voter distributions.

Three trainable certificates (first-order, second-order/tandem, and the
N-draw binomial) plus a Chebyshev-Cantelli-style bound evaluated for
reporting only. All risks reduce to polynomials of the per-example erring
weight W, so enumeration oracles can verify them exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .dirichlet import as_simplex
from .errors import DimensionError, DomainError, NumericError
from .risk import vote_error_weight
from .bounds import _invert_with_grad, seeger_epsilon
from .voters import ErrorMatrix


def kl_categorical(theta, prior) -> float:
    """KL divergence between two categorical distributions (0 ln 0 = 0)."""
    t = as_simplex(theta)
    p = as_simplex(prior)
    if t.size != p.size:
        raise DimensionError("posterior and prior dimensions differ")
    if np.any((p == 0.0) & (t > 0.0)):
        raise DomainError("posterior puts mass where the prior has none")
    active = t > 0.0
    return float((t[active] * np.log(t[active] / p[active])).sum())


def _kl_categorical_grad(theta, prior) -> np.ndarray:
    safe = np.maximum(theta, 1e-300)
    return np.log(safe / prior) + 1.0


def gibbs_risk(theta, errs: ErrorMatrix, with_grad: bool = False):
    """Expected error of one voter drawn from the categorical posterior."""
    W = vote_error_weight(theta, errs)
    value = float(W.mean())
    if not with_grad:
        return value, None
    return value, errs.matrix.mean(axis=0)


def tandem_risk(theta, errs: ErrorMatrix, with_grad: bool = False):
    """Probability that two independent draws both err on the same example."""
    W = vote_error_weight(theta, errs)
    value = float((W**2).mean())
    if not with_grad:
        return value, None
    grad = 2.0 * (W @ errs.matrix) / errs.n_examples
    return value, grad


def binomial_loss(W, N: int):
    """Probability that at least N/2 of N posterior draws err, given the
    per-draw error probability W. Summed in log space; N must be even."""
    if N < 2 or N % 2:
        raise DomainError("N must be an even positive integer")
    W_arr = np.atleast_1d(np.asarray(W, dtype=float))
    if np.any((W_arr < 0.0) | (W_arr > 1.0)):
        raise DomainError("W must lie in [0, 1]")
    k = np.arange(N // 2, N + 1)
    log_binom = _sp.gammaln(N + 1) - _sp.gammaln(k + 1) - _sp.gammaln(N - k + 1)
    out = np.zeros_like(W_arr)
    interior = (W_arr > 0.0) & (W_arr < 1.0)
    if interior.any():
        Wi = W_arr[interior, None]
        logs = log_binom + k * np.log(Wi) + (N - k) * np.log1p(-Wi)
        out[interior] = np.exp(_sp.logsumexp(logs, axis=1))
    out[W_arr == 1.0] = 1.0
    np.clip(out, 0.0, 1.0, out=out)
    return float(out[0]) if np.isscalar(W) or np.ndim(W) == 0 else out


def _binomial_loss_dW(W: np.ndarray, N: int) -> np.ndarray:
    # d/dW P(Bin(N, W) >= N/2) = N * C(N-1, N/2-1) * W^(N/2-1) * (1-W)^(N/2)
    j = N // 2
    out = np.zeros_like(W)
    interior = (W > 0.0) & (W < 1.0)
    if interior.any():
        log_c = _sp.gammaln(N) - _sp.gammaln(j) - _sp.gammaln(N - j + 1)
        logs = math.log(N) + log_c + (j - 1) * np.log(W[interior]) + (N - j) * np.log1p(-W[interior])
        out[interior] = np.exp(logs)
    return out


def binomial_risk(theta, errs: ErrorMatrix, N: int, with_grad: bool = False):
    """Mean over examples of the N-draw binomial loss."""
    W = vote_error_weight(theta, errs)
    value = float(np.mean(binomial_loss(W, N)))
    if not with_grad:
        return value, None
    grad = (_binomial_loss_dW(W, N) @ errs.matrix) / errs.n_examples
    return value, grad


@dataclass(frozen=True)
class BaselineObjective:
    """Trainable certificate with gradient over the simplex weights."""

    value: float
    gradient: np.ndarray
    certificate: float
    empirical_risk: float
    kl_term: float


def _assemble(risk_fn, factor, kl_multiplier, theta, prior, errs, n, delta):
    theta = as_simplex(theta)
    prior_arr = np.full(theta.size, 1.0 / theta.size) if prior is None else as_simplex(prior)
    value, risk_grad = risk_fn(theta)
    kl = kl_categorical(theta, prior_arr)
    eps = seeger_epsilon(kl_multiplier * kl, n, delta)
    inverted, dq, deps = _invert_with_grad(value, eps)
    # training keeps the smooth factored value; a value past 1 is vacuous
    # and reports clip it there
    objective = factor * inverted
    grad = factor * (dq * risk_grad + (deps * kl_multiplier / n) * _kl_categorical_grad(theta, prior_arr))
    return BaselineObjective(objective, grad, min(objective, 1.0), value, kl)


def first_order_objective(theta, errs: ErrorMatrix, n: int, delta: float, prior=None) -> BaselineObjective:
    """Twice the Seeger bound on the single-draw (Gibbs) risk."""
    return _assemble(
        lambda t: gibbs_risk(t, errs, with_grad=True), 2.0, 1.0, theta, prior, errs, n, delta
    )


def second_order_objective(theta, errs: ErrorMatrix, n: int, delta: float, prior=None) -> BaselineObjective:
    """Four times the Seeger bound on the tandem risk, with a doubled KL."""
    return _assemble(
        lambda t: tandem_risk(t, errs, with_grad=True), 4.0, 2.0, theta, prior, errs, n, delta
    )


def binomial_objective(theta, errs: ErrorMatrix, N: int, n: int, delta: float, prior=None) -> BaselineObjective:
    """Twice the Seeger bound on the N-draw binomial risk, KL scaled by N."""
    return _assemble(
        lambda t: binomial_risk(t, errs, N, with_grad=True), 2.0, float(N), theta, prior, errs, n, delta
    )


def c_bound_value(theta, errs: ErrorMatrix) -> float:
    """Second-moment bound (R2 - sum_j theta_j r_j^2) / (R2 - R1 + 1/4).

    The numerator subtracts the posterior-weighted squared individual
    voter risks. Evaluation only; the denominator vanishing (erring
    weight identically 1/2) raises.
    """
    theta = as_simplex(theta)
    r1, _ = gibbs_risk(theta, errs)
    r2, _ = tandem_risk(theta, errs)
    voter_risks = errs.matrix.mean(axis=0)
    denom = r2 - r1 + 0.25
    if denom <= 1e-12:
        raise NumericError("degenerate denominator in the second-moment bound")
    return float((r2 - theta @ voter_risks**2) / denom)


def uniform_prior(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


def informed_baseline_certificate(
    kind: str,
    theta_first,
    theta_second,
    errs_second_on_first: ErrorMatrix,
    errs_first_on_second: ErrorMatrix,
    n: int,
    m: int,
    p: float,
    delta: float,
    N: int = 100,
    prior_first=None,
    prior_second=None,
):
    """Two-posterior certificate for a baseline objective.

    Mirrors the informed Seeger certificate: cross-evaluated empirical
    risks are mixed with weight p, each KL term keeps its objective's
    multiplier, and the oracle factor (2 or 4) scales the inverted bound.
    """
    from .bounds import informed_log_factor

    risk_fn = {
        "fo": lambda t, e: gibbs_risk(t, e, with_grad=True),
        "so": lambda t, e: tandem_risk(t, e, with_grad=True),
        "bin": lambda t, e: binomial_risk(t, e, N, with_grad=True),
    }[kind]
    factor = {"fo": 2.0, "so": 4.0, "bin": 2.0}[kind]
    multiplier = {"fo": 1.0, "so": 2.0, "bin": float(N)}[kind]

    t1 = as_simplex(theta_first)
    t2 = as_simplex(theta_second)
    p1 = uniform_prior(t1.size) if prior_first is None else as_simplex(prior_first)
    p2 = uniform_prior(t2.size) if prior_second is None else as_simplex(prior_second)
    r2v, r2g = risk_fn(t2, errs_second_on_first)
    r1v, r1g = risk_fn(t1, errs_first_on_second)
    kl1 = kl_categorical(t1, p1)
    kl2 = kl_categorical(t2, p2)
    q = p * r2v + (1.0 - p) * r1v
    eps = (
        p * multiplier * kl2 / m
        + (1.0 - p) * multiplier * kl1 / (n - m)
        + informed_log_factor(m, n, delta)
    )
    cert, dq, deps = _invert_with_grad(q, eps)
    g1 = factor * (dq * (1.0 - p) * r1g + deps * (1.0 - p) * multiplier / (n - m) * _kl_categorical_grad(t1, p1))
    g2 = factor * (dq * p * r2g + deps * p * multiplier / m * _kl_categorical_grad(t2, p2))
    return factor * cert, g1, g2, q, kl1, kl2
