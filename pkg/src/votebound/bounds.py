"""PAC-Bayes risk certificates and the differentiable training objectives.

The uninformed certificate inverts the binary KL divergence between the
empirical risk and the unknown true risk at radius (KL + ln(2 sqrt(n) /
delta)) / n. The informed variant mixes two cross-evaluated posteriors,
each trained on voters built from the opposite half of the data, with
per-half KL terms and the combined log factor ln(4 sqrt(m (n - m)) /
delta) / n.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import dirichlet
from .errors import DomainError
from .risk import RiskValue, exact_empirical_risk, mc_relaxed_risk
from .specfun import kl_inverse, kl_inverse_grad_at
from .voters import ErrorMatrix

# keep the implicit-gradient denominator finite when the certificate
# saturates; the certificate value itself is never clamped
_GRAD_P_MAX = 1.0 - 1e-10
_GRAD_Q_MIN = 1e-12


@dataclass(frozen=True)
class BoundReport:
    """A risk certificate together with every input needed to audit it."""

    objective_name: str
    empirical_risk: float
    kl_term: float
    n: int
    delta: float
    certificate: float
    m: int | None = None
    seed: int | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise DomainError("delta must lie in (0, 1)")
        if self.kl_term < 0.0:
            raise DomainError("kl term must be nonnegative")
        if self.certificate < self.empirical_risk - 1e-9:
            raise DomainError("certificate below empirical risk")
        if not -1e-12 <= self.certificate <= 1.0 + 1e-12:
            raise DomainError("certificate outside [0, 1]")

    def to_dict(self) -> dict:
        out = {
            "objective_name": self.objective_name,
            "empirical_risk": self.empirical_risk,
            "kl_term": self.kl_term,
            "n": self.n,
            "delta": self.delta,
            "certificate": self.certificate,
            "m": self.m,
            "seed": self.seed,
        }
        out.update(self.extras)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def seeger_epsilon(kl: float, n: int, delta: float) -> float:
    """KL-inversion radius (KL + ln(2 sqrt(n) / delta)) / n."""
    if n < 1:
        raise DomainError("n must be positive")
    if not 0.0 < delta < 1.0:
        raise DomainError("delta must lie in (0, 1)")
    if kl < 0.0:
        raise DomainError("kl must be nonnegative")
    return (kl + math.log(2.0 * math.sqrt(n) / delta)) / n


def seeger_bound(emp_risk: float, kl: float, n: int, delta: float) -> float:
    """High-probability upper bound on the true risk of the randomized vote."""
    return kl_inverse(emp_risk, seeger_epsilon(kl, n, delta))


def informed_log_factor(m: int, n: int, delta: float) -> float:
    """Sample-size penalty ln(4 sqrt(m (n - m)) / delta) / n of the
    two-posterior certificate."""
    if not 0 < m < n:
        raise DomainError("m must satisfy 0 < m < n")
    return math.log(4.0 * math.sqrt(m * (n - m)) / delta) / n


def informed_seeger_bound(
    risk_on_first_half: float,
    risk_on_second_half: float,
    kl_second_posterior: float,
    kl_first_posterior: float,
    n: int,
    m: int | None = None,
    p: float | None = None,
    delta: float = 0.05,
) -> float:
    """Certificate on the p-mixture of two cross-evaluated posteriors.

    ``risk_on_first_half`` is the empirical risk, on the first m examples,
    of the posterior whose voters were built from the second half (and
    vice versa); the caller attests this cross-evaluation. Defaults are
    m = n // 2 and p = m / n.
    """
    if m is None:
        m = n // 2
    if p is None:
        p = m / n
    if not 0.0 < p < 1.0:
        raise DomainError("p must lie in (0, 1)")
    mixture_risk = p * risk_on_first_half + (1.0 - p) * risk_on_second_half
    eps = (
        p * kl_second_posterior / m
        + (1.0 - p) * kl_first_posterior / (n - m)
        + informed_log_factor(m, n, delta)
    )
    return kl_inverse(mixture_risk, eps)


@dataclass(frozen=True)
class ObjectiveValue:
    """Certificate value with its gradient and audit components."""

    value: float
    gradient: np.ndarray
    empirical_risk: float
    kl_term: float


def _invert_with_grad(q: float, eps: float):
    """kl inverse plus its two partials, clamped only for differentiation."""
    cert = kl_inverse(q, eps)
    q_g = min(max(q, _GRAD_Q_MIN), 1.0 - _GRAD_Q_MIN)
    p_g = min(max(cert, q_g + 1e-15), _GRAD_P_MAX)
    dq, deps = kl_inverse_grad_at(q_g, p_g)
    return cert, dq, deps


def bound_objective(
    params,
    prior,
    errs: ErrorMatrix,
    n: int,
    delta: float,
    mode: str = "exact",
    mc_draws: int = 10,
    mc_slope: float = 100.0,
    rng: np.random.Generator | None = None,
) -> ObjectiveValue:
    """Seeger certificate of a Dirichlet posterior as a function of its
    concentrations, with the full chain-rule gradient.

    ``mode`` selects the exact closed-form risk or the tempered-sigmoid
    Monte-Carlo relaxation (which needs ``rng``).
    """
    alpha = dirichlet.as_concentration(params)
    beta = dirichlet.as_concentration(prior)
    if mode == "exact":
        rv: RiskValue = exact_empirical_risk(alpha, errs, with_grad=True)
    elif mode == "mc":
        if rng is None:
            raise DomainError("mc mode requires a random generator")
        rv = mc_relaxed_risk(alpha, errs, mc_draws, mc_slope, rng, with_grad=True)
    else:
        raise DomainError(f"unknown bound mode {mode!r}")
    kl = dirichlet.kl_divergence(alpha, beta)
    kl_grad = dirichlet.kl_divergence_grad(alpha, beta)
    eps = seeger_epsilon(kl, n, delta)
    cert, dq, deps = _invert_with_grad(rv.value, eps)
    grad = dq * rv.gradient + (deps / n) * kl_grad
    return ObjectiveValue(cert, grad, rv.value, kl)


def informed_bound_objective(
    params_first,
    params_second,
    prior_first,
    prior_second,
    errs_second_on_first: ErrorMatrix,
    errs_first_on_second: ErrorMatrix,
    n: int,
    m: int | None = None,
    p: float | None = None,
    delta: float = 0.05,
    mode: str = "exact",
    mc_draws: int = 10,
    mc_slope: float = 100.0,
    rng: np.random.Generator | None = None,
):
    """Joint objective over the two informed posteriors.

    ``errs_second_on_first`` evaluates the second-half voter set on the
    first-half examples (whose posterior is ``params_second``), and
    symmetrically for the other matrix. Returns the certificate, the two
    gradients, and the audit components.
    """
    if m is None:
        m = n // 2
    if p is None:
        p = m / n
    a1 = dirichlet.as_concentration(params_first)
    a2 = dirichlet.as_concentration(params_second)

    def _risk(alpha, errs):
        if mode == "exact":
            return exact_empirical_risk(alpha, errs, with_grad=True)
        if mode == "mc":
            if rng is None:
                raise DomainError("mc mode requires a random generator")
            return mc_relaxed_risk(alpha, errs, mc_draws, mc_slope, rng, with_grad=True)
        raise DomainError(f"unknown bound mode {mode!r}")

    rv2 = _risk(a2, errs_second_on_first)
    rv1 = _risk(a1, errs_first_on_second)
    kl1 = dirichlet.kl_divergence(a1, prior_first)
    kl2 = dirichlet.kl_divergence(a2, prior_second)
    q = p * rv2.value + (1.0 - p) * rv1.value
    eps = p * kl2 / m + (1.0 - p) * kl1 / (n - m) + informed_log_factor(m, n, delta)
    cert, dq, deps = _invert_with_grad(q, eps)
    g1 = dq * (1.0 - p) * rv1.gradient + deps * (1.0 - p) / (n - m) * dirichlet.kl_divergence_grad(a1, prior_first)
    g2 = dq * p * rv2.gradient + deps * p / m * dirichlet.kl_divergence_grad(a2, prior_second)
    return cert, g1, g2, q, kl1, kl2
