"""Risks of weight-randomized and deterministic majority votes.

The randomized vote draws a weighting from a Dirichlet distribution; its
expected 0-1 loss on one example is the Beta CDF at one half of the
aggregated correct/wrong concentration masses, which makes the empirical
risk a differentiable function of the concentrations. A tempered-sigmoid
Monte-Carlo estimate provides the relaxed training path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .dirichlet import as_concentration
from .errors import DimensionError, DomainError
from .specfun import reg_inc_beta, reg_inc_beta_grad
from .voters import ErrorMatrix


@dataclass(frozen=True)
class RiskValue:
    """A risk in [0, 1] with an optional gradient over the parameters."""

    value: float
    gradient: np.ndarray | None = None

    def __post_init__(self):
        if not -1e-12 <= self.value <= 1.0 + 1e-12:
            raise DomainError(f"risk {self.value} outside [0, 1]")
        object.__setattr__(self, "value", float(min(max(self.value, 0.0), 1.0)))


def exact_expected_loss(params, wrong_set, correct_set) -> float:
    """Expected 0-1 loss of the randomized vote on a single example.

    ``wrong_set`` and ``correct_set`` must partition the voter indices.
    Equals the Beta CDF at 1/2 with parameters (correct mass, wrong mass);
    empty sets use the point-mass boundary extension (all correct -> 0,
    all wrong -> 1).
    """
    alpha = as_concentration(params)
    wrong = np.asarray(sorted(wrong_set), dtype=np.int64)
    correct = np.asarray(sorted(correct_set), dtype=np.int64)
    if np.intersect1d(wrong, correct).size:
        raise DomainError("wrong and correct index sets overlap")
    merged = np.union1d(wrong, correct)
    if merged.size != alpha.size or (merged.size and (merged[0] != 0 or merged[-1] != alpha.size - 1)):
        raise DomainError("wrong and correct sets must partition the voter indices")
    wrong_mass = float(alpha[wrong].sum())
    correct_mass = float(alpha[correct].sum())
    return float(reg_inc_beta(0.5, correct_mass, wrong_mass))


def _masses(alpha: np.ndarray, rows: np.ndarray):
    wrong_mass = rows @ alpha
    correct_mass = alpha.sum() - wrong_mass
    # guard against rounding below zero for all-wrong rows
    return np.maximum(correct_mass, 0.0), np.maximum(wrong_mass, 0.0)


def exact_empirical_risk(params, errs: ErrorMatrix, with_grad: bool = False) -> RiskValue:
    """Mean over examples of the exact per-example expected loss.

    Examples sharing an error pattern are collapsed, so cost scales with
    the number of distinct patterns. The gradient chains the Beta CDF
    parameter derivatives onto each concentration.
    """
    alpha = as_concentration(params)
    if errs.n_examples == 0:
        raise DomainError("empty error matrix")
    if errs.n_voters != alpha.size:
        raise DimensionError("error matrix and concentration dimensions differ")
    rows, counts = errs.unique_rows()
    c_mass, w_mass = _masses(alpha, rows)
    losses = np.atleast_1d(reg_inc_beta(0.5, c_mass, w_mass))
    n = float(errs.n_examples)
    value = float((counts * losses).sum() / n)
    if not with_grad:
        return RiskValue(value)
    grad = np.zeros_like(alpha)
    interior = (w_mass > 0.0) & (c_mass > 0.0)
    if interior.any():
        d_c, d_w = reg_inc_beta_grad(c_mass[interior], w_mass[interior])
        wc = counts[interior] * np.atleast_1d(d_c)
        ww = counts[interior] * np.atleast_1d(d_w)
        sub = rows[interior]
        grad = (ww @ sub + wc @ (~sub)) / n
    return RiskValue(value, grad)


def _gamma_pathwise_draws(alpha: np.ndarray, uniforms: np.ndarray, with_grad: bool):
    """Map fixed uniforms through the Gamma quantile function.

    Returns the draws and, when requested, d(draw)/d(shape) obtained by
    implicit differentiation of the regularized lower incomplete gamma:
    dg/da = -(dF/da) / pdf(g), with dF/da from central differences.
    """
    g = _sp.gammaincinv(alpha, uniforms)
    if not with_grad:
        return g, None
    h = np.minimum(1e-4 * np.maximum(1.0, alpha), 0.49 * alpha)
    df_da = (_sp.gammainc(alpha + h, g) - _sp.gammainc(alpha - h, g)) / (2.0 * h)
    g_safe = np.maximum(g, 1e-300)
    log_pdf = (alpha - 1.0) * np.log(g_safe) - g_safe - _sp.gammaln(alpha)
    dg_da = -df_da / np.exp(log_pdf)
    return g, dg_da


def mc_relaxed_risk(
    params,
    errs: ErrorMatrix,
    draws: int,
    slope: float,
    rng: np.random.Generator,
    with_grad: bool = False,
) -> RiskValue:
    """Tempered-sigmoid Monte-Carlo estimate of the empirical risk.

    Averages sigmoid(slope * (W - 1/2)) over ``draws`` sampled weightings
    and all examples, where W is the total weight on erring voters. The
    weightings come from fixed uniforms pushed through the Gamma quantile
    function, so the estimate is a smooth function of the concentrations
    and the pathwise gradient matches common-random-number finite
    differences.
    """
    alpha = as_concentration(params)
    if draws < 1:
        raise DomainError("draws must be >= 1")
    if slope <= 0:
        raise DomainError("slope must be positive")
    if errs.n_voters != alpha.size:
        raise DimensionError("error matrix and concentration dimensions differ")
    E = errs.matrix.astype(float)
    n = float(errs.n_examples)
    uniforms = np.clip(rng.random((draws, alpha.size)), 1e-12, 1.0 - 1e-12)
    g, dg_da = _gamma_pathwise_draws(alpha, uniforms, with_grad)
    totals = g.sum(axis=1, keepdims=True)
    theta = g / totals
    W = theta @ E.T  # draws x n
    s = _sp.expit(slope * (W - 0.5))
    value = float(s.mean())
    if not with_grad:
        return RiskValue(value)
    sprime = slope * s * (1.0 - s)
    per_voter = (sprime @ E) / n  # draws x M: mean_i s'_i err_ij
    common = (sprime * W).sum(axis=1, keepdims=True) / n  # draws x 1
    grad = ((per_voter - common) * dg_da / totals).mean(axis=0)
    return RiskValue(value, grad)


def vote_error_weight(theta, errs: ErrorMatrix) -> np.ndarray:
    """Per-example total weight assigned to erring voters."""
    theta = np.asarray(theta, dtype=float)
    if errs.n_voters != theta.size:
        raise DimensionError("error matrix and weight dimensions differ")
    return errs.matrix @ theta


def deterministic_mv_risk(theta, errs: ErrorMatrix) -> float:
    """Fraction of examples where the erring weight reaches 1/2.

    Ties count as errors, so in the multi-class case this upper-bounds
    the 0-1 error of the deterministic weighted vote.
    """
    return float((vote_error_weight(theta, errs) >= 0.5).mean())


def expected_mv_certificate(params, errs: ErrorMatrix):
    """Risk of the mean-weight vote and its factor-two randomized proxy.

    Returns (deterministic risk at the mean weighting, twice the exact
    randomized risk); the first never exceeds the second because any row
    with erring mass >= correct mass has per-example expected loss >= 1/2.
    """
    alpha = as_concentration(params)
    det = deterministic_mv_risk(alpha / alpha.sum(), errs)
    proxy = 2.0 * exact_empirical_risk(alpha, errs).value
    if det > proxy + 1e-9:
        raise DomainError(
            f"factor-two proxy violated: deterministic {det} > proxy {proxy}"
        )
    return det, min(proxy, 2.0)
