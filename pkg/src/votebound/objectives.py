"""Training objectives over unconstrained parameters.

Concentration vectors stay positive through an exp reparameterization;
categorical weights live behind a softmax. Each builder returns a
callable ``f(params, batch_indices) -> ObjectiveEval`` suitable for the
optimizer; batch indices select example rows for minibatch training, and
the reported certificate is always recomputed on the full split at
evaluation time by the caller.
"""

from __future__ import annotations

import numpy as np

from . import baselines, bounds, dirichlet
from .optimizer import ObjectiveEval
from .risk import exact_empirical_risk, mc_relaxed_risk
from .voters import ErrorMatrix


def softmax(logits: np.ndarray) -> np.ndarray:
    e = np.exp(logits - logits.max())
    return e / e.sum()


def _sub(errs: ErrorMatrix, batch) -> ErrorMatrix:
    if batch is None:
        return errs
    return ErrorMatrix(errs.matrix[batch])


def make_bound_objective(
    errs: ErrorMatrix,
    prior,
    n: int,
    delta: float,
    mode: str = "exact",
    mc_draws: int = 10,
    mc_slope: float = 100.0,
    rng: np.random.Generator | None = None,
):
    """Seeger certificate of the Dirichlet posterior, over log-concentrations."""
    prior_alpha = dirichlet.as_concentration(prior)

    def objective(u, batch):
        alpha = np.exp(u)
        res = bounds.bound_objective(
            alpha, prior_alpha, _sub(errs, batch), n, delta,
            mode=mode, mc_draws=mc_draws, mc_slope=mc_slope, rng=rng,
        )
        return ObjectiveEval(
            res.value, res.gradient * alpha, res.empirical_risk, res.kl_term,
            float(np.linalg.norm(alpha)),
        )

    return objective


def make_risk_objective(
    errs: ErrorMatrix,
    mode: str = "exact",
    mc_draws: int = 10,
    mc_slope: float = 100.0,
    rng: np.random.Generator | None = None,
):
    """Unregularized empirical risk of the Dirichlet posterior (no KL term)."""

    def objective(u, batch):
        alpha = np.exp(u)
        sub = _sub(errs, batch)
        if mode == "exact":
            rv = exact_empirical_risk(alpha, sub, with_grad=True)
        else:
            rv = mc_relaxed_risk(alpha, sub, mc_draws, mc_slope, rng, with_grad=True)
        return ObjectiveEval(
            rv.value, rv.gradient * alpha, rv.value, 0.0, float(np.linalg.norm(alpha))
        )

    return objective


def make_baseline_objective(
    kind: str,
    errs: ErrorMatrix,
    n: int,
    delta: float,
    prior=None,
    binomial_draws: int = 100,
):
    """Categorical baseline certificate over softmax logits."""
    builders = {
        "fo": lambda t, e: baselines.first_order_objective(t, e, n, delta, prior),
        "so": lambda t, e: baselines.second_order_objective(t, e, n, delta, prior),
        "bin": lambda t, e: baselines.binomial_objective(t, e, binomial_draws, n, delta, prior),
    }
    if kind not in builders:
        raise ValueError(f"unknown baseline kind {kind!r}")
    build = builders[kind]

    def objective(logits, batch):
        theta = softmax(logits)
        res = build(theta, _sub(errs, batch))
        grad_logits = theta * (res.gradient - theta @ res.gradient)
        return ObjectiveEval(
            res.value, grad_logits, res.empirical_risk, res.kl_term,
            float(np.linalg.norm(theta)),
        )

    return objective


def make_informed_objective(
    method: str,
    errs_second_on_first: ErrorMatrix,
    errs_first_on_second: ErrorMatrix,
    prior_first,
    prior_second,
    n: int,
    m: int,
    p: float,
    delta: float,
    mc_draws: int = 10,
    mc_slope: float = 100.0,
    binomial_draws: int = 100,
    rng: np.random.Generator | None = None,
):
    """Joint two-posterior objective over concatenated parameters.

    The first ``M1`` entries parameterize the posterior whose voters came
    from the first half (evaluated on second-half data), the rest the
    other one. Minibatching is not supported here; informed runs train
    full-batch.
    """
    m1 = errs_first_on_second.n_voters

    if method in ("exact", "mc"):
        pr1 = dirichlet.as_concentration(prior_first)
        pr2 = dirichlet.as_concentration(prior_second)

        def objective(u, batch):
            a1 = np.exp(u[:m1])
            a2 = np.exp(u[m1:])
            cert, g1, g2, q, kl1, kl2 = bounds.informed_bound_objective(
                a1, a2, pr1, pr2, errs_second_on_first, errs_first_on_second,
                n, m, p, delta, mode=method, mc_draws=mc_draws, mc_slope=mc_slope, rng=rng,
            )
            grad = np.concatenate([g1 * a1, g2 * a2])
            norm = float(np.sqrt((a1**2).sum() + (a2**2).sum()))
            return ObjectiveEval(cert, grad, q, p * kl2 + (1 - p) * kl1, norm)

        return objective

    def objective(u, batch):
        t1 = softmax(u[:m1])
        t2 = softmax(u[m1:])
        cert, g1, g2, q, kl1, kl2 = baselines.informed_baseline_certificate(
            method, t1, t2, errs_second_on_first, errs_first_on_second,
            n, m, p, delta, N=binomial_draws,
            prior_first=prior_first, prior_second=prior_second,
        )
        grad = np.concatenate([t1 * (g1 - t1 @ g1), t2 * (g2 - t2 @ g2)])
        return ObjectiveEval(cert, grad, q, p * kl2 + (1 - p) * kl1, 1.0)

    return objective
