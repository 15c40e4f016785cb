"""Gradient-based minimization over unconstrained parameters.

Two regimes: plain full-batch gradient descent with a fixed step budget,
and minibatch descent with first/second-moment adaptive steps, a
reduce-on-plateau learning-rate scheduler, and early stopping on the best
training objective. The objective callable owns any reparameterization
(exp for concentrations, softmax for simplex weights) and reports audit
quantities alongside value and gradient.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NonFiniteObjectiveError


@dataclass(frozen=True)
class OptimizerConfig:
    regime: str = "batch-gd"  # or "adaptive-sgd"
    learning_rate: float = 0.1
    iterations: int = 1000  # batch-gd budget
    epochs: int = 100  # adaptive-sgd budget
    batch_size: int = 1024
    beta1: float = 0.9
    beta2: float = 0.999
    scheduler_factor: float = 0.1
    scheduler_patience: int = 2
    early_stop_patience: int = 25  # 0 disables; applies per trace row

    def __post_init__(self):
        if self.regime not in ("batch-gd", "adaptive-sgd"):
            raise ConfigError(f"unknown regime {self.regime!r}", field="optimizer.regime")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive", field="optimizer.learning_rate")
        for name in ("iterations", "epochs", "batch_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1", field=f"optimizer.{name}")
        if self.scheduler_patience < 0 or self.early_stop_patience < 0:
            raise ConfigError("patience must be >= 0", field="optimizer")


@dataclass(frozen=True)
class ObjectiveEval:
    """One evaluation of a training objective."""

    value: float
    gradient: np.ndarray
    risk: float = float("nan")
    kl: float = float("nan")
    param_norm: float = float("nan")


@dataclass
class TrainingTrace:
    """Per-step (or per-epoch) training statistics."""

    columns = ("step", "objective", "risk", "kl", "grad_norm", "alpha_norm")
    rows: list = field(default_factory=list)

    def append(self, step, objective, risk, kl, grad_norm, alpha_norm):
        self.rows.append((int(step), float(objective), float(risk), float(kl), float(grad_norm), float(alpha_norm)))

    @property
    def objectives(self):
        return [r[1] for r in self.rows]

    @property
    def alpha_norms(self):
        return [r[5] for r in self.rows]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            writer.writerows(self.rows)


def _check_finite(ev: ObjectiveEval, step: int, params: np.ndarray):
    if not np.isfinite(ev.value) or not np.all(np.isfinite(ev.gradient)):
        raise NonFiniteObjectiveError(
            f"non-finite objective or gradient at step {step}", step=step, params=params.copy()
        )


def minimize(objective, init, config: OptimizerConfig, rng=None, n_examples=None):
    """Minimize ``objective(params, batch_indices)`` from ``init``.

    Returns (parameters, trace). In the adaptive-sgd regime ``rng``
    reshuffles batches each epoch and ``n_examples`` sets the index range;
    the returned parameters are the best-objective checkpoint whenever
    early stopping is active, the final iterate otherwise.
    """
    params = np.asarray(init, dtype=float).copy()
    trace = TrainingTrace()
    if config.regime == "batch-gd":
        return _minimize_batch(objective, params, config, trace)
    if n_examples is None:
        raise ConfigError("adaptive-sgd needs n_examples", field="optimizer")
    if rng is None:
        rng = np.random.default_rng()
    return _minimize_sgd(objective, params, config, trace, rng, int(n_examples))


def _minimize_batch(objective, params, config, trace):
    best_value = np.inf
    best_params = params.copy()
    since_best = 0
    for step in range(config.iterations):
        ev = objective(params, None)
        _check_finite(ev, step, params)
        trace.append(step, ev.value, ev.risk, ev.kl, np.linalg.norm(ev.gradient), ev.param_norm)
        if ev.value < best_value:
            best_value = ev.value
            best_params = params.copy()
            since_best = 0
        else:
            since_best += 1
        if config.early_stop_patience and since_best >= config.early_stop_patience:
            return best_params, trace
        params = params - config.learning_rate * ev.gradient
    if config.early_stop_patience:
        return best_params, trace
    return params, trace


def _minimize_sgd(objective, params, config, trace, rng, n_examples):
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    lr = config.learning_rate
    t = 0
    best_value = np.inf
    best_params = params.copy()
    since_best = 0
    since_sched = 0
    for epoch in range(config.epochs):
        order = rng.permutation(n_examples)
        batch_values = []
        grad_norms = []
        last_ev = None
        for start in range(0, n_examples, config.batch_size):
            batch = order[start : start + config.batch_size]
            ev = objective(params, batch)
            _check_finite(ev, t, params)
            t += 1
            m = config.beta1 * m + (1.0 - config.beta1) * ev.gradient
            v = config.beta2 * v + (1.0 - config.beta2) * ev.gradient**2
            m_hat = m / (1.0 - config.beta1**t)
            v_hat = v / (1.0 - config.beta2**t)
            params = params - lr * m_hat / (np.sqrt(v_hat) + 1e-8)
            batch_values.append(ev.value)
            grad_norms.append(np.linalg.norm(ev.gradient))
            last_ev = ev
        epoch_value = float(np.mean(batch_values))
        trace.append(epoch, epoch_value, last_ev.risk, last_ev.kl, float(np.mean(grad_norms)), last_ev.param_norm)
        if epoch_value < best_value:
            best_value = epoch_value
            best_params = params.copy()
            since_best = 0
            since_sched = 0
        else:
            since_best += 1
            since_sched += 1
        if config.scheduler_patience and since_sched >= config.scheduler_patience:
            lr *= config.scheduler_factor
            since_sched = 0
        if config.early_stop_patience and since_best >= config.early_stop_patience:
            break
    return best_params, trace


def init_posterior(n_voters: int, rng: np.random.Generator, kind: str = "dirichlet") -> np.ndarray:
    """Unconstrained initial parameters from component draws U(0.01, 2).

    Dirichlet posteriors exponentiate their parameters, so the raw draw is
    returned in log space; categorical posteriors use the log of the
    normalized draw (softmax recovers the simplex point).
    """
    if n_voters < 2:
        raise ConfigError("need at least two voters", field="voters")
    raw = rng.uniform(0.01, 2.0, n_voters)
    if kind == "dirichlet":
        return np.log(raw)
    if kind == "categorical":
        return np.log(raw / raw.sum())
    raise ConfigError(f"unknown posterior kind {kind!r}", field="method")
