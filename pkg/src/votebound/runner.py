"""Experiment driver: train, certify, compare, and sweep runs.

Every run is fully determined by its configuration and seed. Training
writes four artifacts into the output directory: voters.json (the base
classifier set), posterior.json (learned parameters plus prior),
trace.csv (per-step statistics), and report.json (the certificate with
all inputs echoed plus test metrics).
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import baselines, bounds, data as data_mod, dirichlet, objectives, voters as voters_mod
from .errors import ConfigError, VoteBoundError
from .optimizer import OptimizerConfig, init_posterior, minimize
from .risk import deterministic_mv_risk, exact_empirical_risk

METHODS = ("exact", "mc", "fo", "so", "bin")
DIRICHLET_METHODS = ("exact", "mc")


@dataclass(frozen=True)
class DatasetSpec:
    kind: str = "two_moons"  # two_moons | two_gaussians | csv | libsvm
    n: int = 1000
    noise_std: float = 0.05  # two_moons arc noise (standard deviation)
    input_noise_var: float = 0.0  # extra N(0, var) on features, both splits
    path: str | None = None
    label_col: int = -1
    has_header: bool = False
    test_fraction: float = 0.2
    test_n: int = 1000  # synthetic test draw size

    def validate(self):
        if self.kind not in ("two_moons", "two_gaussians", "csv", "libsvm"):
            raise ConfigError(f"unknown kind {self.kind!r}", field="dataset.kind")
        if self.kind in ("two_moons", "two_gaussians") and self.n < 2:
            raise ConfigError("n must be >= 2", field="dataset.n")
        if self.kind in ("csv", "libsvm"):
            if not self.path:
                raise ConfigError("path required for file datasets", field="dataset.path")
            if not Path(self.path).exists():
                raise ConfigError(f"file not found: {self.path}", field="dataset.path")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be >= 0", field="dataset.noise_std")
        if self.input_noise_var < 0:
            raise ConfigError("input_noise_var must be >= 0", field="dataset.input_noise_var")


@dataclass(frozen=True)
class VoterSpec:
    kind: str = "stumps"  # stumps | forest
    thresholds_per_feature: int = 10
    n_trees: int = 100
    max_depth: int | None = None

    def validate(self):
        if self.kind not in ("stumps", "forest"):
            raise ConfigError(f"unknown kind {self.kind!r}", field="voters.kind")
        if self.kind == "stumps" and self.thresholds_per_feature < 1:
            raise ConfigError("thresholds_per_feature must be >= 1", field="voters.thresholds_per_feature")
        if self.kind == "forest" and self.n_trees < 1:
            raise ConfigError("n_trees must be >= 1", field="voters.n_trees")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError("max_depth must be >= 1", field="voters.max_depth")


@dataclass(frozen=True)
class RunConfig:
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    voters: VoterSpec = field(default_factory=VoterSpec)
    method: str = "exact"
    bound: str = "uninformed"  # uninformed | informed
    prior_concentration: float = 1.0
    delta: float = 0.05
    mc_draws: int = 10
    sigmoid_slope: float = 100.0
    binomial_draws: int = 100
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    seed: int = 0
    output_dir: str | None = None

    def validate(self):
        self.dataset.validate()
        self.voters.validate()
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}", field="method")
        if self.bound not in ("uninformed", "informed"):
            raise ConfigError(f"unknown bound family {self.bound!r}", field="bound")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)", field="delta")
        if self.prior_concentration <= 0:
            raise ConfigError("prior concentration must be positive", field="prior_concentration")
        if self.mc_draws < 1:
            raise ConfigError("mc_draws must be >= 1", field="mc_draws")
        if self.sigmoid_slope <= 0:
            raise ConfigError("sigmoid_slope must be positive", field="sigmoid_slope")
        if self.binomial_draws < 2 or self.binomial_draws % 2:
            raise ConfigError("binomial_draws must be even and >= 2", field="binomial_draws")
        if self.bound == "informed" and self.voters.kind != "forest":
            raise ConfigError(
                "informed bounds need per-half trained voter sets (forest)", field="bound"
            )

    def to_dict(self) -> dict:
        out = asdict(self)
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "RunConfig":
        payload = dict(payload)
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown fields {sorted(unknown)}", field="config")
        try:
            if "dataset" in payload:
                payload["dataset"] = DatasetSpec(**payload["dataset"])
            if "voters" in payload:
                payload["voters"] = VoterSpec(**payload["voters"])
            if "optimizer" in payload:
                payload["optimizer"] = OptimizerConfig(**payload["optimizer"])
        except TypeError as exc:
            raise ConfigError(str(exc), field="config") from exc
        return cls(**payload)


def _streams(seed: int):
    """Named child generators derived from the run seed."""
    names = ("data", "voters", "init", "mc", "shuffle", "split")
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: np.random.default_rng(child) for name, child in zip(names, children)}


def _build_dataset(spec: DatasetSpec, rng: np.random.Generator):
    if spec.kind == "two_moons":
        train = data_mod.gen_two_moons(spec.n, spec.noise_std, rng)
        test = data_mod.gen_two_moons(spec.test_n, spec.noise_std, rng)
    elif spec.kind == "two_gaussians":
        train = data_mod.gen_two_gaussians(spec.n, rng)
        test = data_mod.gen_two_gaussians(spec.test_n, rng)
    else:
        full = data_mod.load_tabular(
            spec.path, spec.kind,
            **({"label_col": spec.label_col, "has_header": spec.has_header} if spec.kind == "csv" else {}),
        )
        train, test = data_mod.split_dataset(full, spec.test_fraction, rng)
        stats = data_mod.fit_train_stats(train)
        train = data_mod.preprocess(train, stats)
        test = data_mod.preprocess(test, stats)
    if spec.input_noise_var > 0:
        train = data_mod.add_input_noise(train, spec.input_noise_var, rng)
        test = data_mod.add_input_noise(test, spec.input_noise_var, rng)
    return train, test


def _build_voters(spec: VoterSpec, train, rng: np.random.Generator):
    if spec.kind == "stumps":
        ranges = list(zip(train.features.min(axis=0), train.features.max(axis=0)))
        return voters_mod.build_stump_grid(ranges, spec.thresholds_per_feature)
    return voters_mod.train_bagged_forest(train, spec.n_trees, spec.max_depth, rng)


def _posterior_entropy(weights: np.ndarray) -> float:
    w = weights[weights > 0]
    return float(-(w * np.log(w)).sum())


@dataclass
class RunResult:
    config: RunConfig
    report: dict
    trace: object
    posterior: dict
    voters_json: str


def _train_uninformed(config: RunConfig, streams, train, test):
    voter_list = _build_voters(config.voters, train, streams["voters"])
    m_voters = len(voter_list)
    errs_train = voters_mod.error_matrix(voter_list, train)
    errs_test = voters_mod.error_matrix(voter_list, test)
    n = train.n
    delta = config.delta

    if config.method in DIRICHLET_METHODS:
        prior = np.full(m_voters, config.prior_concentration)
        objective = objectives.make_bound_objective(
            errs_train, prior, n, delta,
            mode=config.method, mc_draws=config.mc_draws,
            mc_slope=config.sigmoid_slope, rng=streams["mc"],
        )
        u0 = init_posterior(m_voters, streams["init"], kind="dirichlet")
        u_final, trace = minimize(objective, u0, config.optimizer, rng=streams["shuffle"], n_examples=n)
        alpha = np.exp(u_final)
        risk = exact_empirical_risk(alpha, errs_train).value
        kl = dirichlet.kl_divergence(alpha, prior)
        certificate = bounds.seeger_bound(risk, kl, n, delta)
        mean_weights = dirichlet.mean(alpha)
        test_preds = voters_mod.predictions_tensor(voter_list, test.features)
        test_error = float(
            (voters_mod.deterministic_mv_predict(mean_weights, test_preds, test.class_count) != test.labels).mean()
        )
        report = bounds.BoundReport(
            objective_name=config.method,
            empirical_risk=risk,
            kl_term=kl,
            n=n,
            delta=delta,
            certificate=certificate,
            seed=config.seed,
            extras={
                "bound": "uninformed",
                "n_voters": m_voters,
                "test_error": test_error,
                "test_stochastic_risk": exact_empirical_risk(alpha, errs_test).value,
                "test_surrogate_risk": deterministic_mv_risk(mean_weights, errs_test),
                "posterior_entropy": _posterior_entropy(mean_weights),
                "voter_strength": 1.0 - float(errs_test.matrix.mean()),
            },
        )
        posterior = {
            "family": "dirichlet",
            "alpha": alpha.tolist(),
            "prior_concentration": config.prior_concentration,
        }
        return RunResult(config, report.to_dict(), trace, posterior, voters_mod.voters_to_json(voter_list))

    prior = baselines.uniform_prior(m_voters)
    objective = objectives.make_baseline_objective(
        config.method, errs_train, n, delta, prior=prior, binomial_draws=config.binomial_draws
    )
    u0 = init_posterior(m_voters, streams["init"], kind="categorical")
    u_final, trace = minimize(objective, u0, config.optimizer, rng=streams["shuffle"], n_examples=n)
    theta = objectives.softmax(u_final)
    builder = {
        "fo": lambda: baselines.first_order_objective(theta, errs_train, n, delta, prior),
        "so": lambda: baselines.second_order_objective(theta, errs_train, n, delta, prior),
        "bin": lambda: baselines.binomial_objective(theta, errs_train, config.binomial_draws, n, delta, prior),
    }[config.method]
    final = builder()
    test_preds = voters_mod.predictions_tensor(voter_list, test.features)
    test_error = float(
        (voters_mod.deterministic_mv_predict(theta, test_preds, test.class_count) != test.labels).mean()
    )
    report = bounds.BoundReport(
        objective_name=config.method,
        empirical_risk=final.empirical_risk,
        kl_term=final.kl_term,
        n=n,
        delta=delta,
        certificate=final.certificate,
        seed=config.seed,
        extras={
            "bound": "uninformed",
            "n_voters": m_voters,
            "objective_value": final.value,
            "test_error": test_error,
            "test_surrogate_risk": deterministic_mv_risk(theta, errs_test),
            "posterior_entropy": _posterior_entropy(theta),
            "voter_strength": 1.0 - float(errs_test.matrix.mean()),
        },
    )
    posterior = {"family": "categorical", "theta": theta.tolist()}
    return RunResult(config, report.to_dict(), trace, posterior, voters_mod.voters_to_json(voter_list))


def _train_informed(config: RunConfig, streams, train, test):
    n = train.n
    first_idx, second_idx = voters_mod.informed_split_indices(n, streams["split"])
    m = first_idx.size
    p = m / n
    delta = config.delta
    first = replace(train, features=train.features[first_idx], labels=train.labels[first_idx], split="train-first")
    second = replace(train, features=train.features[second_idx], labels=train.labels[second_idx], split="train-second")
    voters_first = _build_voters(config.voters, first, streams["voters"])
    voters_second = _build_voters(config.voters, second, streams["voters"])
    m1, m2 = len(voters_first), len(voters_second)
    # cross evaluation: each posterior is scored on the half its voters never saw
    errs_second_on_first = voters_mod.error_matrix(voters_second, first)
    errs_first_on_second = voters_mod.error_matrix(voters_first, second)
    errs_first_test = voters_mod.error_matrix(voters_first, test)
    errs_second_test = voters_mod.error_matrix(voters_second, test)

    dirichlet_family = config.method in DIRICHLET_METHODS
    if dirichlet_family:
        prior_first = np.full(m1, config.prior_concentration)
        prior_second = np.full(m2, config.prior_concentration)
        kind = "dirichlet"
    else:
        prior_first = baselines.uniform_prior(m1)
        prior_second = baselines.uniform_prior(m2)
        kind = "categorical"
    objective = objectives.make_informed_objective(
        config.method, errs_second_on_first, errs_first_on_second,
        prior_first, prior_second, n, m, p, delta,
        mc_draws=config.mc_draws, mc_slope=config.sigmoid_slope,
        binomial_draws=config.binomial_draws, rng=streams["mc"],
    )
    u0 = np.concatenate(
        [init_posterior(m1, streams["init"], kind=kind), init_posterior(m2, streams["init"], kind=kind)]
    )
    u_final, trace = minimize(objective, u0, config.optimizer, rng=streams["shuffle"], n_examples=n)

    if dirichlet_family:
        a1, a2 = np.exp(u_final[:m1]), np.exp(u_final[m1:])
        r2v = exact_empirical_risk(a2, errs_second_on_first).value
        r1v = exact_empirical_risk(a1, errs_first_on_second).value
        kl1 = dirichlet.kl_divergence(a1, prior_first)
        kl2 = dirichlet.kl_divergence(a2, prior_second)
        certificate = bounds.informed_seeger_bound(r2v, r1v, kl2, kl1, n, m, p, delta)
        w1, w2 = dirichlet.mean(a1), dirichlet.mean(a2)
        test_stoch = p * exact_empirical_risk(a2, errs_second_test).value + (1 - p) * exact_empirical_risk(a1, errs_first_test).value
        posterior = {
            "family": "dirichlet",
            "alpha_first": a1.tolist(),
            "alpha_second": a2.tolist(),
            "prior_concentration": config.prior_concentration,
        }
        factor = 1.0
    else:
        w1 = objectives.softmax(u_final[:m1])
        w2 = objectives.softmax(u_final[m1:])
        risk_fn = {
            "fo": lambda t, e: baselines.gibbs_risk(t, e)[0],
            "so": lambda t, e: baselines.tandem_risk(t, e)[0],
            "bin": lambda t, e: baselines.binomial_risk(t, e, config.binomial_draws)[0],
        }[config.method]
        r2v = risk_fn(w2, errs_second_on_first)
        r1v = risk_fn(w1, errs_first_on_second)
        kl1 = baselines.kl_categorical(w1, prior_first)
        kl2 = baselines.kl_categorical(w2, prior_second)
        multiplier = {"fo": 1.0, "so": 2.0, "bin": float(config.binomial_draws)}[config.method]
        factor = {"fo": 2.0, "so": 4.0, "bin": 2.0}[config.method]
        certificate = min(
            factor
            * bounds.informed_seeger_bound(
                r2v, r1v, multiplier * kl2, multiplier * kl1, n, m, p, delta
            ),
            1.0,
        )
        test_stoch = float("nan")
        posterior = {
            "family": "categorical",
            "theta_first": w1.tolist(),
            "theta_second": w2.tolist(),
        }

    # deterministic vote over the union voter set, halves weighted (1-p, p)
    union_weights = np.concatenate([(1 - p) * w1, p * w2])
    preds = np.column_stack(
        [
            voters_mod.predictions_tensor(voters_first, test.features),
            voters_mod.predictions_tensor(voters_second, test.features),
        ]
    )
    test_error = float(
        (voters_mod.deterministic_mv_predict(union_weights, preds, test.class_count) != test.labels).mean()
    )
    mixture_risk = p * r2v + (1 - p) * r1v
    report = bounds.BoundReport(
        objective_name=config.method,
        empirical_risk=mixture_risk,
        kl_term=p * kl2 + (1 - p) * kl1,
        n=n,
        delta=delta,
        certificate=certificate,
        m=m,
        seed=config.seed,
        extras={
            "bound": "informed",
            "mixture_weight_p": p,
            "n_voters": m1 + m2,
            "kl_first": kl1,
            "kl_second": kl2,
            "cross_risk_second_posterior_on_first_half": r2v,
            "cross_risk_first_posterior_on_second_half": r1v,
            "test_error": test_error,
            "test_stochastic_risk": test_stoch,
            "posterior_entropy": _posterior_entropy(union_weights),
            "voter_strength": 1.0
            - float(np.hstack([errs_first_test.matrix, errs_second_test.matrix]).mean()),
            "split_provenance": {
                "m": int(m),
                "first_half_indices_train_voters": "first",
                "first_half_size": int(first_idx.size),
                "second_half_size": int(second_idx.size),
                "note": "each posterior is evaluated on the half not used to train its voters",
            },
        },
    )
    all_voters = list(voters_first) + list(voters_second)
    return RunResult(config, report.to_dict(), trace, posterior, voters_mod.voters_to_json(all_voters))


def execute_run(config: RunConfig) -> RunResult:
    """Train a posterior per the configuration; no files are written."""
    config.validate()
    streams = _streams(config.seed)
    train, test = _build_dataset(config.dataset, streams["data"])
    if config.bound == "informed":
        return _train_informed(config, streams, train, test)
    return _train_uninformed(config, streams, train, test)


def run_train(config: RunConfig) -> Path:
    """Execute a run and write its artifact directory; returns the path."""
    if not config.output_dir:
        raise ConfigError("output_dir required", field="output_dir")
    result = execute_run(config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "voters.json").write_text(result.voters_json)
    (out / "posterior.json").write_text(json.dumps(result.posterior, sort_keys=True))
    result.trace.write_csv(out / "trace.csv")
    payload = {"config": config.to_dict(), "report": result.report}
    (out / "report.json").write_text(json.dumps(payload, sort_keys=True))
    return out


def run_certify(run_dir) -> dict:
    """Recompute the certificate of a finished run from its artifacts.

    Re-executes the stored configuration (same seed) and compares the
    fresh report against the stored one; a mismatch beyond 1e-9 on the
    certificate raises.
    """
    run_dir = Path(run_dir)
    report_path = run_dir / "report.json"
    if not report_path.exists():
        raise ConfigError(f"missing report.json under {run_dir}", field="run_dir")
    stored = json.loads(report_path.read_text())
    config = RunConfig.from_dict(stored["config"])
    fresh = execute_run(config)
    drift = abs(fresh.report["certificate"] - stored["report"]["certificate"])
    if drift > 1e-9:
        raise VoteBoundError(
            f"certificate drift {drift} between stored and recomputed reports"
        )
    return {"verified": True, "certificate": fresh.report["certificate"], "drift": drift}


def run_compare(run_dirs) -> list[dict]:
    """Aggregate finished runs into per-method mean/std rows."""
    if len(run_dirs) < 2:
        raise ConfigError("compare needs at least two runs", field="runs")
    groups: dict = {}
    for rd in run_dirs:
        path = Path(rd) / "report.json"
        if not path.exists():
            raise ConfigError(f"missing run artifact: {path}", field="runs")
        payload = json.loads(path.read_text())
        key = (payload["report"]["objective_name"], payload["config"]["dataset"]["kind"])
        groups.setdefault(key, []).append(payload["report"])
    rows = []
    for (method, dataset), reports in sorted(groups.items()):
        errors = np.array([r["test_error"] for r in reports])
        certs = np.array([r["certificate"] for r in reports])
        rows.append(
            {
                "method": method,
                "dataset": dataset,
                "n_runs": len(reports),
                "test_error_mean": float(errors.mean()),
                "test_error_std": float(errors.std()),
                "certificate_mean": float(certs.mean()),
                "certificate_std": float(certs.std()),
            }
        )
    return rows


_SWEEP_AXES = ("n", "M", "depth", "sigma2", "beta")


def _apply_axis(config: RunConfig, axis: str, value) -> RunConfig:
    if axis == "n":
        return replace(config, dataset=replace(config.dataset, n=int(value)))
    if axis == "M":
        m = int(value)
        if config.voters.kind == "stumps":
            d = 2  # synthetic generators are two-dimensional
            per = m // (2 * d)
            if per < 1 or per * 2 * d != m:
                raise ConfigError(f"M={m} is not 2*d*k for d={d}", field="sweep.grid")
            return replace(config, voters=replace(config.voters, thresholds_per_feature=per))
        return replace(config, voters=replace(config.voters, n_trees=m))
    if axis == "depth":
        return replace(config, voters=replace(config.voters, max_depth=int(value)))
    if axis == "sigma2":
        return replace(config, dataset=replace(config.dataset, input_noise_var=float(value)))
    if axis == "beta":
        return replace(config, prior_concentration=float(value))
    raise ConfigError(f"unknown sweep axis {axis!r}", field="sweep.axis")


def run_sweep(base: RunConfig, axis: str, grid, seeds, methods=None, max_workers: int = 1) -> list[dict]:
    """One training run per (grid value, seed, method); returns sorted rows.

    Worker tasks are independent; each derives its seed from the base
    seed so results do not depend on scheduling order.
    """
    if axis not in _SWEEP_AXES:
        raise ConfigError(f"axis must be one of {_SWEEP_AXES}", field="sweep.axis")
    grid = list(grid)
    if not grid:
        raise ConfigError("sweep grid is empty", field="sweep.grid")
    methods = list(methods) if methods else [base.method]
    tasks = []
    for value in grid:
        for seed in seeds:
            for method in methods:
                cfg = _apply_axis(base, axis, value)
                cfg = replace(cfg, method=method, seed=int(seed), output_dir=None)
                tasks.append((value, int(seed), method, cfg))

    def work(task):
        value, seed, method, cfg = task
        start = time.monotonic()
        result = execute_run(cfg)
        elapsed = time.monotonic() - start
        rep = result.report
        return {
            "axis": axis,
            "value": value,
            "seed": seed,
            "method": method,
            "test_error": rep["test_error"],
            "certificate": rep["certificate"],
            "voter_strength": rep["voter_strength"],
            "posterior_entropy": rep["posterior_entropy"],
            "kl_term": rep["kl_term"],
            "wall_time_s": elapsed,
        }

    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(work, tasks))
    else:
        rows = [work(t) for t in tasks]
    rows.sort(key=lambda r: (str(r["value"]), r["seed"], r["method"]))
    return rows


_SWEEP_COLUMNS = (
    "axis", "value", "seed", "method", "test_error", "certificate",
    "voter_strength", "posterior_entropy", "kl_term", "wall_time_s",
)


def write_rows_csv(rows: list[dict], path, columns=None):
    """RFC-4180 CSV with a header row."""
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c) for c in columns])
