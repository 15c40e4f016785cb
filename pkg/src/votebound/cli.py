"""Command-line client for the certificate service.

Each subcommand builds the same request models the HTTP API accepts and
either dispatches them in process (default) or POSTs them to a running
server given via --server. Exit codes: 0 success, 2 configuration error,
3 numeric failure.
"""

from __future__ import annotations

import json
import sys

import click
import pydantic

from .errors import ConfigError, DataFormatError, NumericError, VoteBoundError
from .service import handlers
from .service.schemas import (
    CertifyRequest,
    CompareRequest,
    RunConfigModel,
    SweepRequest,
)

EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _post(server: str, route: str, payload: dict) -> dict:
    import httpx

    response = httpx.post(f"{server.rstrip('/')}{route}", json=payload, timeout=None)
    if response.status_code == 200:
        return response.json()
    try:
        body = response.json()
    except ValueError:
        body = {"detail": response.text}
    if response.status_code == 422:
        _fail(EXIT_CONFIG, json.dumps(body))
    _fail(EXIT_NUMERIC, json.dumps(body))


def _dispatch(server: str | None, route: str, handler, request) -> dict:
    if server:
        return _post(server, route, request.model_dump())
    try:
        return handler(request).model_dump()
    except (ConfigError, DataFormatError) as exc:
        _fail(EXIT_CONFIG, str(exc))
    except NumericError as exc:
        _fail(EXIT_NUMERIC, str(exc))
    except VoteBoundError as exc:
        _fail(EXIT_NUMERIC, str(exc))


def _build_config(config_file, overrides) -> RunConfigModel:
    payload: dict = {}
    if config_file:
        with open(config_file) as fh:
            payload = json.load(fh)
    for path, value in overrides.items():
        if value is None:
            continue
        node = payload
        *parents, leaf = path.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value
    try:
        return RunConfigModel.model_validate(payload)
    except pydantic.ValidationError as exc:
        _fail(EXIT_CONFIG, str(exc))


@click.group()
def main():
    """Train weighted majority votes with PAC-Bayes risk certificates."""


_run_options = [
    click.option("--config", "config_file", type=click.Path(exists=True), default=None,
                 help="JSON run configuration; flags below override its fields."),
    click.option("--dataset", "dataset_kind", type=str, default=None,
                 help="two_moons | two_gaussians | csv | libsvm"),
    click.option("--data-path", type=str, default=None, help="file for csv/libsvm datasets"),
    click.option("--label-col", type=int, default=None),
    click.option("--has-header", is_flag=True, default=None),
    click.option("--n", type=int, default=None, help="training sample size (synthetic)"),
    click.option("--noise-std", type=float, default=None),
    click.option("--input-noise-var", type=float, default=None),
    click.option("--voters", "voter_kind", type=str, default=None, help="stumps | forest"),
    click.option("--thresholds-per-feature", type=int, default=None),
    click.option("--n-trees", type=int, default=None),
    click.option("--max-depth", type=int, default=None),
    click.option("--method", type=str, default=None, help="exact | mc | fo | so | bin"),
    click.option("--bound", type=str, default=None, help="uninformed | informed"),
    click.option("--prior-beta", type=float, default=None, help="prior concentration"),
    click.option("--delta", type=float, default=None),
    click.option("--mc-draws", type=int, default=None),
    click.option("--sigmoid-slope", type=float, default=None),
    click.option("--binomial-draws", type=int, default=None),
    click.option("--regime", type=str, default=None, help="batch-gd | adaptive-sgd"),
    click.option("--learning-rate", type=float, default=None),
    click.option("--iterations", type=int, default=None),
    click.option("--epochs", type=int, default=None),
    click.option("--batch-size", type=int, default=None),
    click.option("--seed", type=int, default=None),
]


def _with_run_options(fn):
    for opt in reversed(_run_options):
        fn = opt(fn)
    return fn


def _overrides_from_flags(kw) -> dict:
    return {
        "dataset.kind": kw["dataset_kind"],
        "dataset.path": kw["data_path"],
        "dataset.label_col": kw["label_col"],
        "dataset.has_header": kw["has_header"],
        "dataset.n": kw["n"],
        "dataset.noise_std": kw["noise_std"],
        "dataset.input_noise_var": kw["input_noise_var"],
        "voters.kind": kw["voter_kind"],
        "voters.thresholds_per_feature": kw["thresholds_per_feature"],
        "voters.n_trees": kw["n_trees"],
        "voters.max_depth": kw["max_depth"],
        "method": kw["method"],
        "bound": kw["bound"],
        "prior_concentration": kw["prior_beta"],
        "delta": kw["delta"],
        "mc_draws": kw["mc_draws"],
        "sigmoid_slope": kw["sigmoid_slope"],
        "binomial_draws": kw["binomial_draws"],
        "optimizer.regime": kw["regime"],
        "optimizer.learning_rate": kw["learning_rate"],
        "optimizer.iterations": kw["iterations"],
        "optimizer.epochs": kw["epochs"],
        "optimizer.batch_size": kw["batch_size"],
        "seed": kw["seed"],
    }


@main.command()
@_with_run_options
@click.option("--out", required=True, type=str, help="artifact directory for this run")
@click.option("--server", type=str, default=None, help="service URL; omit to run in process")
def train(out, server, config_file, **kw):
    """Train a posterior and write voters/posterior/trace/report artifacts."""
    overrides = _overrides_from_flags(kw)
    overrides["output_dir"] = out
    request = _build_config(config_file, overrides)
    result = _dispatch(server, "/train", handlers.handle_train, request)
    click.echo(json.dumps(result["report"], sort_keys=True, indent=2))


@main.command()
@click.argument("run_dir", type=str)
@click.option("--server", type=str, default=None)
def certify(run_dir, server):
    """Recompute a finished run's certificate and verify it matches."""
    request = CertifyRequest(run_dir=run_dir)
    result = _dispatch(server, "/certify", handlers.handle_certify, request)
    click.echo(json.dumps(result, sort_keys=True, indent=2))


@main.command()
@click.argument("run_dirs", nargs=-1, required=True)
@click.option("--out", type=str, default=None, help="write the comparison table as CSV")
@click.option("--server", type=str, default=None)
def compare(run_dirs, out, server):
    """Aggregate runs into a per-method mean/std table."""
    request = CompareRequest(run_dirs=list(run_dirs), output_csv=out)
    result = _dispatch(server, "/compare", handlers.handle_compare, request)
    click.echo(json.dumps(result["rows"], sort_keys=True, indent=2))


@main.command()
@_with_run_options
@click.option("--axis", required=True, type=str, help="n | M | depth | sigma2 | beta")
@click.option("--grid", required=True, type=str, help="comma-separated grid values")
@click.option("--seeds", type=str, default="0", help="comma-separated seeds")
@click.option("--methods", type=str, default=None, help="comma-separated methods")
@click.option("--out", type=str, default=None, help="write the long-format CSV here")
@click.option("--max-workers", type=int, default=1)
@click.option("--server", type=str, default=None)
def sweep(axis, grid, seeds, methods, out, max_workers, server, config_file, **kw):
    """Run a grid of training jobs and emit one row per (value, seed, method)."""
    base = _build_config(config_file, _overrides_from_flags(kw))
    try:
        grid_vals = [float(v) for v in grid.split(",") if v != ""]
        seed_vals = [int(s) for s in seeds.split(",") if s != ""]
    except ValueError as exc:
        _fail(EXIT_CONFIG, f"bad grid or seeds: {exc}")
    request = SweepRequest(
        base=base, axis=axis, grid=grid_vals, seeds=seed_vals,
        methods=methods.split(",") if methods else None,
        max_workers=max_workers, output_csv=out,
    )
    result = _dispatch(server, "/sweep", handlers.handle_sweep, request)
    click.echo(json.dumps(result["rows"], sort_keys=True, indent=2))


@main.command()
@click.option("--host", type=str, default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
