"""Request handlers shared by the HTTP routes and the CLI's local mode."""

from __future__ import annotations

import json

from .. import runner
from ..runner import RunConfig
from .schemas import (
    CertifyRequest,
    CertifyResponse,
    CompareRequest,
    CompareResponse,
    SweepRequest,
    SweepResponse,
    TrainResponse,
    RunConfigModel,
)


def config_from_model(model: RunConfigModel) -> RunConfig:
    return RunConfig.from_dict(model.model_dump())


def handle_train(request: RunConfigModel) -> TrainResponse:
    config = config_from_model(request)
    out = runner.run_train(config)
    report = json.loads((out / "report.json").read_text())["report"]
    return TrainResponse(artifact_dir=str(out), report=report)


def handle_certify(request: CertifyRequest) -> CertifyResponse:
    return CertifyResponse(**runner.run_certify(request.run_dir))


def handle_compare(request: CompareRequest) -> CompareResponse:
    rows = runner.run_compare(request.run_dirs)
    if request.output_csv:
        runner.write_rows_csv(rows, request.output_csv)
    return CompareResponse(rows=rows)


def handle_sweep(request: SweepRequest) -> SweepResponse:
    base = config_from_model(request.base)
    rows = runner.run_sweep(
        base, request.axis, request.grid, request.seeds,
        methods=request.methods, max_workers=request.max_workers,
    )
    if request.output_csv:
        runner.write_rows_csv(rows, request.output_csv)
    return SweepResponse(rows=rows)
