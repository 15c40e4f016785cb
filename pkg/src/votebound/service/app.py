"""FastAPI application exposing train/certify/compare/sweep.

Error mapping: configuration and data-format problems answer 422 with the
offending field path; numeric failures answer 500 with code
"numeric_failure". Train and sweep requests run synchronously and can
take minutes for large configurations.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ..errors import ConfigError, DataFormatError, NumericError, VoteBoundError
from . import handlers
from .schemas import (
    CertifyRequest,
    CertifyResponse,
    CompareRequest,
    CompareResponse,
    HealthResponse,
    RunConfigModel,
    SweepRequest,
    SweepResponse,
    TrainResponse,
)


def create_app() -> FastAPI:
    app = FastAPI(title="votebound", version="0.1.0")

    @app.exception_handler(ConfigError)
    async def _config_error(request: Request, exc: ConfigError):
        return JSONResponse(
            status_code=422,
            content={"code": "config_error", "field": exc.field, "detail": str(exc)},
        )

    @app.exception_handler(DataFormatError)
    async def _data_error(request: Request, exc: DataFormatError):
        return JSONResponse(
            status_code=422,
            content={
                "code": "config_error",
                "line_number": exc.line_number,
                "detail": str(exc),
            },
        )

    @app.exception_handler(NumericError)
    async def _numeric_error(request: Request, exc: NumericError):
        return JSONResponse(
            status_code=500, content={"code": "numeric_failure", "detail": str(exc)}
        )

    @app.exception_handler(VoteBoundError)
    async def _other_error(request: Request, exc: VoteBoundError):
        return JSONResponse(
            status_code=500, content={"code": "numeric_failure", "detail": str(exc)}
        )

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=app.version)

    @app.post("/train", response_model=TrainResponse)
    def train(request: RunConfigModel):
        return handlers.handle_train(request)

    @app.post("/certify", response_model=CertifyResponse)
    def certify(request: CertifyRequest):
        return handlers.handle_certify(request)

    @app.post("/compare", response_model=CompareResponse)
    def compare(request: CompareRequest):
        return handlers.handle_compare(request)

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(request: SweepRequest):
        return handlers.handle_sweep(request)

    return app
