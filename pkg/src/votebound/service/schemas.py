"""Pydantic request/response models for the HTTP service.

These mirror the runner's configuration dataclasses; validation of value
ranges happens in the dataclasses themselves so the CLI's local dispatch
and the HTTP path share one set of rules.
"""

from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field


class DatasetSpecModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: str = "two_moons"
    n: int = 1000
    noise_std: float = 0.05
    input_noise_var: float = 0.0
    path: str | None = None
    label_col: int = -1
    has_header: bool = False
    test_fraction: float = 0.2
    test_n: int = 1000


class VoterSpecModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    kind: str = "stumps"
    thresholds_per_feature: int = 10
    n_trees: int = 100
    max_depth: int | None = None


class OptimizerModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    regime: str = "batch-gd"
    learning_rate: float = 0.1
    iterations: int = 1000
    epochs: int = 100
    batch_size: int = 1024
    beta1: float = 0.9
    beta2: float = 0.999
    scheduler_factor: float = 0.1
    scheduler_patience: int = 2
    early_stop_patience: int = 25


class RunConfigModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    dataset: DatasetSpecModel = Field(default_factory=DatasetSpecModel)
    voters: VoterSpecModel = Field(default_factory=VoterSpecModel)
    method: str = "exact"
    bound: str = "uninformed"
    prior_concentration: float = 1.0
    delta: float = 0.05
    mc_draws: int = 10
    sigmoid_slope: float = 100.0
    binomial_draws: int = 100
    optimizer: OptimizerModel = Field(default_factory=OptimizerModel)
    seed: int = 0
    output_dir: str | None = None


class TrainResponse(BaseModel):
    artifact_dir: str
    report: dict


class CertifyRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    run_dir: str


class CertifyResponse(BaseModel):
    verified: bool
    certificate: float
    drift: float


class CompareRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    run_dirs: list[str]
    output_csv: str | None = None


class CompareResponse(BaseModel):
    rows: list[dict]


class SweepRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    base: RunConfigModel = Field(default_factory=RunConfigModel)
    axis: str
    grid: list[float]
    seeds: list[int]
    methods: list[str] | None = None
    max_workers: int = 1
    output_csv: str | None = None


class SweepResponse(BaseModel):
    rows: list[dict]


class HealthResponse(BaseModel):
    status: str
    version: str
