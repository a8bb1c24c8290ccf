"""Pydantic request/response models for the HTTP service."""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

SCHEMA_VERSION = 1


class _Response(BaseModel):
    # Divergences can legitimately be +inf; serialize as JSON Infinity.
    model_config = ConfigDict(ser_json_inf_nan="constants")
    schema_version: int = SCHEMA_VERSION


class DivergenceRequest(BaseModel):
    p: list[float]
    q: list[float]


class DivergenceResponse(_Response):
    kl_nats: float


class BregmanRequest(BaseModel):
    generator: str = Field(description="negentropy | sqnorm | burg")
    p: list[float]
    q: list[float]


class BregmanResponse(_Response):
    generator: str
    divergence_nats: float


class ScoreRequest(BaseModel):
    rule: str = Field(description="log | brier | burg | linear | from-generator")
    generator: Optional[str] = None
    P: list[float]
    Q: list[float]
    grid_step: Optional[float] = None


class ScoreResponse(_Response):
    rule: str
    score: float
    divergence: float
    proper: bool
    grid_step: float


class SuffcheckRequest(BaseModel):
    divergence: str = Field(description="kl | sqnorm | burg | bregman:<generator>")
    dims: list[int] = [3, 4, 5]
    trials: int = 100
    seed: int = Field(ge=0)
    include_entries: bool = False


class TrialModel(BaseModel):
    model_config = ConfigDict(ser_json_inf_nan="constants")
    tag: str
    dim: int
    gap: float
    s1: list[float]
    s2: list[float]
    note: str = ""


class SuffcheckResponse(_Response):
    divergence: str
    dims: list[int]
    trials: int
    seed: int
    fail_threshold: float
    max_gap: float
    verdict: str
    worst: Optional[TrialModel]
    entries: Optional[list[TrialModel]] = None


class MarketModel(BaseModel):
    probs: list[float]
    relatives: list[list[float]] = Field(description="one row per outcome")


class SolveRequest(BaseModel):
    market: MarketModel
    tol: float = 1e-9


class SolveResponse(_Response):
    b: list[float]
    W_nats: float
    kkt_residual: float
    iterations: int
    converged: bool


class RegretRequest(BaseModel):
    market: MarketModel
    Q: list[float]
    tol: float = 1e-9


class RegretResponse(_Response):
    regret_nats: float
    bound_nats: float
    gap_nats: float
    horse_race: bool


class SimulateRequest(BaseModel):
    market: MarketModel
    b: list[float]
    n: int = Field(ge=1)
    seed: int = Field(ge=0)
    include_path: bool = False


class SimulateResponse(_Response):
    n: int
    seed: int
    terminal_rate_nats: float
    final_log_wealth_nats: float
    expected_rate_nats: float
    log_wealth_path: Optional[list[float]] = None


class ThermoRequest(BaseModel):
    levels: list[float] = Field(description="energy levels in joules")
    T_kelvin: float
    state: Optional[list[float]] = None


class ThermoResponse(_Response):
    T_kelvin: float
    gibbs: list[float]
    Ex_joules: Optional[float] = None
    identity_gap_joules: Optional[float] = None
