"""Pydantic request/response models for the scoring service.

Field defaults are the engine defaults; the CLI forwards its flags into these
models verbatim, so the service is the single place where parameters are
validated.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

DEFAULT_LAMBDA_V = 0.05
DEFAULT_LAMBDA_T = 0.1
DEFAULT_LR = 0.0001
DEFAULT_BATCH = 256
DEFAULT_PATIENCE = 1500
DEFAULT_TAU = 0.01
DEFAULT_W = 2.0
DEFAULT_VIDEO_W = 1.0
DEFAULT_DRAWS = 5
DEFAULT_REFS_PER_DRAW = 5


class HealthResponse(BaseModel):
    status: str
    version: str


class InspectRequest(BaseModel):
    path: str


class InspectResponse(BaseModel):
    path: str
    role: str
    dim: int
    count: int
    total_rows: int
    metadata: dict
    ids_preview: list[str]


class TrainRequest(BaseModel):
    tuples: str
    features_visual: str
    features_text: str
    out: str
    val_split: float = Field(default=0.1, gt=0.0, lt=1.0)
    lambda_v: float = Field(default=DEFAULT_LAMBDA_V, ge=0.0)
    lambda_t: float = Field(default=DEFAULT_LAMBDA_T, ge=0.0)
    lr: float = Field(default=DEFAULT_LR, gt=0.0)
    batch: int = Field(default=DEFAULT_BATCH, ge=1)
    patience: int = Field(default=DEFAULT_PATIENCE, ge=1)
    max_iters: int = Field(default=100_000, ge=1)
    val_every: int = Field(default=100, ge=1)
    tau: float = Field(default=DEFAULT_TAU, gt=0.0)
    seed: int = Field(default=0, ge=0)
    joint_dim: int | None = Field(default=None, ge=1)
    init_checkpoint: str | None = None


class TrainResponse(BaseModel):
    checkpoint: str
    iterations: int
    best_iteration: int
    best_val_loss: float
    initial_val_loss: float
    stop_reason: str
    seed: int


class ScoreRequest(BaseModel):
    manifest: str
    features_visual: str
    features_text: str
    checkpoint: str | None = None
    refs: str | None = None          # reference-pool manifest; enables the ref variant
    use_record_refs: bool = False    # ref variant from per-record refs
    w: float = Field(default=DEFAULT_W, gt=0.0)
    out: str | None = None


class ScoreVideoRequest(BaseModel):
    manifest: str
    frames: str
    tokens: str
    features_text: str
    checkpoint: str | None = None
    refs: str | None = None
    use_record_refs: bool = False
    video_w: float = Field(default=DEFAULT_VIDEO_W, gt=0.0)
    out: str | None = None


class ScoreRecord(BaseModel):
    id: str
    score: float


class ScoreResponse(BaseModel):
    mode: str
    variant: str
    n: int
    mean: float | None
    stddev: float | None
    records: list[ScoreRecord]
    report_text: str
    out: str | None


class CorrRequest(BaseModel):
    scores: str
    judgments: str
    stat: str = "kendall-b"


class CorrResponse(BaseModel):
    stat: str
    value: float
    n: int
    report_text: str


class PairwiseRequest(BaseModel):
    pairs: str
    features_visual: str
    features_text: str
    checkpoint: str | None = None
    refs: str | None = None           # reference pool; absent = reference-free
    draws: int = Field(default=DEFAULT_DRAWS, ge=1)
    refs_per_draw: int = Field(default=DEFAULT_REFS_PER_DRAW, ge=1)
    seed: int = Field(default=0, ge=0)
    w: float = Field(default=DEFAULT_W, gt=0.0)


class PairwiseResponse(BaseModel):
    per_category: dict[str, float]
    mean: float
    draws: int
    refs_per_draw: int
    seed: int
    n_pairs: int
    report_text: str


class FoilRequest(BaseModel):
    pairs: str
    features_visual: str
    features_text: str
    checkpoint: str | None = None
    refs: str | None = None           # reference pool; enables RefPAC-style scoring
    w: float = Field(default=DEFAULT_W, gt=0.0)


class FoilResponse(BaseModel):
    accuracy: float
    n_pairs: int
    variant: str
    report_text: str


class TuneTask(BaseModel):
    judgments: str
    stat: str = "kendall-c"


class TuneRequest(BaseModel):
    tuples: str
    features_visual: str
    features_text: str
    grid: list[tuple[float, float]]
    tasks: list[TuneTask]
    val_split: float = Field(default=0.1, gt=0.0, lt=1.0)
    lr: float = Field(default=DEFAULT_LR, gt=0.0)
    batch: int = Field(default=DEFAULT_BATCH, ge=1)
    patience: int = Field(default=DEFAULT_PATIENCE, ge=1)
    max_iters: int = Field(default=100_000, ge=1)
    val_every: int = Field(default=100, ge=1)
    tau: float = Field(default=DEFAULT_TAU, gt=0.0)
    seed: int = Field(default=0, ge=0)
    joint_dim: int | None = Field(default=None, ge=1)
    w: float = Field(default=DEFAULT_W, gt=0.0)
    out: str | None = None            # checkpoint trained at the winning point


class TunePointResult(BaseModel):
    lambda_v: float
    lambda_t: float
    mean_correlation: float
    per_task: list[float]


class TuneResponse(BaseModel):
    best_lambda_v: float
    best_lambda_t: float
    results: list[TunePointResult]
    out: str | None
