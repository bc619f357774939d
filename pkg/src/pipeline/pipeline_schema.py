from typing import List, Optional
from enum import Enum

from pydantic import BaseModel, Field, field_validator, model_validator

from src.pipeline.llm_backend import BackendCall
from src.reward_dsl.catalog import RewardConstraints
from src.reward_dsl.evaluator import ModuleEvalReport


class PipelineMode(str, Enum):
    IO = "io"
    COT = "cot"


class PipelineConfig(BaseModel):
    """
    Inputs of one reward-design run.

    In io mode the alignment loop is skipped, so n_align is forced to 0.
    """

    env_description: str
    constraints: RewardConstraints
    n_align: int = Field(default=5, ge=0)
    m_rows: int = Field(default=20, ge=1)
    mode: PipelineMode = PipelineMode.COT
    retry_limit: int = Field(default=3, ge=0)
    log_dataset_path: Optional[str] = None
    rng_seed: int = Field(default=0, ge=0)
    insight_max_chars: int = Field(default=600, ge=20)
    max_insights: int = Field(default=8, ge=1)
    output_dir: Optional[str] = None
    prompt_version: str = "v1"

    @model_validator(mode="after")
    def _io_skips_alignment(self) -> "PipelineConfig":
        if self.mode == PipelineMode.IO:
            self.n_align = 0
        return self


class InsightSet(BaseModel):
    insights: List[str] = Field(min_length=1)

    def numbered(self) -> str:
        return "\n".join(f"{index}. {text}" for index, text in enumerate(self.insights, start=1))


class AlignmentIteration(BaseModel):
    program_source: str
    eval_report: ModuleEvalReport
    feedback: str

    @field_validator("feedback")
    @classmethod
    def _nonempty_feedback(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("feedback must be a nonempty text")
        return value


class ProgramRecord(BaseModel):
    """Serialized reward program: canonical source plus module summary."""

    name: str
    source: str
    modules: List[str]
    weights: List[float]


class PipelineTranscript(BaseModel):
    """Audit trail of one run; also written when a run fails part way."""

    mode: PipelineMode
    prompt_version: str = "v1"
    status: str = "running"
    error: Optional[str] = None
    insights: List[str] = []
    initial_program: Optional[ProgramRecord] = None
    iterations: List[AlignmentIteration] = []
    final_program: Optional[ProgramRecord] = None
    final_eval_report: Optional[ModuleEvalReport] = None
    alignment_row_seeds: List[int] = []
    backend_call_log: List[BackendCall] = []
