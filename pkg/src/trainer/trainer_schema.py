from typing import List, Optional

from pandas import DataFrame
from pydantic import BaseModel, Field, field_validator


class PolicyError(Exception):
    """Custom exception for malformed policy inputs or checkpoints."""

    pass


class TrainingDivergenceError(Exception):
    """Raised when policy logits blow up during training."""

    pass


class TrainerHyperparams(BaseModel):
    learning_rate: float = Field(default=3e-3, gt=0)
    entropy_coef: float = Field(default=0.01, ge=0)
    discount: float = Field(default=0.99, ge=0, le=1)
    hidden_sizes: List[int] = [64, 64]
    baseline_decay: float = Field(default=0.9, ge=0, lt=1)
    curve_interval: int = Field(default=200, ge=1)
    logit_limit: float = Field(default=1e4, gt=0)
    adam_beta1: float = Field(default=0.9, ge=0, lt=1)
    adam_beta2: float = Field(default=0.999, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    seed: int = Field(default=0, ge=0)

    @field_validator("hidden_sizes")
    @classmethod
    def _positive_layers(cls, value: List[int]) -> List[int]:
        if not value or any(size < 1 for size in value):
            raise ValueError("hidden_sizes needs at least one positive layer size")
        return value


class CurveRecord(BaseModel):
    step: int
    mean_return: float
    mean_winrate_error: Optional[float]
    entropy: float


class TrainingCurve(BaseModel):
    records: List[CurveRecord] = []

    def append(self, record: CurveRecord) -> None:
        if self.records and record.step <= self.records[-1].step:
            raise ValueError(
                f"curve steps must increase, got {record.step} after {self.records[-1].step}"
            )
        self.records.append(record)

    def to_frame(self) -> DataFrame:
        """Curve as a DataFrame with columns step, mean_return, mean_winrate_error, entropy."""
        return DataFrame(
            [record.model_dump() for record in self.records],
            columns=["step", "mean_return", "mean_winrate_error", "entropy"],
        )
