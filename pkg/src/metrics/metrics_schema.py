from typing import Optional

from pydantic import BaseModel, Field

from src.simulator.game_schema import TeamConfig


class MetricsError(Exception):
    """Custom exception for metric computations on unusable input."""

    pass


class ContentSample(BaseModel):
    """A generated team with the winrate measured for it."""

    team: TeamConfig
    measured_winrate: float = Field(ge=0.0, le=1.0)
    eval_seed: Optional[int] = None
    n_episodes: Optional[int] = Field(default=None, ge=1)


class EvalReport(BaseModel):
    ctr: float = Field(ge=0.0)
    ctr_sd: float = Field(ge=0.0)
    div: float = Field(ge=0.0)
    tbs: float = Field(ge=0.0, le=1.0)
    n_samples: int = Field(ge=1)
    n_valid: int = Field(ge=0)
    goal: float
    validity_threshold: float
    degenerate_diversity: bool = False
    generator: str = ""
    pe_mode: str = ""
    reward_kind: str = ""
