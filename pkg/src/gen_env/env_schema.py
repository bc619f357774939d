from typing import Deque, Dict, Optional, Tuple
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.reward_dsl.ast_nodes import RewardProgram
from src.simulator.game_schema import PlaytestSummary, TeamConfig

# hybrid (w_wr, w_llm) weight presets
HYBRID_PRESETS: Dict[str, Tuple[float, float]] = {
    "default": (0.97, 0.03),
    "draft": (0.1, 0.3),
}


class GenEnvUsageError(Exception):
    """Custom exception for invalid use of the generation environment."""

    pass


class RewardKind(str, Enum):
    WINRATE = "winrate"
    LLM = "llm"
    HYBRID = "hybrid"


class EnvSettings(BaseModel):
    goal_winrate: float = Field(default=0.7, ge=0.0, le=1.0)
    horizon: int = Field(default=40, ge=1)
    n_episodes: int = Field(default=16, ge=1)
    large_step: float = Field(default=0.10, gt=0.0, le=1.0)
    small_step: float = Field(default=0.02, gt=0.0, le=1.0)
    frame_stack: int = Field(default=4, ge=1)
    seed: int = Field(default=0, ge=0)

    def step_fractions(self) -> Tuple[float, ...]:
        """Bound-width fractions of the five action categories."""
        return (-self.large_step, -self.small_step, 0.0, self.small_step, self.large_step)


class RewardSpec(BaseModel):
    """Which reward the environment pays and how a hybrid is weighted."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    kind: RewardKind = RewardKind.WINRATE
    program: Optional[RewardProgram] = None
    w_wr: float = HYBRID_PRESETS["default"][0]
    w_llm: float = HYBRID_PRESETS["default"][1]

    @model_validator(mode="after")
    def _check_spec(self) -> "RewardSpec":
        if self.kind != RewardKind.WINRATE and self.program is None:
            raise ValueError(f"{self.kind.value} reward requires a program")
        if not (math.isfinite(self.w_wr) and math.isfinite(self.w_llm)):
            raise ValueError("reward weights must be finite")
        return self

    @classmethod
    def hybrid(cls, program: RewardProgram, preset: str = "default") -> "RewardSpec":
        if preset not in HYBRID_PRESETS:
            raise ValueError(f"unknown hybrid preset {preset!r}; known: {sorted(HYBRID_PRESETS)}")
        w_wr, w_llm = HYBRID_PRESETS[preset]
        return cls(kind=RewardKind.HYBRID, program=program, w_wr=w_wr, w_llm=w_llm)


@dataclass
class GenEpisodeState:
    team: TeamConfig
    goal_winrate: float
    horizon: int
    last_summary: PlaytestSummary
    prev_distance: float
    t: int = 0
    turn: int = 0
    frames: Deque[np.ndarray] = field(default_factory=deque)

    @property
    def done(self) -> bool:
        return self.t >= self.horizon
