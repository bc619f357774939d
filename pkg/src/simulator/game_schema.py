from typing import Dict, List, Tuple
from enum import Enum
import math

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

PROPERTY_NAMES: Tuple[str, ...] = (
    "max_health",
    "armor",
    "speed",
    "cooldown",
    "cast_time",
    "range",
    "damage",
)

PLAYER_STATS: Tuple[str, ...] = (
    "survive_time",
    "moved_distance",
    "damage_dealt",
    "damage_taken",
    "attack_count",
    "time_in_range",
    "health_remaining",
    "downtime",
)

N_PLAYERS = 4
BOSS_ID = N_PLAYERS

# 8 statistics x 4 players, player-major order
CATALOG_VARIABLES: Tuple[str, ...] = tuple(
    f"{stat}_p{player}"
    for player in range(1, N_PLAYERS + 1)
    for stat in PLAYER_STATS
)


class GameConfigError(Exception):
    """Custom exception for invalid game configurations."""

    pass


class Role(str, Enum):
    PLAYER = "player"
    BOSS = "boss"


class SkillType(str, Enum):
    MELEE = "melee"
    RANGED = "ranged"


class PropertyBound(BaseModel):
    min: float
    max: float

    @model_validator(mode="after")
    def _non_degenerate(self) -> "PropertyBound":
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise ValueError("bounds must be finite")
        if self.max <= self.min:
            raise ValueError(f"max ({self.max}) must be greater than min ({self.min})")
        return self

    @property
    def width(self) -> float:
        return self.max - self.min

    def contains(self, value: float) -> bool:
        return self.min <= value <= self.max

    def clamp(self, value: float) -> float:
        return min(self.max, max(self.min, value))


class CharacterConfig(BaseModel):
    """One agent of a raid: its role, skill type and seven properties."""

    agent_id: int = Field(ge=0, le=BOSS_ID)
    role: Role
    skill_type: SkillType
    properties: Dict[str, float]

    @field_validator("properties")
    @classmethod
    def _check_properties(cls, value: Dict[str, float]) -> Dict[str, float]:
        if set(value) != set(PROPERTY_NAMES):
            missing = sorted(set(PROPERTY_NAMES) - set(value))
            extra = sorted(set(value) - set(PROPERTY_NAMES))
            raise ValueError(f"properties mismatch (missing={missing}, extra={extra})")
        for name, prop in value.items():
            if not math.isfinite(prop):
                raise ValueError(f"property {name} must be finite")
            if name == "armor":
                if not 0.0 <= prop <= 1.0:
                    raise ValueError(f"armor must lie in [0, 1], got {prop}")
            elif prop <= 0.0:
                raise ValueError(f"property {name} must be strictly positive, got {prop}")
        return {name: float(value[name]) for name in PROPERTY_NAMES}


class TeamConfig(BaseModel):
    """Four players and one boss."""

    players: List[CharacterConfig]
    boss: CharacterConfig

    @model_validator(mode="after")
    def _check_members(self) -> "TeamConfig":
        if len(self.players) != N_PLAYERS:
            raise ValueError(f"a team needs exactly {N_PLAYERS} players, got {len(self.players)}")
        for index, player in enumerate(self.players):
            if player.role != Role.PLAYER:
                raise ValueError(f"players[{index}] must have role=player")
            if player.agent_id != index:
                raise ValueError(f"players[{index}] must have agent_id={index}")
        if self.boss.role != Role.BOSS or self.boss.agent_id != BOSS_ID:
            raise ValueError(f"boss must have role=boss and agent_id={BOSS_ID}")
        return self

    def members(self) -> List[CharacterConfig]:
        return [*self.players, self.boss]


class BossTemplate(BaseModel):
    skill_type: SkillType = SkillType.RANGED
    properties: Dict[str, float]


class GameConfig(BaseModel):
    """
    Arena, playtime limit, per-role property bounds and spawn layout.

    The range bound depends on the skill type: melee and ranged characters draw
    their range from different sub-intervals, which is the only mechanical
    difference between the two.
    """

    arena_size: float = Field(default=20.0, gt=0)
    max_ticks: int = 300
    bounds: Dict[Role, Dict[str, PropertyBound]]
    range_bounds: Dict[Role, Dict[SkillType, PropertyBound]]
    player_spawns: List[Tuple[float, float]] = [(4.0, 2.0), (8.0, 2.0), (12.0, 2.0), (16.0, 2.0)]
    boss_spawn: Tuple[float, float] = (10.0, 18.0)
    spawn_jitter: float = Field(default=0.5, ge=0)
    damage_variance: float = Field(default=0.1, ge=0, lt=1)
    boss: BossTemplate
    rng_seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("max_ticks")
    @classmethod
    def _positive_ticks(cls, value: int) -> int:
        if value < 1:
            raise ValueError("max_ticks must be ≥ 1")
        return value

    @model_validator(mode="after")
    def _check_layout(self) -> "GameConfig":
        for role in Role:
            if role not in self.bounds:
                raise ValueError(f"bounds missing role {role.value}")
            expected = set(PROPERTY_NAMES) - {"range"}
            if set(self.bounds[role]) != expected:
                raise ValueError(f"bounds[{role.value}] must define exactly {sorted(expected)}")
            armor = self.bounds[role]["armor"]
            if armor.min < 0.0 or armor.max > 1.0:
                raise ValueError(f"bounds[{role.value}].armor must lie within [0, 1]")
            for name, bound in self.bounds[role].items():
                if name != "armor" and bound.min <= 0.0:
                    raise ValueError(f"bounds[{role.value}].{name}.min must be positive")
            if set(self.range_bounds.get(role, {})) != set(SkillType):
                raise ValueError(f"range_bounds[{role.value}] must define melee and ranged")
            for skill, bound in self.range_bounds[role].items():
                if bound.min <= 0.0:
                    raise ValueError(f"range_bounds[{role.value}].{skill.value}.min must be positive")
        if len(self.player_spawns) != N_PLAYERS:
            raise ValueError(f"player_spawns needs {N_PLAYERS} positions")
        CharacterConfig(
            agent_id=BOSS_ID,
            role=Role.BOSS,
            skill_type=self.boss.skill_type,
            properties=self.boss.properties,
        )
        return self

    def bound(self, role: Role, skill_type: SkillType, name: str) -> PropertyBound:
        if name == "range":
            return self.range_bounds[role][skill_type]
        return self.bounds[role][name]

    def character_bounds(self, character: CharacterConfig) -> Dict[str, PropertyBound]:
        return {
            name: self.bound(character.role, character.skill_type, name)
            for name in PROPERTY_NAMES
        }

    def boss_character(self) -> CharacterConfig:
        return CharacterConfig(
            agent_id=BOSS_ID,
            role=Role.BOSS,
            skill_type=self.boss.skill_type,
            properties=dict(self.boss.properties),
        )

    def out_of_bounds(self, character: CharacterConfig) -> List[str]:
        """
        Lists the properties of a character that fall outside their bounds.

        Args:
            character: Character to check.

        Returns:
            List[str]: Offending property names, empty when the character is valid.
        """
        bounds = self.character_bounds(character)
        return [
            name
            for name in PROPERTY_NAMES
            if not bounds[name].contains(character.properties[name])
        ]

    def normalize(self, character: CharacterConfig) -> np.ndarray:
        """
        Maps the seven properties of a character onto [0, 1] using its role bounds.

        Returns:
            np.ndarray: Seven normalized values in PROPERTY_NAMES order.
        """
        bounds = self.character_bounds(character)
        return np.array(
            [
                (character.properties[name] - bounds[name].min) / bounds[name].width
                for name in PROPERTY_NAMES
            ],
            dtype=float,
        )


def load_game_config(data: dict) -> GameConfig:
    """
    Validates a raw game configuration.

    Args:
        data: Parsed JSON object.

    Returns:
        GameConfig: Validated configuration.

    Raises:
        GameConfigError: Naming the first offending field.
    """
    try:
        return GameConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "game_config"
        raise GameConfigError(f"{field}: {first['msg']}") from e


class PlaytestRow(BaseModel):
    """One playtested episode: the 32 catalog variables plus metadata."""

    values: Dict[str, float]
    win: bool
    episode_ticks: int = Field(ge=0)
    seed: int

    @field_validator("values")
    @classmethod
    def _check_values(cls, value: Dict[str, float]) -> Dict[str, float]:
        if set(value) != set(CATALOG_VARIABLES):
            raise ValueError("values must hold exactly the 32 catalog variables")
        for name, number in value.items():
            if not math.isfinite(number) or number < 0.0:
                raise ValueError(f"{name} must be a finite value ≥ 0, got {number}")
        return {name: float(value[name]) for name in CATALOG_VARIABLES}

    @model_validator(mode="after")
    def _check_times(self) -> "PlaytestRow":
        for player in range(1, N_PLAYERS + 1):
            if self.values[f"survive_time_p{player}"] > self.episode_ticks:
                raise ValueError(f"survive_time_p{player} exceeds episode_ticks")
        return self

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def to_record(self) -> Dict[str, float | int | bool]:
        """Flat JSONL record: the 32 variables followed by win, episode_ticks, seed."""
        record: Dict[str, float | int | bool] = dict(self.values)
        record["win"] = self.win
        record["episode_ticks"] = self.episode_ticks
        record["seed"] = self.seed
        return record

    @classmethod
    def from_record(cls, record: Dict[str, float | int | bool]) -> "PlaytestRow":
        expected = set(CATALOG_VARIABLES) | {"win", "episode_ticks", "seed"}
        if set(record) != expected:
            unknown = sorted(set(record) - expected)
            missing = sorted(expected - set(record))
            raise ValueError(f"row keys mismatch (missing={missing}, unknown={unknown})")
        return cls(
            values={name: record[name] for name in CATALOG_VARIABLES},
            win=bool(record["win"]),
            episode_ticks=int(record["episode_ticks"]),
            seed=int(record["seed"]),
        )


class PlaytestSummary(BaseModel):
    winrate: float = Field(ge=0.0, le=1.0)
    n_episodes: int = Field(ge=1)
    wins: int = Field(ge=0)
    mean_row: Dict[str, float]
    base_seed: int

    @model_validator(mode="after")
    def _exact_rate(self) -> "PlaytestSummary":
        if self.wins > self.n_episodes or self.winrate != self.wins / self.n_episodes:
            raise ValueError("winrate must equal wins / n_episodes")
        return self
