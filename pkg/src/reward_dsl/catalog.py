from typing import Dict, List, Mapping, Optional, Tuple
import keyword
import re

from pydantic import BaseModel, model_validator

from src.reward_dsl.lexer import KEYWORDS
from src.simulator.game_schema import (
    CATALOG_VARIABLES,
    N_PLAYERS,
    GameConfig,
    PlaytestRow,
    Role,
)

_IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

_STAT_DESCRIPTIONS = {
    "survive_time": "ticks player {p} stayed alive",
    "moved_distance": "distance units player {p} walked",
    "damage_dealt": "hit points of damage player {p} dealt to the boss",
    "damage_taken": "hit points of damage player {p} took from the boss",
    "attack_count": "number of hits player {p} landed on the boss",
    "time_in_range": "ticks the boss was within player {p}'s attack range",
    "health_remaining": "hit points player {p} had left at the end (0 if dead)",
    "downtime": "ticks player {p} spent casting or on cooldown",
}


class CatalogEntry(BaseModel):
    name: str
    description: str
    low: float = 0.0
    high: Optional[float] = None

    def range_text(self) -> str:
        high = "unbounded" if self.high is None else f"{self.high:g}"
        return f"[{self.low:g}, {high}]"


class CatalogConstant(BaseModel):
    name: str
    description: str
    value: float


class VariableCatalog(BaseModel):
    """Names a reward program may reference: playtest variables and constants."""

    variables: List[CatalogEntry]
    constants: List[CatalogConstant] = []

    @model_validator(mode="after")
    def _unique_identifiers(self) -> "VariableCatalog":
        seen = set()
        for name in [entry.name for entry in self.variables] + [c.name for c in self.constants]:
            if not _IDENTIFIER.match(name) or name in KEYWORDS or keyword.iskeyword(name):
                raise ValueError(f"catalog name {name!r} is not a valid identifier")
            if name in seen:
                raise ValueError(f"catalog name {name!r} is declared twice")
            seen.add(name)
        return self

    def names(self) -> Tuple[str, ...]:
        return tuple(entry.name for entry in self.variables) + tuple(
            constant.name for constant in self.constants
        )

    def variable_names(self) -> Tuple[str, ...]:
        return tuple(entry.name for entry in self.variables)

    def bind(self, row: PlaytestRow | Mapping[str, float]) -> Dict[str, float]:
        """
        Builds evaluation bindings from a row: its variables plus the constants.

        Args:
            row: A PlaytestRow or a mapping of variable name to value.

        Returns:
            Dict[str, float]: Name to value for every catalog name present.
        """
        values = row.values if isinstance(row, PlaytestRow) else row
        bindings = {name: float(values[name]) for name in self.variable_names() if name in values}
        for constant in self.constants:
            bindings[constant.name] = constant.value
        return bindings

    @classmethod
    def from_game_config(cls, game: GameConfig) -> "VariableCatalog":
        """
        Builds the 32-variable playtest catalog with value ranges taken from the game.

        Args:
            game: Game configuration.

        Returns:
            VariableCatalog: Variables in catalog order plus constants
            max_episode_time, n_players and boss_max_health.
        """
        player_bounds = game.bounds[Role.PLAYER]
        max_speed = player_bounds["speed"].max
        max_health = player_bounds["max_health"].max
        highs = {
            "survive_time": float(game.max_ticks),
            "moved_distance": game.max_ticks * max_speed,
            "damage_dealt": None,
            "damage_taken": None,
            "attack_count": None,
            "time_in_range": float(game.max_ticks),
            "health_remaining": max_health,
            "downtime": float(game.max_ticks),
        }
        entries = []
        for name in CATALOG_VARIABLES:
            stat, player = name.rsplit("_p", 1)
            entries.append(
                CatalogEntry(
                    name=name,
                    description=_STAT_DESCRIPTIONS[stat].format(p=player),
                    high=highs[stat],
                )
            )
        constants = [
            CatalogConstant(
                name="max_episode_time",
                description="playtime limit of an episode in ticks",
                value=float(game.max_ticks),
            ),
            CatalogConstant(
                name="n_players", description="number of players in a team", value=float(N_PLAYERS)
            ),
            CatalogConstant(
                name="boss_max_health",
                description="maximum health of the boss",
                value=game.boss.properties["max_health"],
            ),
        ]
        return cls(variables=entries, constants=constants)

    def describe(self) -> str:
        """Catalog listing used in prompts: one line per name."""
        lines = [f"- {e.name}: {e.description}, range {e.range_text()}" for e in self.variables]
        lines.extend(f"- {c.name} (constant = {c.value:g}): {c.description}" for c in self.constants)
        return "\n".join(lines)


class RewardConstraints(BaseModel):
    output_range: Tuple[float, float]
    catalog: VariableCatalog

    @model_validator(mode="after")
    def _ordered_range(self) -> "RewardConstraints":
        low, high = self.output_range
        if not low < high:
            raise ValueError(f"output_range lower bound must be below upper bound, got {self.output_range}")
        return self
