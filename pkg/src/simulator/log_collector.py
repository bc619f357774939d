from typing import List, Optional
from pathlib import Path
from logging import getLogger

import numpy as np
from pandas import DataFrame
from pydantic import BaseModel, Field

from src.simulator.engine import Simulator, SimulatorError
from src.simulator.game_schema import (
    BOSS_ID,
    CATALOG_VARIABLES,
    N_PLAYERS,
    PROPERTY_NAMES,
    CharacterConfig,
    GameConfig,
    PlaytestRow,
    Role,
    SkillType,
    TeamConfig,
)
from src.utils.artifact_manager import ArtifactError, ArtifactManager
from src.utils.seeding import derive_seed

logger = getLogger(__name__)

SKILL_TYPES = (SkillType.MELEE, SkillType.RANGED)


class LogSamplingConfig(BaseModel):
    master_seed: int = Field(default=0, ge=0)
    randomize_boss: bool = False


def sample_character(
    game: GameConfig, rng: np.random.Generator, agent_id: int, role: Role
) -> CharacterConfig:
    skill_type = SKILL_TYPES[int(rng.integers(0, len(SKILL_TYPES)))]
    properties = {}
    for name in PROPERTY_NAMES:
        bound = game.bound(role, skill_type, name)
        properties[name] = float(rng.uniform(bound.min, bound.max))
    return CharacterConfig(
        agent_id=agent_id, role=role, skill_type=skill_type, properties=properties
    )


def sample_team(
    game: GameConfig, rng: np.random.Generator, randomize_boss: bool = False
) -> TeamConfig:
    """
    Draws a uniformly random valid team.

    Args:
        game: Game configuration providing the bounds.
        rng: Random generator consumed by the draw.
        randomize_boss: Draw the boss too instead of using the configured one.

    Returns:
        TeamConfig: Four in-bounds players and a boss.
    """
    players = [sample_character(game, rng, index, Role.PLAYER) for index in range(N_PLAYERS)]
    boss = (
        sample_character(game, rng, BOSS_ID, Role.BOSS)
        if randomize_boss
        else game.boss_character()
    )
    return TeamConfig(players=players, boss=boss)


def collect_log_dataset(
    sim: Simulator, n_rows: int, sampling: Optional[LogSamplingConfig] = None
) -> List[PlaytestRow]:
    """
    Playtests one episode for each of n_rows uniformly random teams.

    Args:
        sim: Simulator to playtest with.
        n_rows: Number of rows, at least 1.
        sampling: Seed and boss policy of the team sampler.

    Returns:
        List[PlaytestRow]: One row per sampled team, in sampling order.

    Raises:
        SimulatorError: If n_rows < 1.
    """
    if n_rows < 1:
        raise SimulatorError(f"n_rows must be ≥ 1, got {n_rows}")
    sampling = sampling or LogSamplingConfig()
    rng = np.random.default_rng(derive_seed(sampling.master_seed, "log-collection"))

    rows = []
    for index in range(n_rows):
        team = sample_team(sim.config, rng, sampling.randomize_boss)
        episode_seed = int(rng.integers(0, 2**62))
        rows.append(sim.run_episode(team, episode_seed))
        if (index + 1) % 500 == 0:
            logger.info(f"Collected {index + 1}/{n_rows} rows")
    return rows


def summarize_dataset(rows: List[PlaytestRow]) -> DataFrame:
    """
    Logs and returns descriptive statistics of a playtest dataset.

    Args:
        rows: Collected rows.

    Returns:
        DataFrame: pandas describe() table over the catalog variables.
    """
    data = DataFrame([row.to_record() for row in rows])
    logger.info("=" * 60)
    logger.info("PLAYTEST LOG STATISTICS")
    logger.info("=" * 60)
    logger.info(f"Total rows: {len(data)}")
    logger.info(f"Winrate: {data['win'].mean():.3f}")
    logger.info(f"Mean episode ticks: {data['episode_ticks'].mean():.1f}")
    summary = data[list(CATALOG_VARIABLES)].describe()
    logger.info("\nStatistical summary:\n%s", summary.T.to_string())
    return summary


def write_log_dataset(rows: List[PlaytestRow], path: str | Path) -> int:
    """
    Writes a dataset as JSONL, one flat record per row.

    Returns:
        int: Number of lines written.
    """
    return ArtifactManager(Path(path).parent).write_jsonl(
        Path(path).name, (row.to_record() for row in rows)
    )


def load_log_dataset(path: str | Path) -> List[PlaytestRow]:
    """
    Reads a JSONL dataset written by write_log_dataset.

    Raises:
        ArtifactError: If the file is missing, malformed or a row is invalid.
    """
    manager = ArtifactManager(Path(path).parent)
    rows = []
    for line_no, record in enumerate(manager.read_jsonl(Path(path).name), start=1):
        try:
            rows.append(PlaytestRow.from_record(record))
        except ValueError as e:
            raise ArtifactError(f"Invalid playtest row on line {line_no} of {path}: {e}") from e
    return rows
