import json
from pathlib import Path

import numpy as np
import pytest

from src.reward_dsl.catalog import RewardConstraints, VariableCatalog
from src.simulator.engine import new_simulator
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
    load_game_config,
)

ROOT = Path(__file__).resolve().parent.parent
GAME_CONFIG_PATH = ROOT / "configs" / "game_config.json"
FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def game_data() -> dict:
    return json.loads(GAME_CONFIG_PATH.read_text(encoding="utf-8"))


@pytest.fixture
def game(game_data) -> GameConfig:
    return load_game_config(game_data)


@pytest.fixture
def fast_game(game_data) -> GameConfig:
    data = dict(game_data)
    data["max_ticks"] = 120
    return load_game_config(data)


@pytest.fixture
def sim(game):
    return new_simulator(game)


@pytest.fixture
def fast_sim(fast_game):
    return new_simulator(fast_game)


@pytest.fixture
def catalog(game) -> VariableCatalog:
    return VariableCatalog.from_game_config(game)


@pytest.fixture
def constraints(catalog) -> RewardConstraints:
    return RewardConstraints(output_range=(-1.0, 1.0), catalog=catalog)


@pytest.fixture
def recorded_session() -> Path:
    return FIXTURES / "recorded_session.json"


def character_at(
    game: GameConfig,
    agent_id: int,
    level: float,
    skill_type: SkillType = SkillType.MELEE,
    role: Role = Role.PLAYER,
    **overrides: float,
) -> CharacterConfig:
    """Character whose every property sits at `level` of its bound width."""
    properties = {}
    for name in PROPERTY_NAMES:
        bound = game.bound(role, skill_type, name)
        properties[name] = bound.min + level * bound.width
    properties.update(overrides)
    return CharacterConfig(
        agent_id=agent_id, role=role, skill_type=skill_type, properties=properties
    )


def team_at(game: GameConfig, levels, skill_type: SkillType = SkillType.MELEE, boss=None) -> TeamConfig:
    players = [character_at(game, index, level, skill_type) for index, level in enumerate(levels)]
    return TeamConfig(players=players, boss=boss or game.boss_character())


def boss_with(game: GameConfig, **properties: float) -> CharacterConfig:
    values = dict(game.boss.properties)
    values.update(properties)
    return CharacterConfig(
        agent_id=BOSS_ID, role=Role.BOSS, skill_type=game.boss.skill_type, properties=values
    )


def uniform_team(game: GameConfig, level: float = 0.5) -> TeamConfig:
    return team_at(game, [level] * N_PLAYERS)


def random_rows(seed: int, n: int, d: int = len(PROPERTY_NAMES)) -> np.ndarray:
    return np.random.default_rng(seed).random((n, d))


def make_row(seed: int = 0, win: bool = False, episode_ticks: int = 300, **values: float) -> PlaytestRow:
    """Playtest row with every variable at 1.0 unless overridden."""
    record = {name: 1.0 for name in CATALOG_VARIABLES}
    record.update(values)
    return PlaytestRow(values=record, win=win, episode_ticks=episode_ticks, seed=seed)
