from src.simulator.engine import (
    EpisodeOutcome,
    Simulator,
    SimulatorError,
    estimate_winrate,
    new_simulator,
    run_episode,
)
from src.simulator.game_schema import (
    CATALOG_VARIABLES,
    PLAYER_STATS,
    PROPERTY_NAMES,
    CharacterConfig,
    GameConfig,
    GameConfigError,
    PlaytestRow,
    PlaytestSummary,
    Role,
    SkillType,
    TeamConfig,
    load_game_config,
)
from src.simulator.log_collector import (
    LogSamplingConfig,
    collect_log_dataset,
    load_log_dataset,
    sample_team,
    summarize_dataset,
    write_log_dataset,
)
