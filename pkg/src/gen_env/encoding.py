from typing import Sequence

import numpy as np

from src.gen_env.env_schema import EnvSettings, GenEnvUsageError, GenEpisodeState
from src.simulator.game_schema import (
    N_PLAYERS,
    PROPERTY_NAMES,
    CharacterConfig,
    GameConfig,
    SkillType,
    TeamConfig,
)

N_CATEGORIES = 5
NO_CHANGE = 2
AGENT_SLOT = len(PROPERTY_NAMES) + 4
FRAME_SIZE = AGENT_SLOT * N_PLAYERS


def encode_frame(game: GameConfig, team: TeamConfig, turn: int) -> np.ndarray:
    """
    Encodes one frame: per player, 7 normalized properties, a melee/ranged
    one-hot, the update flag and the normalized agent index.

    Args:
        game: Bounds used for normalization.
        team: Current team.
        turn: Index of the player updated at this step.

    Returns:
        np.ndarray: FRAME_SIZE values in [0, 1].
    """
    frame = np.zeros(FRAME_SIZE, dtype=np.float64)
    for index, player in enumerate(team.players):
        start = index * AGENT_SLOT
        frame[start : start + len(PROPERTY_NAMES)] = game.normalize(player)
        offset = start + len(PROPERTY_NAMES)
        frame[offset] = 1.0 if player.skill_type == SkillType.MELEE else 0.0
        frame[offset + 1] = 1.0 if player.skill_type == SkillType.RANGED else 0.0
        frame[offset + 2] = 1.0 if index == turn else 0.0
        frame[offset + 3] = index / (N_PLAYERS - 1)
    # float rounding in normalize can land a hair outside the unit interval
    return np.clip(frame, 0.0, 1.0)


def encode_observation(state: GenEpisodeState, game: GameConfig) -> np.ndarray:
    """
    Pushes the current frame onto the stack and returns the flattened stack,
    oldest frame first.
    """
    state.frames.append(encode_frame(game, state.team, state.turn))
    return np.concatenate(list(state.frames))


def check_action(action: Sequence[int]) -> np.ndarray:
    """
    Converts an action to 7 category indices.

    Raises:
        GenEnvUsageError: If the action has the wrong shape or a category outside 0..4.
    """
    categories = np.asarray(action)
    if categories.shape != (len(PROPERTY_NAMES),):
        raise GenEnvUsageError(
            f"action must hold {len(PROPERTY_NAMES)} categories, got shape {categories.shape}"
        )
    if not np.issubdtype(categories.dtype, np.integer):
        if not np.all(np.equal(np.mod(categories, 1), 0)):
            raise GenEnvUsageError(f"action categories must be integers, got {action}")
        categories = categories.astype(np.int64)
    if categories.min() < 0 or categories.max() >= N_CATEGORIES:
        raise GenEnvUsageError(f"action categories must lie in 0..{N_CATEGORIES - 1}, got {action}")
    return categories


def adjust_character(
    game: GameConfig, character: CharacterConfig, categories: np.ndarray, settings: EnvSettings
) -> CharacterConfig:
    fractions = settings.step_fractions()
    bounds = game.character_bounds(character)
    properties = dict(character.properties)
    for name, category in zip(PROPERTY_NAMES, categories):
        if category == NO_CHANGE:
            continue
        bound = bounds[name]
        properties[name] = bound.clamp(properties[name] + fractions[int(category)] * bound.width)
    return character.model_copy(update={"properties": properties})


def apply_action(
    state: GenEpisodeState,
    action: Sequence[int],
    game: GameConfig,
    settings: EnvSettings,
) -> TeamConfig:
    """
    Applies a factorized action to the player whose turn it is.

    Args:
        state: Episode state; its team and turn are read, not modified.
        action: Seven category indices, 0..4 meaning -large, -small, none,
            +small, +large.
        game: Property bounds.
        settings: Step sizes as fractions of bound width.

    Returns:
        TeamConfig: The new team; only player `state.turn` differs and every
        property is clamped to its bound.
    """
    categories = check_action(action)
    players = list(state.team.players)
    players[state.turn] = adjust_character(game, players[state.turn], categories, settings)
    return state.team.model_copy(update={"players": players})
