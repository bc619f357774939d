from typing import List, Sequence, Tuple
from itertools import combinations
from logging import getLogger

import numpy as np

from src.metrics.metrics_schema import ContentSample, EvalReport, MetricsError
from src.metrics.pca import pca_first_component
from src.simulator.game_schema import CharacterConfig, GameConfig, TeamConfig

logger = getLogger(__name__)

DEFAULT_THRESHOLD = 0.4


def _errors(samples: Sequence[ContentSample], goal: float) -> np.ndarray:
    return np.array([abs(goal - sample.measured_winrate) for sample in samples])


def controllability(samples: Sequence[ContentSample], goal: float) -> float:
    """
    Mean absolute error between the goal and the measured winrates.

    Raises:
        MetricsError: If samples is empty.
    """
    if not samples:
        raise MetricsError("controllability needs at least one sample")
    return float(np.mean(_errors(samples, goal)))


def controllability_sd(samples: Sequence[ContentSample], goal: float) -> float:
    """Population standard deviation of the per-sample winrate errors."""
    if not samples:
        raise MetricsError("controllability needs at least one sample")
    return float(np.std(_errors(samples, goal)))


def valid_filter(
    samples: Sequence[ContentSample], goal: float, threshold: float = DEFAULT_THRESHOLD
) -> List[ContentSample]:
    """
    Keeps samples whose winrate error is at most the threshold (inclusive).

    Raises:
        MetricsError: If threshold is negative.
    """
    if threshold < 0:
        raise MetricsError(f"threshold must be ≥ 0, got {threshold}")
    return [s for s in samples if abs(goal - s.measured_winrate) <= threshold]


def _players(team: TeamConfig | Sequence[CharacterConfig]) -> List[CharacterConfig]:
    return list(team.players) if isinstance(team, TeamConfig) else list(team)


def diversity_with_flag(
    samples: Sequence[ContentSample],
    goal: float,
    threshold: float,
    game: GameConfig,
) -> Tuple[float, bool]:
    """
    Spread of the valid samples' characters along their first principal axis.

    Every player of every valid sample is one normalized 7-vector; the result is
    the population standard deviation of their projections.

    Returns:
        Tuple[float, bool]: (diversity, degenerate). Degenerate means fewer than
        2 characters or zero variance, and the diversity is 0.
    """
    valid = valid_filter(samples, goal, threshold)
    rows = [game.normalize(player) for sample in valid for player in sample.team.players]
    if len(rows) < 2:
        logger.warning(f"Diversity undefined over {len(rows)} valid characters, reporting 0")
        return 0.0, True
    matrix = np.array(rows)
    result = pca_first_component(matrix)
    if result.degenerate:
        logger.warning("Valid characters have zero variance, diversity is 0")
        return 0.0, True
    projections = (matrix - matrix.mean(axis=0)) @ result.component
    return float(np.std(projections)), False


def diversity(
    samples: Sequence[ContentSample],
    goal: float,
    threshold: float,
    game: GameConfig,
) -> float:
    return diversity_with_flag(samples, goal, threshold, game)[0]


def team_build_score(team: TeamConfig | Sequence[CharacterConfig], game: GameConfig) -> float:
    """
    Mean pairwise distance between players in normalized property space.

    Each pair contributes the mean absolute difference over the seven normalized
    properties; the boss is excluded.

    Args:
        team: A team or a list of at least two player characters.
        game: Bounds used for normalization.

    Returns:
        float: Score in [0, 1]; 0 iff all players are identical.

    Raises:
        MetricsError: If fewer than two players are given.
    """
    players = _players(team)
    if len(players) < 2:
        raise MetricsError(f"team build score needs ≥ 2 players, got {len(players)}")
    vectors = [game.normalize(player) for player in players]
    distances = [float(np.mean(np.abs(a - b))) for a, b in combinations(vectors, 2)]
    return float(np.mean(distances))


def evaluate_generator(
    samples: Sequence[ContentSample],
    goal: float,
    threshold: float,
    game: GameConfig,
) -> EvalReport:
    """
    Scores a generator from its samples.

    Ctr uses every sample; Div and the mean Tbs use the valid samples only.

    Raises:
        MetricsError: If samples is empty.
    """
    if not samples:
        raise MetricsError("evaluate_generator needs at least one sample")
    valid = valid_filter(samples, goal, threshold)
    div, degenerate = diversity_with_flag(samples, goal, threshold, game)
    tbs = float(np.mean([team_build_score(s.team, game) for s in valid])) if valid else 0.0
    return EvalReport(
        ctr=controllability(samples, goal),
        ctr_sd=controllability_sd(samples, goal),
        div=div,
        tbs=min(1.0, tbs),
        n_samples=len(samples),
        n_valid=len(valid),
        goal=goal,
        validity_threshold=threshold,
        degenerate_diversity=degenerate,
    )
