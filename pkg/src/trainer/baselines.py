from typing import Iterator, List, NamedTuple, Optional
from logging import getLogger

import numpy as np

from src.gen_env.encoding import NO_CHANGE, adjust_character
from src.gen_env.env_schema import EnvSettings
from src.metrics.metrics_schema import ContentSample
from src.simulator.engine import Simulator
from src.simulator.game_schema import N_PLAYERS, PROPERTY_NAMES, GameConfig, TeamConfig
from src.simulator.log_collector import sample_team
from src.trainer.policy import PolicySnapshot, policy_step
from src.utils.seeding import derive_seed

logger = getLogger(__name__)

SEED_SPACE = 2**62


class HillClimbResult(NamedTuple):
    team: TeamConfig
    initial_error: float
    final_error: float
    accepted_moves: int


def random_agent(game: GameConfig, seed: int) -> Iterator[TeamConfig]:
    """Endless stream of uniformly random valid teams."""
    rng = np.random.default_rng(seed)
    while True:
        yield sample_team(game, rng)


def _perturb(game: GameConfig, team: TeamConfig, player: int, prop: int, category: int, settings):
    categories = np.full(len(PROPERTY_NAMES), NO_CHANGE)
    categories[prop] = category
    players = list(team.players)
    players[player] = adjust_character(game, players[player], categories, settings)
    return team.model_copy(update={"players": players})


def single_property_moves(game: GameConfig, team: TeamConfig, settings: EnvSettings) -> List[TeamConfig]:
    """
    Every team one small step away: each (player, property, +/-) move that changes the team.

    Moves blocked by a bound are left out, so the list can be shorter than
    N_PLAYERS * len(PROPERTY_NAMES) * 2.
    """
    moves = []
    for player in range(N_PLAYERS):
        for prop in range(len(PROPERTY_NAMES)):
            for category in (NO_CHANGE - 1, NO_CHANGE + 1):
                candidate = _perturb(game, team, player, prop, category, settings)
                if candidate != team:
                    moves.append(candidate)
    return moves


def hill_climb(
    sim: Simulator,
    team: TeamConfig,
    goal: float,
    budget: int,
    rng: np.random.Generator,
    n_episodes: int = 16,
    n_candidates: Optional[int] = None,
    step: float = 0.02,
) -> HillClimbResult:
    """
    Greedy search over single-property small perturbations.

    Every round playtests all single-property moves and keeps the best one only
    if it lowers |goal - winrate|. With n_candidates set, a round tries that
    many moves drawn at random instead. All winrates of one climb use the same
    episode seeds, so candidates are compared on equal terms.

    Args:
        sim: Simulator for playtesting.
        team: Starting team.
        goal: Goal winrate.
        budget: Number of rounds; 0 returns the starting team.
        rng: Generator for the shared episode seeds and move sampling.
        n_episodes: Episodes per winrate estimate.
        n_candidates: Moves tried per round; None tries every move.
        step: Move size as a fraction of the property's bound width.

    Returns:
        HillClimbResult: Final team and the errors before and after.
    """
    if n_candidates is not None and n_candidates < 1:
        raise ValueError(f"n_candidates must be ≥ 1, got {n_candidates}")
    game = sim.config
    settings = EnvSettings(small_step=step, large_step=max(step, EnvSettings().large_step))
    base_seed = int(rng.integers(0, SEED_SPACE))

    def error_of(candidate: TeamConfig) -> float:
        return abs(goal - sim.estimate_winrate(candidate, n_episodes, base_seed=base_seed).winrate)

    error = error_of(team)
    initial_error = error
    accepted = 0
    for _ in range(budget):
        if error == 0.0:
            break
        candidates = single_property_moves(game, team, settings)
        if n_candidates is not None and n_candidates < len(candidates):
            picks = rng.choice(len(candidates), size=n_candidates, replace=False)
            candidates = [candidates[int(pick)] for pick in sorted(picks)]
        best_team, best_error = None, error
        for candidate in candidates:
            candidate_error = error_of(candidate)
            if candidate_error < best_error:
                best_team, best_error = candidate, candidate_error
        if best_team is None:
            if n_candidates is None:
                break
            continue
        team, error = best_team, best_error
        accepted += 1
    return HillClimbResult(team=team, initial_error=initial_error, final_error=error, accepted_moves=accepted)


def heuristic_agent(
    sim: Simulator,
    goal: float,
    seed: int = 0,
    budget: int = 20,
    n_episodes: int = 16,
    n_candidates: Optional[int] = None,
    step: float = 0.02,
) -> Iterator[TeamConfig]:
    """
    Endless stream of hill-climbed teams, each starting from a random team.

    Raises:
        ValueError: If goal is outside [0, 1].
    """
    if not 0.0 <= goal <= 1.0:
        raise ValueError(f"goal must lie in [0, 1], got {goal}")
    rng = np.random.default_rng(seed)
    while True:
        start = sample_team(sim.config, rng)
        result = hill_climb(sim, start, goal, budget, rng, n_episodes, n_candidates, step)
        logger.debug(
            f"Hill climb: error {result.initial_error:.3f} -> {result.final_error:.3f} "
            f"({result.accepted_moves} moves)"
        )
        yield result.team


def policy_agent(env, snapshot: PolicySnapshot, seed: Optional[int] = None) -> Iterator[TeamConfig]:
    """Endless stream of final teams from greedy episodes of a trained policy."""
    reset_seed = seed
    while True:
        observation, _ = env.reset(seed=reset_seed)
        reset_seed = None
        done = False
        while not done:
            action, _ = policy_step(snapshot, observation, greedy=True)
            observation, _, terminated, truncated, _ = env.step(action)
            done = terminated or truncated
        yield env.team


def sample_contents(
    agent: Iterator[TeamConfig],
    n: int,
    sim: Simulator,
    n_episodes: int = 16,
    seed: int = 0,
) -> List[ContentSample]:
    """
    Draws n teams from a generator and measures each one's winrate.

    Each sample stores the episode seed of its measurement so the winrate can be
    recomputed with estimate_winrate(team, n_episodes, base_seed=eval_seed).

    Raises:
        ValueError: If n < 1.
    """
    if n < 1:
        raise ValueError(f"n must be ≥ 1, got {n}")
    samples = []
    for index in range(n):
        team = next(agent)
        eval_seed = derive_seed(seed, f"sample-{index}") % SEED_SPACE
        summary = sim.estimate_winrate(team, n_episodes, base_seed=eval_seed)
        samples.append(
            ContentSample(
                team=team,
                measured_winrate=summary.winrate,
                eval_seed=eval_seed,
                n_episodes=n_episodes,
            )
        )
        if (index + 1) % 100 == 0:
            logger.info(f"Sampled {index + 1}/{n} contents")
    return samples
