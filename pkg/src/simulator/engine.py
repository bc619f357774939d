from typing import List, NamedTuple, Optional
from logging import getLogger
from math import hypot, inf
import random

import numpy as np

from src.simulator.game_schema import (
    BOSS_ID,
    CATALOG_VARIABLES,
    N_PLAYERS,
    GameConfig,
    PlaytestRow,
    PlaytestSummary,
    TeamConfig,
    load_game_config,
)

logger = getLogger(__name__)


class SimulatorError(Exception):
    """Custom exception for simulator operations."""

    pass


class EpisodeOutcome(NamedTuple):
    row: PlaytestRow
    boss_health: float


class Simulator:
    """
    Deterministic tick-based boss raid.

    Players walk toward the boss until it is within their range and attack when off
    cooldown; the boss does the same against the nearest living player. An attack
    casts for `cast_time` ticks, then lands for damage x (1 - target armor) with
    seeded +/- variance, then the cooldown starts.
    """

    def __init__(self, config: GameConfig):
        """
        Initialize the Simulator.

        Args:
            config: Validated game configuration.
        """
        self.config = config
        self._seed_stream = np.random.default_rng(config.rng_seed)

    def next_seed(self) -> int:
        """Draws a fresh base seed from the simulator's own stream."""
        return int(self._seed_stream.integers(0, 2**62))

    def check_team(self, team: TeamConfig) -> None:
        """
        Verifies every team member lies within the configured bounds.

        Raises:
            SimulatorError: Naming the agent and properties out of bounds.
        """
        for member in team.members():
            offending = self.config.out_of_bounds(member)
            if offending:
                raise SimulatorError(
                    f"agent {member.agent_id} ({member.role.value}) out of bounds: {offending}"
                )

    def play(self, team: TeamConfig, episode_seed: int) -> EpisodeOutcome:
        """
        Simulates one episode to boss death, team wipe, or the playtime limit.

        Args:
            team: Team to playtest.
            episode_seed: Seed of this episode's random stream.

        Returns:
            EpisodeOutcome: The log row and the boss health left at the end.

        Raises:
            SimulatorError: If the team violates the configured bounds.
        """
        self.check_team(team)
        cfg = self.config
        rnd = random.Random(f"{cfg.rng_seed}:{episode_seed}")

        props = [member.properties for member in team.members()]
        max_hp = [p["max_health"] for p in props]
        armor = [p["armor"] for p in props]
        speed = [p["speed"] for p in props]
        cooldown = [p["cooldown"] for p in props]
        cast_time = [p["cast_time"] for p in props]
        reach = [p["range"] for p in props]
        damage = [p["damage"] for p in props]

        size = cfg.arena_size
        jitter = cfg.spawn_jitter
        xs: List[float] = []
        ys: List[float] = []
        for sx, sy in cfg.player_spawns:
            sx += rnd.uniform(-jitter, jitter)
            sy += rnd.uniform(-jitter, jitter)
            xs.append(min(size, max(0.0, sx)))
            ys.append(min(size, max(0.0, sy)))
        xs.append(cfg.boss_spawn[0])
        ys.append(cfg.boss_spawn[1])

        var_lo = 1.0 - cfg.damage_variance
        var_span = 2.0 * cfg.damage_variance

        hp = list(max_hp)
        alive = [True] * (N_PLAYERS + 1)
        casting = [False] * (N_PLAYERS + 1)
        cast_left = [0.0] * (N_PLAYERS + 1)
        cast_target = [0] * (N_PLAYERS + 1)
        cd_left = [0.0] * (N_PLAYERS + 1)

        survive = [0] * N_PLAYERS
        moved = [0.0] * N_PLAYERS
        dealt = [0.0] * N_PLAYERS
        taken = [0.0] * N_PLAYERS
        hits = [0] * N_PLAYERS
        in_range = [0] * N_PLAYERS
        down = [0] * N_PLAYERS

        players_alive = N_PLAYERS
        win = False
        tick = 0
        for tick in range(1, cfg.max_ticks + 1):
            for i in range(N_PLAYERS + 1):
                if not alive[i]:
                    continue
                if i == BOSS_ID:
                    target = -1
                    dist = inf
                    for j in range(N_PLAYERS):
                        if alive[j]:
                            d = hypot(xs[j] - xs[i], ys[j] - ys[i])
                            if d < dist:
                                dist = d
                                target = j
                else:
                    target = BOSS_ID
                    dist = hypot(xs[BOSS_ID] - xs[i], ys[BOSS_ID] - ys[i])
                    if dist <= reach[i]:
                        in_range[i] += 1

                if casting[i]:
                    if i != BOSS_ID:
                        down[i] += 1
                    cast_left[i] -= 1.0
                    if cast_left[i] <= 0.0:
                        casting[i] = False
                        cd_left[i] = cooldown[i]
                        victim = cast_target[i]
                        if alive[victim]:
                            amount = (
                                damage[i]
                                * (var_lo + var_span * rnd.random())
                                * (1.0 - armor[victim])
                            )
                            hp[victim] -= amount
                            if i == BOSS_ID:
                                taken[victim] += amount
                            else:
                                dealt[i] += amount
                                hits[i] += 1
                            if hp[victim] <= 0.0:
                                hp[victim] = 0.0
                                alive[victim] = False
                                if victim == BOSS_ID:
                                    win = True
                                    break
                                survive[victim] = tick
                                players_alive -= 1
                    continue

                if cd_left[i] > 0.0:
                    cd_left[i] -= 1.0
                    if i != BOSS_ID:
                        down[i] += 1

                if dist > reach[i]:
                    step = min(speed[i], dist - reach[i])
                    xs[i] += (xs[target] - xs[i]) / dist * step
                    ys[i] += (ys[target] - ys[i]) / dist * step
                    if i != BOSS_ID:
                        moved[i] += step
                elif cd_left[i] <= 0.0:
                    casting[i] = True
                    cast_left[i] = cast_time[i]
                    cast_target[i] = target

            if win or players_alive == 0:
                break

        values = {}
        for i in range(N_PLAYERS):
            suffix = f"_p{i + 1}"
            values["survive_time" + suffix] = float(tick if alive[i] else survive[i])
            values["moved_distance" + suffix] = moved[i]
            values["damage_dealt" + suffix] = dealt[i]
            values["damage_taken" + suffix] = taken[i]
            values["attack_count" + suffix] = float(hits[i])
            values["time_in_range" + suffix] = float(in_range[i])
            values["health_remaining" + suffix] = hp[i] if alive[i] else 0.0
            values["downtime" + suffix] = float(down[i])

        row = PlaytestRow(values=values, win=win, episode_ticks=tick, seed=episode_seed)
        return EpisodeOutcome(row=row, boss_health=hp[BOSS_ID])

    def run_episode(self, team: TeamConfig, episode_seed: int) -> PlaytestRow:
        return self.play(team, episode_seed).row

    def estimate_winrate(
        self, team: TeamConfig, n_episodes: int, base_seed: Optional[int] = None
    ) -> PlaytestSummary:
        """
        Playtests a team over several seeded episodes.

        Args:
            team: Team to playtest.
            n_episodes: Number of episodes, at least 1.
            base_seed: Episode i uses base_seed + i. Drawn from the simulator's
                stream when omitted; pass it explicitly to reproduce a measurement.

        Returns:
            PlaytestSummary: Winrate and per-variable means.

        Raises:
            SimulatorError: If n_episodes < 1 or the team is invalid.
        """
        if n_episodes < 1:
            raise SimulatorError(f"n_episodes must be ≥ 1, got {n_episodes}")
        if base_seed is None:
            base_seed = self.next_seed()

        rows = [self.run_episode(team, base_seed + k) for k in range(n_episodes)]
        wins = sum(1 for row in rows if row.win)
        matrix = np.array([[row.values[name] for name in CATALOG_VARIABLES] for row in rows])
        means = matrix.mean(axis=0)

        return PlaytestSummary(
            winrate=wins / n_episodes,
            n_episodes=n_episodes,
            wins=wins,
            mean_row={name: float(value) for name, value in zip(CATALOG_VARIABLES, means)},
            base_seed=base_seed,
        )


def new_simulator(config: GameConfig | dict) -> Simulator:
    """
    Builds a simulator with its own seeded random stream.

    Args:
        config: A GameConfig or its raw JSON form; either is re-validated.

    Returns:
        Simulator: A new simulator handle.

    Raises:
        GameConfigError: If the configuration is invalid.
    """
    data = config.model_dump(mode="json") if isinstance(config, GameConfig) else config
    validated = load_game_config(data)
    logger.debug(f"Simulator created with rng_seed={validated.rng_seed}")
    return Simulator(validated)


def run_episode(sim: Simulator, team: TeamConfig, episode_seed: int) -> PlaytestRow:
    return sim.run_episode(team, episode_seed)


def estimate_winrate(
    sim: Simulator, team: TeamConfig, n_episodes: int, base_seed: Optional[int] = None
) -> PlaytestSummary:
    return sim.estimate_winrate(team, n_episodes, base_seed=base_seed)

