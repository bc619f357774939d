from typing import Any, Dict, Optional, Tuple
from collections import deque
from logging import getLogger

import gymnasium as gym
import numpy as np
from gymnasium import spaces

from src.gen_env.encoding import FRAME_SIZE, N_CATEGORIES, apply_action, encode_observation
from src.gen_env.env_schema import (
    EnvSettings,
    GenEnvUsageError,
    GenEpisodeState,
    RewardKind,
    RewardSpec,
)
from src.gen_env.rewards import evaluate_llm_reward, hybrid_reward, winrate_reward
from src.reward_dsl.catalog import VariableCatalog
from src.simulator.engine import Simulator
from src.simulator.game_schema import N_PLAYERS, PROPERTY_NAMES, PlaytestSummary, TeamConfig
from src.simulator.log_collector import sample_team

logger = getLogger(__name__)


class TeamBuildEnv(gym.Env):
    """
    Content-generation environment over the four player characters of a raid team.

    Each step edits the player whose turn it is (round robin), playtests the
    team and pays the configured reward. Episodes end after `horizon` steps.
    """

    metadata = {"render_modes": []}

    def __init__(
        self,
        sim: Simulator,
        settings: Optional[EnvSettings] = None,
        reward_spec: Optional[RewardSpec] = None,
    ):
        """
        Initialize the TeamBuildEnv.

        Args:
            sim: Simulator used for playtesting; owned by this environment.
            settings: Goal winrate, horizon, playtest size and step sizes.
            reward_spec: Reward to pay; winrate reward when omitted.
        """
        super().__init__()
        self.sim = sim
        self.game = sim.config
        self.settings = settings or EnvSettings()
        self.reward_spec = reward_spec or RewardSpec()
        self.catalog = VariableCatalog.from_game_config(self.game)
        self.observation_space = spaces.Box(
            low=0.0,
            high=1.0,
            shape=(FRAME_SIZE * self.settings.frame_stack,),
            dtype=np.float64,
        )
        self.action_space = spaces.MultiDiscrete([N_CATEGORIES] * len(PROPERTY_NAMES))
        self.state: Optional[GenEpisodeState] = None

    def _playtest(self, team: TeamConfig) -> PlaytestSummary:
        base_seed = int(self.np_random.integers(0, 2**62))
        return self.sim.estimate_winrate(team, self.settings.n_episodes, base_seed=base_seed)

    def reset(
        self, *, seed: Optional[int] = None, options: Optional[Dict[str, Any]] = None
    ) -> Tuple[np.ndarray, Dict[str, Any]]:
        """
        Starts an episode from a uniformly random team.

        Args:
            seed: Reseeds the environment stream; the first reset falls back to
                settings.seed so unseeded runs stay reproducible.
            options: {"team": TeamConfig} starts from a given team instead.

        Returns:
            Tuple[np.ndarray, Dict[str, Any]]: Observation with every stacked frame
            equal to the initial encoding, and info with the initial winrate and l_0.
        """
        if seed is None and self._np_random is None:
            seed = self.settings.seed
        super().reset(seed=seed)

        team = (options or {}).get("team") or sample_team(self.game, self.np_random)
        self.sim.check_team(team)
        summary = self._playtest(team)
        goal = self.settings.goal_winrate
        self.state = GenEpisodeState(
            team=team,
            goal_winrate=goal,
            horizon=self.settings.horizon,
            last_summary=summary,
            prev_distance=abs(goal - summary.winrate),
            frames=deque(maxlen=self.settings.frame_stack),
        )
        observation = encode_observation(self.state, self.game)
        while len(self.state.frames) < self.settings.frame_stack:
            observation = encode_observation(self.state, self.game)
        return observation, {"winrate": summary.winrate, "l_t": self.state.prev_distance, "t": 0}

    def step(self, action) -> Tuple[np.ndarray, float, bool, bool, Dict[str, Any]]:
        """
        Edits the current player, playtests and pays the reward.

        Returns:
            Tuple: (observation, reward, terminated, truncated, info). info carries
            winrate, l_t, r_wr, the updated agent and, for program rewards, r_llm
            and the per-module values.

        Raises:
            GenEnvUsageError: If no episode is running or the episode is done.
        """
        if self.state is None:
            raise GenEnvUsageError("call reset() before step()")
        if self.state.done:
            raise GenEnvUsageError(
                f"episode finished after {self.state.horizon} steps; call reset()"
            )
        state = self.state
        updated_agent = state.turn
        state.team = apply_action(state, action, self.game, self.settings)
        summary = self._playtest(state.team)

        r_wr, l_cur = winrate_reward(state.prev_distance, summary, state.goal_winrate)
        info: Dict[str, Any] = {
            "winrate": summary.winrate,
            "l_t": l_cur,
            "r_wr": r_wr,
            "updated_agent": updated_agent,
        }
        spec = self.reward_spec
        if spec.kind == RewardKind.WINRATE:
            reward = r_wr
        else:
            r_llm, modules = evaluate_llm_reward(spec.program, summary, self.catalog)
            info["r_llm"] = r_llm
            info["modules"] = modules
            if spec.kind == RewardKind.LLM:
                reward = r_llm
            else:
                reward = hybrid_reward(r_wr, r_llm, spec.w_wr, spec.w_llm)

        state.prev_distance = l_cur
        state.last_summary = summary
        state.t += 1
        state.turn = state.t % N_PLAYERS
        info["t"] = state.t
        observation = encode_observation(state, self.game)
        terminated = state.done
        return observation, float(reward), terminated, False, info

    @property
    def team(self) -> TeamConfig:
        if self.state is None:
            raise GenEnvUsageError("no episode is running")
        return self.state.team
