import numpy as np
import pytest

from src.gen_env.encoding import (
    FRAME_SIZE,
    N_CATEGORIES,
    adjust_character,
    apply_action,
    check_action,
    encode_frame,
)
from src.gen_env.env_schema import (
    HYBRID_PRESETS,
    EnvSettings,
    GenEnvUsageError,
    GenEpisodeState,
    RewardKind,
    RewardSpec,
)
from src.gen_env.environment import TeamBuildEnv
from src.gen_env.rewards import evaluate_llm_reward, hybrid_reward, llm_reward, winrate_reward
from src.reward_dsl.parser import parse_program
from src.simulator.engine import new_simulator
from src.simulator.game_schema import N_PLAYERS, PROPERTY_NAMES, PlaytestSummary
from tests.conftest import team_at, uniform_team

CONSTANT_PROGRAM = "module c weight 1:\n  0.25"
NO_OP = [2] * len(PROPERTY_NAMES)


def summary_of(wins: int, n: int = 10, **mean_row: float) -> PlaytestSummary:
    return PlaytestSummary(winrate=wins / n, n_episodes=n, wins=wins, mean_row=mean_row, base_seed=0)


def state_for(team, turn: int = 0) -> GenEpisodeState:
    return GenEpisodeState(
        team=team, goal_winrate=0.7, horizon=4, last_summary=summary_of(5), prev_distance=0.2, turn=turn
    )


@pytest.fixture
def settings():
    return EnvSettings(horizon=5, n_episodes=2, seed=3)


@pytest.fixture
def env(fast_game, settings):
    return TeamBuildEnv(new_simulator(fast_game), settings)


def test_spaces(env):
    assert env.observation_space.shape == (FRAME_SIZE * 4,) == (176,)
    assert int(np.prod(env.action_space.nvec)) == N_CATEGORIES ** len(PROPERTY_NAMES) == 78125


def test_every_joint_action_is_distinct(env, fast_game, settings):
    player = uniform_team(fast_game).players[0]
    shape = tuple(int(n) for n in env.action_space.nvec)
    outcomes = set()
    count = 0
    for action in np.ndindex(shape):
        assert env.action_space.contains(np.array(action, dtype=env.action_space.dtype))
        adjusted = adjust_character(fast_game, player, check_action(action), settings)
        outcomes.add(tuple(adjusted.properties[name] for name in PROPERTY_NAMES))
        count += 1
    assert count == len(outcomes) == 78125


def test_reset_observation_is_a_stack_of_identical_frames(env):
    observation, info = env.reset(seed=5)
    assert observation.shape == (176,)
    assert observation.min() >= 0.0 and observation.max() <= 1.0
    frames = observation.reshape(4, FRAME_SIZE)
    assert all(np.array_equal(frames[0], frame) for frame in frames[1:])
    assert info["t"] == 0
    assert info["l_t"] == pytest.approx(abs(0.7 - info["winrate"]))


def test_reset_is_deterministic(fast_game, settings):
    first = TeamBuildEnv(new_simulator(fast_game), settings)
    second = TeamBuildEnv(new_simulator(fast_game), settings)
    obs_a, info_a = first.reset(seed=11)
    obs_b, info_b = second.reset(seed=11)
    assert np.array_equal(obs_a, obs_b)
    assert info_a == info_b
    assert first.team == second.team


def test_unseeded_first_reset_uses_settings_seed(fast_game, settings):
    first = TeamBuildEnv(new_simulator(fast_game), settings)
    second = TeamBuildEnv(new_simulator(fast_game), settings)
    assert np.array_equal(first.reset()[0], second.reset()[0])


def test_update_flag_marks_the_current_player(fast_game):
    team = uniform_team(fast_game)
    for turn in range(N_PLAYERS):
        frame = encode_frame(fast_game, team, turn)
        flags = [frame[p * 11 + len(PROPERTY_NAMES) + 2] for p in range(N_PLAYERS)]
        assert flags == [1.0 if p == turn else 0.0 for p in range(N_PLAYERS)]
        indices = [frame[p * 11 + len(PROPERTY_NAMES) + 3] for p in range(N_PLAYERS)]
        assert indices == [0.0, 1 / 3, 2 / 3, 1.0]


def test_small_decrease_moves_by_a_fraction_of_the_width(fast_game):
    team = team_at(fast_game, [0.5] * N_PLAYERS)
    assert team.players[0].properties["max_health"] == 275.0
    action = [1] + [2] * (len(PROPERTY_NAMES) - 1)
    updated = apply_action(state_for(team), action, fast_game, EnvSettings())
    assert updated.players[0].properties["max_health"] == pytest.approx(266.0)
    for name in PROPERTY_NAMES[1:]:
        assert updated.players[0].properties[name] == team.players[0].properties[name]
    assert updated.players[1:] == team.players[1:]


def test_large_increase_is_clamped_at_the_upper_bound(fast_game):
    team = team_at(fast_game, [0.95] * N_PLAYERS)
    updated = apply_action(state_for(team, turn=2), [4] * len(PROPERTY_NAMES), fast_game, EnvSettings())
    assert updated.players[2].properties["max_health"] == 500.0
    assert fast_game.out_of_bounds(updated.players[2]) == []


def test_no_change_action_keeps_the_team(fast_game):
    team = uniform_team(fast_game, 0.3)
    assert apply_action(state_for(team), NO_OP, fast_game, EnvSettings()) == team


@pytest.mark.parametrize("action", [[2] * 6, [5] + [2] * 6, [-1] + [2] * 6, [2.5] + [2] * 6])
def test_malformed_actions_are_rejected(action):
    with pytest.raises(GenEnvUsageError):
        check_action(action)


def test_turns_go_round_robin_and_episode_ends_at_horizon(env):
    env.reset(seed=1)
    agents = []
    terminated = False
    for _ in range(5):
        _, _, terminated, truncated, info = env.step(NO_OP)
        agents.append(info["updated_agent"])
        assert truncated is False
    assert agents == [0, 1, 2, 3, 0]
    assert terminated is True
    with pytest.raises(GenEnvUsageError, match="reset"):
        env.step(NO_OP)


def test_step_before_reset_fails(env):
    with pytest.raises(GenEnvUsageError):
        env.step(NO_OP)


def test_winrate_rewards_telescope(env):
    rng = np.random.default_rng(0)
    _, info = env.reset(seed=2)
    l_0 = info["l_t"]
    total = 0.0
    terminated = False
    while not terminated:
        observation, reward, terminated, _, info = env.step(rng.integers(0, N_CATEGORIES, size=7))
        assert observation.shape == (176,)
        assert reward == pytest.approx(info["r_wr"])
        total += reward
    assert total == pytest.approx(l_0 - info["l_t"], abs=1e-12)


def test_winrate_reward_is_the_distance_decrease():
    reward, distance = winrate_reward(0.4, summary_of(5), 0.7)
    assert distance == pytest.approx(0.2)
    assert reward == pytest.approx(0.2)
    reward, _ = winrate_reward(0.0, summary_of(7), 0.7)
    assert reward == pytest.approx(0.0)


def test_hybrid_reward_is_the_weighted_sum():
    assert hybrid_reward(0.5, -2.0, *HYBRID_PRESETS["default"]) == pytest.approx(0.425)


def test_llm_reward_uses_catalog_constants(catalog):
    program = parse_program("module t weight 1:\n  survive_time_p1 / max_episode_time")
    summary = summary_of(3, survive_time_p1=150.0)
    total, modules = evaluate_llm_reward(program, summary, catalog)
    assert total == pytest.approx(0.5)
    assert modules == pytest.approx({"t": 0.5})


def test_failing_program_pays_zero():
    program = parse_program("module bad weight 1:\n  1 / (downtime_p1 - downtime_p1)")
    assert llm_reward(program, summary_of(1, downtime_p1=2.0)) == 0.0


def test_program_rewards_need_a_program():
    with pytest.raises(ValueError):
        RewardSpec(kind=RewardKind.LLM)
    with pytest.raises(ValueError, match="preset"):
        RewardSpec.hybrid(parse_program(CONSTANT_PROGRAM), preset="nope")


def test_llm_environment_pays_the_program_value(fast_game, settings):
    spec = RewardSpec(kind=RewardKind.LLM, program=parse_program(CONSTANT_PROGRAM))
    env = TeamBuildEnv(new_simulator(fast_game), settings, spec)
    env.reset(seed=4)
    _, reward, _, _, info = env.step(NO_OP)
    assert reward == pytest.approx(0.25)
    assert info["modules"] == pytest.approx({"c": 0.25})


def test_hybrid_environment_combines_both_rewards(fast_game, settings):
    spec = RewardSpec.hybrid(parse_program(CONSTANT_PROGRAM))
    env = TeamBuildEnv(new_simulator(fast_game), settings, spec)
    env.reset(seed=4)
    for _ in range(3):
        _, reward, _, _, info = env.step(NO_OP)
        assert reward == pytest.approx(0.97 * info["r_wr"] + 0.03 * info["r_llm"])


def test_reset_accepts_a_starting_team(env, fast_game):
    team = uniform_team(fast_game, 0.2)
    env.reset(seed=0, options={"team": team})
    assert env.team == team
