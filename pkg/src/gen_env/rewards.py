from typing import Dict, Optional, Tuple
from logging import getLogger

from src.reward_dsl.ast_nodes import RewardProgram
from src.reward_dsl.catalog import VariableCatalog
from src.reward_dsl.evaluator import EvalError, evaluate_program
from src.simulator.game_schema import PlaytestSummary

logger = getLogger(__name__)


def winrate_reward(l_prev: float, summary: PlaytestSummary, goal: float) -> Tuple[float, float]:
    """
    Rewards the decrease of the L1 distance to the goal winrate.

    Args:
        l_prev: Distance at the previous step.
        summary: Playtest summary of the current team.
        goal: Goal winrate in [0, 1].

    Returns:
        Tuple[float, float]: (l_prev - l_cur, l_cur) with l_cur = |goal - winrate|.
    """
    l_cur = abs(goal - summary.winrate)
    return l_prev - l_cur, l_cur


def evaluate_llm_reward(
    program: RewardProgram,
    summary: PlaytestSummary,
    catalog: Optional[VariableCatalog] = None,
) -> Tuple[float, Dict[str, float]]:
    """
    Evaluates a generated reward program on the mean playtest row of a summary.

    Args:
        program: Validated reward program.
        summary: Playtest summary; its mean_row provides the bindings.
        catalog: Adds the catalog constants to the bindings when given.

    Returns:
        Tuple[float, Dict[str, float]]: Total and per-module values; (0.0, {}) and a
        logged warning when evaluation fails.
    """
    bindings = catalog.bind(summary.mean_row) if catalog is not None else dict(summary.mean_row)
    try:
        value = evaluate_program(program, bindings)
    except EvalError as e:
        logger.warning(f"LLM reward evaluation failed, paying 0: {e}")
        return 0.0, {}
    return value.total, value.modules


def llm_reward(
    program: RewardProgram,
    summary: PlaytestSummary,
    catalog: Optional[VariableCatalog] = None,
) -> float:
    return evaluate_llm_reward(program, summary, catalog)[0]


def hybrid_reward(r_wr: float, r_llm: float, w_wr: float, w_llm: float) -> float:
    return r_wr * w_wr + r_llm * w_llm
