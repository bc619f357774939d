from typing import List, Optional, Tuple
from logging import getLogger
from pathlib import Path

import numpy as np

from src.gen_env.env_schema import RewardSpec
from src.trainer.checkpoint import save_checkpoint
from src.trainer.policy import (
    OBSERVATION_SIZE,
    PolicySnapshot,
    adam_update,
    init_policy,
    log_softmax,
    objective_gradients,
    policy_step,
)
from src.trainer.trainer_schema import (
    CurveRecord,
    TrainerHyperparams,
    TrainingCurve,
    TrainingDivergenceError,
)
from src.utils.artifact_manager import ArtifactManager
from src.utils.seeding import derive_seed

logger = getLogger(__name__)


def discounted_returns(rewards: List[float], discount: float) -> np.ndarray:
    returns = np.zeros(len(rewards))
    running = 0.0
    for index in reversed(range(len(rewards))):
        running = rewards[index] + discount * running
        returns[index] = running
    return returns


def _check_logits(cache_logits: np.ndarray, limit: float, step: int) -> None:
    magnitude = float(np.abs(cache_logits).mean())
    if not np.isfinite(magnitude) or magnitude > limit:
        raise TrainingDivergenceError(
            f"mean |logit| reached {magnitude:.3g} at step {step} (limit {limit:g})"
        )


def train(
    env,
    reward_spec: Optional[RewardSpec],
    total_steps: int,
    hyperparams: Optional[TrainerHyperparams] = None,
    output_dir: Optional[str | Path] = None,
    run_name: str = "run-1",
    metadata: Optional[dict] = None,
) -> Tuple[PolicySnapshot, TrainingCurve]:
    """
    Trains a policy with REINFORCE, a moving-average return baseline and an
    entropy bonus, updating once per collected episode.

    Args:
        env: Environment with the reset/step episode contract and 176-long observations.
        reward_spec: Reward to train on; replaces env.reward_spec when given.
        total_steps: Environment steps to collect, at least 1. The last episode is
            cut short when the budget runs out.
        hyperparams: Optimizer, network and logging settings.
        output_dir: When set, the checkpoint and curve CSV are written there.
        run_name: File prefix for the persisted artifacts.
        metadata: Extra checkpoint metadata (reward program, PE mode, ...).

    Returns:
        Tuple[PolicySnapshot, TrainingCurve]: Trained policy and its learning curve.

    Raises:
        ValueError: If total_steps < 1.
        TrainingDivergenceError: If the mean absolute logit exceeds the limit.
    """
    if total_steps < 1:
        raise ValueError(f"total_steps must be ≥ 1, got {total_steps}")
    hp = hyperparams or TrainerHyperparams()
    if reward_spec is not None:
        env.reward_spec = reward_spec
    space = getattr(env, "observation_space", None)
    input_size = int(np.prod(space.shape)) if space is not None else OBSERVATION_SIZE
    snapshot = init_policy(derive_seed(hp.seed, "trainer/init"), hp.hidden_sizes, input_size)
    rng = np.random.default_rng(derive_seed(hp.seed, "trainer/sampling"))
    curve = TrainingCurve()

    baseline: Optional[float] = None
    steps_done = 0
    next_record = hp.curve_interval
    interval_returns: List[float] = []
    interval_errors: List[float] = []
    interval_entropy: List[float] = []
    reset_seed: Optional[int] = derive_seed(hp.seed, "trainer/env") % 2**63

    logger.info("=" * 60)
    logger.info(f"TRAINING {run_name}: {total_steps} steps")
    logger.info("=" * 60)
    while steps_done < total_steps:
        observation, _ = env.reset(seed=reset_seed)
        reset_seed = None
        observations, actions, rewards = [], [], []
        final_error = None
        done = False
        while not done and steps_done < total_steps:
            action, _ = policy_step(snapshot, observation, rng)
            next_observation, reward, terminated, truncated, info = env.step(action)
            observations.append(observation)
            actions.append(action)
            rewards.append(float(reward))
            final_error = info.get("l_t", final_error)
            observation = next_observation
            steps_done += 1
            done = terminated or truncated

        returns = discounted_returns(rewards, hp.discount)
        if baseline is None:
            baseline = float(returns.mean())
        advantages = returns - baseline
        baseline = hp.baseline_decay * baseline + (1.0 - hp.baseline_decay) * float(returns.mean())

        grads, cache = objective_gradients(
            snapshot, np.array(observations), np.array(actions), advantages, hp.entropy_coef
        )
        batch_size = len(rewards)
        adam_update(
            snapshot,
            [grad / batch_size for grad in grads],
            hp.learning_rate,
            hp.adam_beta1,
            hp.adam_beta2,
            hp.adam_eps,
        )
        _check_logits(cache.logits, hp.logit_limit, steps_done)

        log_probs = log_softmax(cache.logits)
        interval_entropy.append(float(-(np.exp(log_probs) * log_probs).sum(axis=(1, 2)).mean()))
        interval_returns.append(float(sum(rewards)))
        if final_error is not None:
            interval_errors.append(float(final_error))

        if steps_done >= next_record or steps_done >= total_steps:
            record = CurveRecord(
                step=steps_done,
                mean_return=float(np.mean(interval_returns)),
                mean_winrate_error=float(np.mean(interval_errors)) if interval_errors else None,
                entropy=float(np.mean(interval_entropy)),
            )
            curve.append(record)
            logger.info(
                f"step {record.step}: mean_return={record.mean_return:.4f} "
                f"winrate_error={record.mean_winrate_error} entropy={record.entropy:.3f}"
            )
            interval_returns, interval_errors, interval_entropy = [], [], []
            while next_record <= steps_done:
                next_record += hp.curve_interval

    snapshot.metadata.update({"total_steps": total_steps, "run_name": run_name})
    snapshot.metadata.update(metadata or {})
    if reward_spec is not None:
        snapshot.metadata["reward_kind"] = reward_spec.kind.value
    if output_dir is not None:
        manager = ArtifactManager(output_dir)
        save_checkpoint(snapshot, manager.path(f"{run_name}_policy.json"))
        manager.write_csv(f"{run_name}_curve.csv", curve.to_frame())
    return snapshot, curve
