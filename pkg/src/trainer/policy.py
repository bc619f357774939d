from typing import List, NamedTuple, Optional, Sequence, Tuple
from dataclasses import dataclass, field

import numpy as np

from src.gen_env.encoding import FRAME_SIZE, N_CATEGORIES
from src.simulator.game_schema import PROPERTY_NAMES
from src.trainer.trainer_schema import PolicyError

N_HEADS = len(PROPERTY_NAMES)
OBSERVATION_SIZE = FRAME_SIZE * 4
OUTPUT_INIT_SCALE = 0.01


@dataclass
class PolicySnapshot:
    """
    Factorized categorical policy: an MLP with tanh hidden layers and
    N_HEADS heads of N_CATEGORIES logits, plus its Adam state.

    params holds [W1, b1, W2, b2, ..., Wout, bout] with W of shape (out, in).
    """

    params: List[np.ndarray]
    hidden_sizes: Tuple[int, ...]
    rng_seed: int
    step_count: int = 0
    adam_m: List[np.ndarray] = field(default_factory=list)
    adam_v: List[np.ndarray] = field(default_factory=list)
    adam_t: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def input_size(self) -> int:
        return self.params[0].shape[1]

    def copy(self) -> "PolicySnapshot":
        return PolicySnapshot(
            params=[p.copy() for p in self.params],
            hidden_sizes=self.hidden_sizes,
            rng_seed=self.rng_seed,
            step_count=self.step_count,
            adam_m=[m.copy() for m in self.adam_m],
            adam_v=[v.copy() for v in self.adam_v],
            adam_t=self.adam_t,
            metadata=dict(self.metadata),
        )


class ForwardPass(NamedTuple):
    inputs: np.ndarray
    activations: List[np.ndarray]
    logits: np.ndarray


def init_policy(
    seed: int,
    hidden_sizes: Sequence[int] = (64, 64),
    input_size: int = OBSERVATION_SIZE,
) -> PolicySnapshot:
    """
    Creates a seeded policy with small uniform weights.

    Hidden layers draw from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the output layer is
    scaled down so every head starts close to uniform.

    Args:
        seed: Initialization seed.
        hidden_sizes: Width of each tanh hidden layer.
        input_size: Observation length.

    Returns:
        PolicySnapshot: Fresh policy with zeroed optimizer state.
    """
    rng = np.random.default_rng(seed)
    sizes = [input_size, *hidden_sizes, N_HEADS * N_CATEGORIES]
    params = []
    for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        limit = 1.0 / np.sqrt(fan_in)
        if layer == len(sizes) - 2:
            limit *= OUTPUT_INIT_SCALE
        params.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        params.append(np.zeros(fan_out))
    return PolicySnapshot(
        params=params,
        hidden_sizes=tuple(int(size) for size in hidden_sizes),
        rng_seed=seed,
        adam_m=[np.zeros_like(p) for p in params],
        adam_v=[np.zeros_like(p) for p in params],
    )


def _check_observations(snapshot: PolicySnapshot, observations) -> np.ndarray:
    batch = np.asarray(observations, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch[None, :]
    if batch.ndim != 2 or batch.shape[1] != snapshot.input_size:
        raise PolicyError(
            f"observation must have length {snapshot.input_size}, got shape {np.shape(observations)}"
        )
    if not np.all(np.isfinite(batch)):
        raise PolicyError("observation contains non-finite values")
    return batch


def forward(snapshot: PolicySnapshot, observations) -> ForwardPass:
    """
    Runs the MLP on one observation or a batch.

    Returns:
        ForwardPass: Inputs, hidden activations and logits of shape (B, N_HEADS, N_CATEGORIES).

    Raises:
        PolicyError: If an observation has the wrong length or non-finite entries.
    """
    hidden = _check_observations(snapshot, observations)
    inputs = hidden
    activations = []
    n_layers = len(snapshot.params) // 2
    for layer in range(n_layers):
        weight, bias = snapshot.params[2 * layer], snapshot.params[2 * layer + 1]
        hidden = hidden @ weight.T + bias
        if layer < n_layers - 1:
            hidden = np.tanh(hidden)
            activations.append(hidden)
    logits = hidden.reshape(-1, N_HEADS, N_CATEGORIES)
    return ForwardPass(inputs=inputs, activations=activations, logits=logits)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def head_probabilities(snapshot: PolicySnapshot, observation) -> np.ndarray:
    """Per-head action probabilities, shape (N_HEADS, N_CATEGORIES)."""
    return np.exp(log_softmax(forward(snapshot, observation).logits[0]))


def entropy(snapshot: PolicySnapshot, observation) -> float:
    """Sum of the per-head entropies at one observation."""
    log_probs = log_softmax(forward(snapshot, observation).logits[0])
    return float(-(np.exp(log_probs) * log_probs).sum())


def policy_step(
    snapshot: PolicySnapshot,
    observation,
    rng: Optional[np.random.Generator] = None,
    greedy: bool = False,
) -> Tuple[np.ndarray, float]:
    """
    Picks one category per head.

    Args:
        snapshot: Policy.
        observation: One observation vector.
        rng: Sampling generator; required unless greedy.
        greedy: Take the argmax of every head instead of sampling.

    Returns:
        Tuple[np.ndarray, float]: N_HEADS category indices and the summed log-probability.

    Raises:
        PolicyError: For malformed observations or sampling without a generator.
    """
    log_probs = log_softmax(forward(snapshot, observation).logits[0])
    if greedy:
        action = log_probs.argmax(axis=-1)
    else:
        if rng is None:
            raise PolicyError("sampling needs a random generator")
        cumulative = np.cumsum(np.exp(log_probs), axis=-1)
        draws = rng.random(N_HEADS) * cumulative[:, -1]
        action = np.array(
            [
                min(int(np.searchsorted(cumulative[head], draws[head], side="right")), N_CATEGORIES - 1)
                for head in range(N_HEADS)
            ]
        )
    log_prob = float(log_probs[np.arange(N_HEADS), action].sum())
    return action.astype(np.int64), log_prob


def objective_gradients(
    snapshot: PolicySnapshot,
    observations,
    actions,
    weights,
    entropy_coef: float = 0.0,
) -> Tuple[List[np.ndarray], ForwardPass]:
    """
    Gradient of sum_i weights_i * log_prob(actions_i | obs_i) + entropy_coef * sum_i H(obs_i)
    with respect to every parameter, by backpropagation.

    Args:
        snapshot: Policy.
        observations: Batch of observations, shape (B, input_size).
        actions: Chosen categories, shape (B, N_HEADS).
        weights: Per-sample log-probability weights (advantages), shape (B,).
        entropy_coef: Entropy bonus coefficient.

    Returns:
        Tuple[List[np.ndarray], ForwardPass]: Gradients aligned with snapshot.params
        and the forward pass they were computed from.
    """
    cache = forward(snapshot, observations)
    actions = np.asarray(actions, dtype=np.int64).reshape(-1, N_HEADS)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    log_probs = log_softmax(cache.logits)
    probs = np.exp(log_probs)

    chosen = np.zeros_like(probs)
    np.put_along_axis(chosen, actions[:, :, None], 1.0, axis=-1)
    grad_logits = weights[:, None, None] * (chosen - probs)
    if entropy_coef:
        head_entropy = -(probs * log_probs).sum(axis=-1, keepdims=True)
        grad_logits -= entropy_coef * probs * (log_probs + head_entropy)

    delta = grad_logits.reshape(len(weights), -1)
    n_layers = len(snapshot.params) // 2
    grads: List[np.ndarray] = [np.zeros(0)] * len(snapshot.params)
    for layer in reversed(range(n_layers)):
        below = cache.activations[layer - 1] if layer > 0 else cache.inputs
        grads[2 * layer] = delta.T @ below
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ snapshot.params[2 * layer]) * (1.0 - below**2)
    return grads, cache


def sequence_log_prob(snapshot: PolicySnapshot, observations, actions) -> np.ndarray:
    """log_prob of each (observation, action) pair, summed over heads."""
    log_probs = log_softmax(forward(snapshot, observations).logits)
    actions = np.asarray(actions, dtype=np.int64).reshape(-1, N_HEADS)
    return np.take_along_axis(log_probs, actions[:, :, None], axis=-1)[:, :, 0].sum(axis=-1)


def adam_update(
    snapshot: PolicySnapshot,
    ascent_grads: List[np.ndarray],
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> None:
    """Applies one Adam ascent step in place and advances step_count."""
    if not snapshot.adam_m:
        snapshot.adam_m = [np.zeros_like(p) for p in snapshot.params]
        snapshot.adam_v = [np.zeros_like(p) for p in snapshot.params]
    snapshot.adam_t += 1
    correction1 = 1.0 - beta1**snapshot.adam_t
    correction2 = 1.0 - beta2**snapshot.adam_t
    for index, grad in enumerate(ascent_grads):
        snapshot.adam_m[index] = beta1 * snapshot.adam_m[index] + (1.0 - beta1) * grad
        snapshot.adam_v[index] = beta2 * snapshot.adam_v[index] + (1.0 - beta2) * grad**2
        m_hat = snapshot.adam_m[index] / correction1
        v_hat = snapshot.adam_v[index] / correction2
        snapshot.params[index] = snapshot.params[index] + learning_rate * m_hat / (
            np.sqrt(v_hat) + eps
        )
    snapshot.step_count += 1
