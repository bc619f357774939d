from src.trainer.baselines import (
    HillClimbResult,
    heuristic_agent,
    hill_climb,
    policy_agent,
    random_agent,
    sample_contents,
    single_property_moves,
)
from src.trainer.checkpoint import load_checkpoint, save_checkpoint
from src.trainer.policy import (
    OBSERVATION_SIZE,
    PolicySnapshot,
    adam_update,
    entropy,
    forward,
    head_probabilities,
    init_policy,
    objective_gradients,
    policy_step,
    sequence_log_prob,
)
from src.trainer.reinforce import discounted_returns, train
from src.trainer.trainer_schema import (
    CurveRecord,
    PolicyError,
    TrainerHyperparams,
    TrainingCurve,
    TrainingDivergenceError,
)
