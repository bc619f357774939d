from src.gen_env.encoding import (
    FRAME_SIZE,
    N_CATEGORIES,
    apply_action,
    encode_frame,
    encode_observation,
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
