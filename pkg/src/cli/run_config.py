from typing import Optional, Tuple
from logging import getLogger
from pathlib import Path
import json

from pydantic import BaseModel, Field, ValidationError, model_validator

from src.gen_env.env_schema import HYBRID_PRESETS, EnvSettings
from src.pipeline.llm_backend import BackendSettings
from src.pipeline.pipeline_schema import PipelineMode
from src.trainer.trainer_schema import TrainerHyperparams

logger = getLogger(__name__)


class ConfigError(Exception):
    """Custom exception for invalid run configuration."""

    pass


class LogSettings(BaseModel):
    rows: int = Field(default=1500, ge=1)
    randomize_boss: bool = False


class PipelineSettings(BaseModel):
    mode: PipelineMode = PipelineMode.COT
    n_align: int = Field(default=5, ge=0)
    m_rows: int = Field(default=20, ge=1)
    retry_limit: int = Field(default=3, ge=0)
    output_range: Tuple[float, float] = (-1.0, 1.0)
    insight_max_chars: int = Field(default=600, ge=20)
    backend: BackendSettings = BackendSettings()


class TrainerSettings(BaseModel):
    total_steps: int = Field(default=20000, ge=1)
    runs: int = Field(default=3, ge=1)
    hybrid_preset: str = "default"
    hyperparams: TrainerHyperparams = TrainerHyperparams()

    @model_validator(mode="after")
    def _known_preset(self) -> "TrainerSettings":
        if self.hybrid_preset not in HYBRID_PRESETS:
            raise ValueError(f"hybrid_preset must be one of {sorted(HYBRID_PRESETS)}")
        return self


class MetricsSettings(BaseModel):
    threshold: float = Field(default=0.4, ge=0.0)
    samples: int = Field(default=1000, ge=1)
    n_episodes: int = Field(default=16, ge=1)
    heuristic_budget: int = Field(default=20, ge=0)
    heuristic_candidates: Optional[int] = Field(default=None, ge=1)


class RunConfig(BaseModel):
    """Everything one experiment needs; the master seed fans out to every component."""

    game_config_path: str = "configs/game_config.json"
    output_dir: str = "runs/default"
    dataset_name: str = "playtest_logs.jsonl"
    master_seed: int = Field(default=20240409, ge=0)
    logs: LogSettings = LogSettings()
    env: EnvSettings = EnvSettings()
    pipeline: PipelineSettings = PipelineSettings()
    trainer: TrainerSettings = TrainerSettings()
    metrics: MetricsSettings = MetricsSettings()

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    @property
    def dataset_path(self) -> Path:
        return self.output_path / self.dataset_name


def load_run_config(
    path: Optional[str | Path] = None,
    seed: Optional[int] = None,
    output_dir: Optional[str] = None,
) -> RunConfig:
    """
    Loads and validates a run configuration.

    Args:
        path: JSON file; defaults apply when omitted.
        seed: Overrides master_seed.
        output_dir: Overrides output_dir.

    Returns:
        RunConfig: Validated configuration whose game config path exists.

    Raises:
        ConfigError: Naming the offending field or missing file.
    """
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"Cannot read run config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"Run config {path} is not valid JSON: {e}") from e
    if seed is not None:
        data["master_seed"] = seed
    if output_dir is not None:
        data["output_dir"] = output_dir
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "run_config"
        raise ConfigError(f"{field}: {first['msg']}") from e
    if not Path(config.game_config_path).exists():
        raise ConfigError(f"game_config_path: file {config.game_config_path} does not exist")
    logger.info(f"Run config loaded (master_seed={config.master_seed}, output={config.output_dir})")
    return config
