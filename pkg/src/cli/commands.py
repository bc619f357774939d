from typing import List, Optional
from logging import getLogger
from pathlib import Path
import json

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from pandas import DataFrame

from src.cli.run_config import ConfigError, RunConfig
from src.gen_env.env_schema import RewardKind, RewardSpec
from src.gen_env.environment import TeamBuildEnv
from src.metrics.metrics_schema import EvalReport
from src.metrics.sample_io import write_samples
from src.metrics.scores import evaluate_generator
from src.pipeline.alignment_service import TRANSCRIPT_NAME, run_pipeline
from src.pipeline.llm_backend import RecordingBackend, create_backend
from src.pipeline.pipeline_schema import PipelineConfig, PipelineMode, PipelineTranscript
from src.pipeline.prompt_builder import default_env_description
from src.reward_dsl.ast_nodes import RewardProgram
from src.reward_dsl.catalog import RewardConstraints, VariableCatalog
from src.reward_dsl.lexer import ParseError
from src.reward_dsl.parser import parse_program
from src.reward_dsl.validator import validate
from src.simulator.engine import Simulator, new_simulator
from src.simulator.game_schema import GameConfig, load_game_config
from src.simulator.log_collector import (
    LogSamplingConfig,
    collect_log_dataset,
    summarize_dataset,
    write_log_dataset,
)
from src.trainer.baselines import heuristic_agent, policy_agent, random_agent, sample_contents
from src.trainer.checkpoint import load_checkpoint
from src.trainer.reinforce import train
from src.utils.artifact_manager import ArtifactManager
from src.utils.seeding import derive_seed

logger = getLogger(__name__)

RESULTS_TABLE = "results.csv"
REPORT_NAME = "report.json"
GENERATOR_LABELS = {"checkpoint": "DRL", "random": "RD", "heuristic": "HR"}


class CliUsageError(Exception):
    """Custom exception for invalid command-line combinations."""

    pass


class ReportError(Exception):
    """Custom exception for report consolidation failures."""

    pass


def load_game(config: RunConfig, label: str = "simulator") -> GameConfig:
    """
    Loads the game configuration with its rng_seed derived from the master seed.

    Raises:
        ConfigError: If the file cannot be read.
        GameConfigError: If the content is invalid.
    """
    try:
        data = json.loads(Path(config.game_config_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot load game config {config.game_config_path}: {e}") from e
    data["rng_seed"] = derive_seed(config.master_seed, label)
    return load_game_config(data)


def build_simulator(config: RunConfig, label: str = "simulator") -> Simulator:
    return new_simulator(load_game(config, label))


def build_constraints(config: RunConfig, game: GameConfig) -> RewardConstraints:
    return RewardConstraints(
        output_range=config.pipeline.output_range,
        catalog=VariableCatalog.from_game_config(game),
    )


def _finish(config: RunConfig, command: str) -> None:
    ArtifactManager(config.output_path).write_manifest(
        {"command": command, "master_seed": config.master_seed}
    )


def cmd_collect_logs(config: RunConfig, rows: Optional[int] = None) -> Path:
    """
    Playtests random teams and writes the log dataset.

    Args:
        config: Run configuration.
        rows: Overrides config.logs.rows.

    Returns:
        Path: The JSONL dataset.
    """
    n_rows = rows if rows is not None else config.logs.rows
    sim = build_simulator(config)
    sampling = LogSamplingConfig(
        master_seed=config.master_seed, randomize_boss=config.logs.randomize_boss
    )
    logger.info("=" * 60)
    logger.info(f"COLLECTING {n_rows} PLAYTEST LOG ROWS")
    logger.info("=" * 60)
    dataset = collect_log_dataset(sim, n_rows, sampling)
    summarize_dataset(dataset)
    write_log_dataset(dataset, config.dataset_path)
    _finish(config, "collect-logs")
    return config.dataset_path


def cmd_design_reward(
    config: RunConfig,
    mode: Optional[str] = None,
    backend_kind: Optional[str] = None,
    replay_path: Optional[str] = None,
    record_path: Optional[str] = None,
) -> PipelineTranscript:
    """
    Runs the reward-design pipeline against the collected dataset.

    Returns:
        PipelineTranscript: Written with the final program under reward/<mode>/.

    Raises:
        CliUsageError: If the dataset is missing or a replay file is not given.
        PipelineError: If the pipeline fails; the partial transcript is on disk.
    """
    settings = config.pipeline
    pipeline_mode = PipelineMode(mode) if mode else settings.mode
    backend_settings = settings.backend.model_copy(
        update={
            key: value
            for key, value in {
                "kind": backend_kind,
                "replay_path": replay_path,
                "record_path": record_path,
            }.items()
            if value is not None
        }
    )
    if backend_settings.kind == "replay" and not backend_settings.replay_path:
        raise CliUsageError("--backend replay needs --replay <file>")
    if pipeline_mode == PipelineMode.COT and not config.dataset_path.exists():
        raise CliUsageError(f"dataset {config.dataset_path} not found; run collect-logs first")

    game = load_game(config)
    backend = create_backend(backend_settings)
    if record_path and not isinstance(backend, RecordingBackend):
        backend = RecordingBackend(backend, record_path)
    output_dir = config.output_path / "reward" / pipeline_mode.value
    pipeline_config = PipelineConfig(
        env_description=default_env_description(),
        constraints=build_constraints(config, game),
        n_align=settings.n_align,
        m_rows=settings.m_rows,
        mode=pipeline_mode,
        retry_limit=settings.retry_limit,
        log_dataset_path=str(config.dataset_path),
        rng_seed=derive_seed(config.master_seed, "pipeline/alignment-rows"),
        insight_max_chars=settings.insight_max_chars,
        output_dir=str(output_dir),
    )
    transcript = run_pipeline(backend, pipeline_config)
    _finish(config, "design-reward")
    return transcript


def load_reward_program(path: str | Path, constraints: RewardConstraints) -> RewardProgram:
    """
    Reads a .rwd file and checks it against the catalog.

    Raises:
        CliUsageError: If the file is missing, does not parse or does not validate.
    """
    path = Path(path)
    try:
        source = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CliUsageError(f"cannot read reward program {path}: {e}") from e
    try:
        program = parse_program(source, name=path.stem)
    except ParseError as e:
        raise CliUsageError(f"{path}: {e}") from e
    diagnostics = validate(program, constraints)
    if diagnostics:
        raise CliUsageError(f"{path}: " + "; ".join(str(d) for d in diagnostics))
    return program


def _pe_mode_of(program_path: Optional[str]) -> str:
    if not program_path:
        return ""
    transcript = Path(program_path).parent / TRANSCRIPT_NAME
    if transcript.exists():
        try:
            return json.loads(transcript.read_text(encoding="utf-8")).get("mode", "")
        except (OSError, json.JSONDecodeError):
            logger.warning(f"Cannot read {transcript}; PE mode left blank")
    return ""


def cmd_train(
    config: RunConfig,
    reward: str = "winrate",
    program_path: Optional[str] = None,
    steps: Optional[int] = None,
    runs: Optional[int] = None,
) -> List[Path]:
    """
    Trains R independently seeded policies on the chosen reward.

    Returns:
        List[Path]: One checkpoint per run.

    Raises:
        CliUsageError: If llm/hybrid is requested without a valid program.
    """
    kind = RewardKind(reward)
    if kind != RewardKind.WINRATE and not program_path:
        raise CliUsageError(f"--reward {kind.value} requires --program <file.rwd>")
    total_steps = steps if steps is not None else config.trainer.total_steps
    n_runs = runs if runs is not None else config.trainer.runs

    game = load_game(config)
    program = None
    if program_path:
        program = load_reward_program(program_path, build_constraints(config, game))
    if kind == RewardKind.HYBRID:
        spec = RewardSpec.hybrid(program, config.trainer.hybrid_preset)
    else:
        spec = RewardSpec(kind=kind, program=program if kind == RewardKind.LLM else None)

    output_dir = config.output_path / "train" / kind.value
    metadata = {"pe_mode": _pe_mode_of(program_path), "program_path": program_path or ""}
    checkpoints = []
    for run in range(1, n_runs + 1):
        label = f"run-{run}"
        sim = build_simulator(config, f"simulator/train/{label}")
        env_settings = config.env.model_copy(
            update={"seed": derive_seed(config.master_seed, f"env/train/{label}")}
        )
        hyperparams = config.trainer.hyperparams.model_copy(
            update={"seed": derive_seed(config.master_seed, f"trainer/{kind.value}/{label}")}
        )
        env = TeamBuildEnv(sim, env_settings, spec)
        train(env, spec, total_steps, hyperparams, output_dir, label, metadata)
        checkpoints.append(output_dir / f"{label}_policy.json")
    _finish(config, "train")
    return checkpoints


def cmd_evaluate(
    config: RunConfig,
    agent: str = "random",
    checkpoint_path: Optional[str] = None,
    samples: Optional[int] = None,
) -> EvalReport:
    """
    Samples contents from a generator and scores them.

    Returns:
        EvalReport: Also written as JSON under eval/<label>/ and appended to results.csv.

    Raises:
        CliUsageError: For unknown agents or a checkpoint agent without --checkpoint.
    """
    if agent not in GENERATOR_LABELS:
        raise CliUsageError(f"unknown agent {agent!r}; choose from {sorted(GENERATOR_LABELS)}")
    n_samples = samples if samples is not None else config.metrics.samples
    game = load_game(config, "simulator/evaluate")
    sim = new_simulator(game)
    goal = config.env.goal_winrate
    agent_seed = derive_seed(config.master_seed, f"agent/{agent}")
    pe_mode, reward_kind, label = "", "", GENERATOR_LABELS[agent]

    if agent == "checkpoint":
        if not checkpoint_path:
            raise CliUsageError("--agent checkpoint requires --checkpoint <file>")
        snapshot = load_checkpoint(checkpoint_path)
        pe_mode = snapshot.metadata.get("pe_mode", "")
        reward_kind = snapshot.metadata.get("reward_kind", "")
        label = f"DRL-{reward_kind}-{Path(checkpoint_path).stem.replace('_policy', '')}"
        env = TeamBuildEnv(
            new_simulator(load_game(config, "simulator/evaluate-env")),
            config.env.model_copy(update={"seed": agent_seed}),
        )
        generator = policy_agent(env, snapshot, seed=agent_seed)
    elif agent == "heuristic":
        generator = heuristic_agent(
            sim,
            goal,
            seed=agent_seed,
            budget=config.metrics.heuristic_budget,
            n_candidates=config.metrics.heuristic_candidates,
            n_episodes=config.metrics.n_episodes,
            step=config.env.small_step,
        )
    else:
        generator = random_agent(game, agent_seed)

    logger.info("=" * 60)
    logger.info(f"EVALUATING {label} ON {n_samples} SAMPLES")
    logger.info("=" * 60)
    contents = sample_contents(
        generator,
        n_samples,
        sim,
        n_episodes=config.metrics.n_episodes,
        seed=derive_seed(config.master_seed, f"evaluate/{label}"),
    )
    report = evaluate_generator(contents, goal, config.metrics.threshold, game)
    report = report.model_copy(
        update={"generator": GENERATOR_LABELS[agent], "pe_mode": pe_mode, "reward_kind": reward_kind}
    )

    manager = ArtifactManager(config.output_path)
    write_samples(contents, manager.path(f"eval/{label}/samples.jsonl"))
    manager.write_json(f"eval/{label}/{REPORT_NAME}", report.model_dump(mode="json"))
    manager.append_csv_row(RESULTS_TABLE, {"label": label, **report.model_dump(mode="json")})
    logger.info(
        f"{label}: Ctr={report.ctr:.4f} (±{report.ctr_sd:.4f}) Div={report.div:.4f} "
        f"Tbs={report.tbs:.4f} valid={report.n_valid}/{report.n_samples}"
    )
    _finish(config, "evaluate")
    return report


def _plot_curves(runs_dir: Path) -> List[Path]:
    written = []
    manager = ArtifactManager(runs_dir)
    for curve_path in sorted(runs_dir.rglob("*_curve.csv")):
        curve = manager.read_csv(curve_path)
        figure, (ax_return, ax_error) = plt.subplots(1, 2, figsize=(10, 4))
        ax_return.plot(curve["step"], curve["mean_return"])
        ax_return.set_xlabel("step")
        ax_return.set_ylabel("mean return")
        ax_error.plot(curve["step"], curve["mean_winrate_error"])
        ax_error.set_xlabel("step")
        ax_error.set_ylabel("winrate error")
        relative = curve_path.relative_to(runs_dir).with_suffix("")
        figure.suptitle(relative.as_posix())
        figure.tight_layout()
        target = manager.path(Path("plots") / (relative.as_posix().replace("/", "_") + ".png"))
        target.parent.mkdir(parents=True, exist_ok=True)
        figure.savefig(target, dpi=120)
        plt.close(figure)
        written.append(target)
    return written


def cmd_report(runs_dir: str | Path, plots: bool = False) -> DataFrame:
    """
    Consolidates every report.json under a directory into one table.

    Reports sharing (generator, PE mode, reward kind) are runs of one configuration:
    the table gives their mean and sample standard deviation (0 for a single run).

    Returns:
        DataFrame: One row per configuration, also written as report_table.csv/.txt.

    Raises:
        ReportError: If no reports are found.
    """
    runs_dir = Path(runs_dir).resolve()
    manager = ArtifactManager(runs_dir)
    report_files = sorted(runs_dir.rglob(REPORT_NAME)) if runs_dir.exists() else []
    if not report_files:
        raise ReportError(f"no reports found under {runs_dir}")

    records = [EvalReport.model_validate(manager.read_json(path)).model_dump() for path in report_files]
    data = DataFrame(records)
    keys = ["generator", "pe_mode", "reward_kind"]
    grouped = data.groupby(keys, sort=True, dropna=False)
    table = grouped[["ctr", "div", "tbs"]].agg(["mean", "std"]).fillna(0.0)
    table.columns = [f"{metric}_{stat}".replace("_std", "_sd") for metric, stat in table.columns]
    table["runs"] = grouped.size()
    table["n_valid"] = grouped["n_valid"].mean()
    table = table.reset_index()

    lines = [f"{'generator':<10} {'PE':<5} {'reward':<8} {'Ctr (± SD)':<20} {'Div':>8} {'Tbs':>8} {'runs':>5}"]
    for row in table.itertuples(index=False):
        lines.append(
            f"{row.generator:<10} {row.pe_mode or '-':<5} {row.reward_kind or '-':<8} "
            f"{f'{row.ctr_mean:.3f} ± {row.ctr_sd:.3f}':<20} {row.div_mean:>8.3f} "
            f"{row.tbs_mean:>8.3f} {row.runs:>5d}"
        )
    text = "\n".join(lines)
    logger.info("\n" + text)
    manager.write_csv("report_table.csv", table)
    manager.write_text("report_table.txt", text + "\n")
    if plots:
        for path in _plot_curves(runs_dir):
            logger.info(f"Curve plot saved to {path}")
    return table
