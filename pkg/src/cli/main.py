from typing import List, Optional
from logging import getLogger, basicConfig, getLevelName
import argparse

from src.cli.commands import (
    GENERATOR_LABELS,
    CliUsageError,
    ReportError,
    cmd_collect_logs,
    cmd_design_reward,
    cmd_evaluate,
    cmd_report,
    cmd_train,
)
from src.cli.run_config import ConfigError, load_run_config
from src.gen_env.env_schema import GenEnvUsageError, RewardKind
from src.metrics.metrics_schema import MetricsError
from src.pipeline.alignment_service import PipelineError
from src.pipeline.llm_backend import LlmBackendError
from src.pipeline.pipeline_schema import PipelineMode
from src.simulator.engine import SimulatorError
from src.simulator.game_schema import GameConfigError
from src.trainer.trainer_schema import PolicyError, TrainingDivergenceError
from src.utils.artifact_manager import ArtifactError

logger = getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

RUN_ERRORS = (
    ConfigError,
    GameConfigError,
    SimulatorError,
    PipelineError,
    LlmBackendError,
    GenEnvUsageError,
    PolicyError,
    TrainingDivergenceError,
    MetricsError,
    ReportError,
    ArtifactError,
)


def positive_int(text: str) -> int:
    """argparse type for counts that must be at least 1."""
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chatpcg",
        description="Reward design and team-building generators for a 4v1 boss raid.",
    )
    parser.add_argument("--config", default=None, help="Run configuration JSON file")
    parser.add_argument("--seed", type=int, default=None, help="Overrides the master seed")
    parser.add_argument("--output-dir", default=None, help="Overrides the output directory")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    collect = sub.add_parser("collect-logs", help="Playtest random teams into a log dataset")
    collect.add_argument("--rows", type=positive_int, default=None)

    design = sub.add_parser("design-reward", help="Run the reward-design pipeline")
    design.add_argument("--mode", choices=[m.value for m in PipelineMode], default=None)
    design.add_argument("--backend", choices=["http", "replay", "scripted"], default=None)
    design.add_argument("--replay", default=None, help="Recorded session to replay")
    design.add_argument("--record", default=None, help="Record responses to this file")

    train = sub.add_parser("train", help="Train generator policies")
    train.add_argument("--reward", choices=[k.value for k in RewardKind], default="winrate")
    train.add_argument("--program", default=None, help="Reward program (.rwd) for llm/hybrid")
    train.add_argument("--steps", type=positive_int, default=None)
    train.add_argument("--runs", type=positive_int, default=None)

    evaluate = sub.add_parser("evaluate", help="Sample and score a generator")
    evaluate.add_argument("--agent", choices=sorted(GENERATOR_LABELS), default="random")
    evaluate.add_argument("--checkpoint", default=None)
    evaluate.add_argument("--samples", type=positive_int, default=None)

    report = sub.add_parser("report", help="Consolidate evaluation reports")
    report.add_argument("--runs-dir", default=None, help="Defaults to the output directory")
    report.add_argument("--plots", action="store_true", help="Render training curves")
    return parser


def run_command(args: argparse.Namespace) -> None:
    config = load_run_config(args.config, seed=args.seed, output_dir=args.output_dir)
    if args.command == "collect-logs":
        cmd_collect_logs(config, args.rows)
    elif args.command == "design-reward":
        cmd_design_reward(config, args.mode, args.backend, args.replay, args.record)
    elif args.command == "train":
        cmd_train(config, args.reward, args.program, args.steps, args.runs)
    elif args.command == "evaluate":
        cmd_evaluate(config, args.agent, args.checkpoint, args.samples)
    elif args.command == "report":
        cmd_report(args.runs_dir or config.output_dir, args.plots)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the chatpcg command.

    Returns:
        int: 0 on success, 1 on a failed run, 2 on a usage error.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    basicConfig(level=getLevelName(args.log_level), format=LOG_FORMAT)
    try:
        run_command(args)
    except CliUsageError as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except RUN_ERRORS as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE
    logger.info(f"{args.command} finished")
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
