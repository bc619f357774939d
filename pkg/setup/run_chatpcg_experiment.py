from logging import getLogger, basicConfig, INFO
import os, sys

basicConfig(level=INFO, format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
logger = getLogger(__name__)
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from src.cli.commands import (
    cmd_collect_logs,
    cmd_design_reward,
    cmd_evaluate,
    cmd_report,
    cmd_train,
)
from src.cli.run_config import load_run_config
from src.pipeline.alignment_service import FINAL_PROGRAM_NAME

OUTPUT_DIR = "runs/smoke"

if __name__ == "__main__":
    logger.info("=" * 60)
    logger.info("REWARD DESIGN SMOKE EXPERIMENT")
    logger.info("=" * 60)

    config = load_run_config("configs/run_config.json", output_dir=OUTPUT_DIR)

    cmd_collect_logs(config, rows=200)
    logger.info("=" * 60)

    transcript = cmd_design_reward(
        config, mode="cot", backend_kind="replay", replay_path="tests/fixtures/recorded_session.json"
    )
    program_path = config.output_path / "reward" / "cot" / FINAL_PROGRAM_NAME
    logger.info(f"Reward design finished with status {transcript.status}")
    logger.info("=" * 60)

    checkpoints = cmd_train(config, reward="llm", program_path=str(program_path), steps=500, runs=1)
    logger.info("=" * 60)

    evaluations = (
        ("checkpoint", str(checkpoints[0]), 200),
        ("random", None, 200),
        ("heuristic", None, 20),
    )
    for agent, checkpoint, samples in evaluations:
        try:
            cmd_evaluate(config, agent=agent, checkpoint_path=checkpoint, samples=samples)
        except Exception as e:
            logger.error(f"Evaluation of {agent} failed: {e}")

    cmd_report(config.output_dir, plots=True)
    logger.info("Process finished!")
