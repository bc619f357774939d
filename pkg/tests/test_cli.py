import argparse
import json

import pytest

from src.cli.commands import REPORT_NAME, RESULTS_TABLE, cmd_report
from src.cli.main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, main, positive_int
from src.cli.run_config import ConfigError, load_run_config
from src.metrics.metrics_schema import EvalReport
from src.pipeline.alignment_service import FINAL_PROGRAM_NAME, TRANSCRIPT_NAME
from tests.conftest import GAME_CONFIG_PATH


@pytest.fixture
def run_config(tmp_path):
    game = json.loads(GAME_CONFIG_PATH.read_text(encoding="utf-8"))
    game["max_ticks"] = 60
    game_path = tmp_path / "game.json"
    game_path.write_text(json.dumps(game), encoding="utf-8")
    config = {
        "game_config_path": str(game_path),
        "output_dir": str(tmp_path / "out"),
        "master_seed": 7,
        "logs": {"rows": 30},
        "env": {"horizon": 2, "n_episodes": 1},
        "pipeline": {"m_rows": 10, "backend": {"kind": "scripted"}},
        "trainer": {"total_steps": 4, "runs": 1, "hyperparams": {"hidden_sizes": [8]}},
        "metrics": {"samples": 3, "n_episodes": 2, "heuristic_budget": 1},
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path


def write_report(directory, ctr: float, generator: str = "RD") -> None:
    directory.mkdir(parents=True, exist_ok=True)
    report = EvalReport(
        ctr=ctr,
        ctr_sd=0.0,
        div=0.5,
        tbs=0.25,
        n_samples=10,
        n_valid=8,
        goal=0.7,
        validity_threshold=0.4,
        generator=generator,
    )
    (directory / REPORT_NAME).write_text(report.model_dump_json(), encoding="utf-8")


def test_load_run_config_defaults_and_overrides(run_config, tmp_path):
    config = load_run_config(run_config, seed=3, output_dir=str(tmp_path / "other"))
    assert config.master_seed == 3
    assert config.output_dir == str(tmp_path / "other")
    assert config.env.horizon == 2
    assert config.env.goal_winrate == 0.7
    assert config.trainer.hybrid_preset == "default"


def test_invalid_run_configs_name_the_field(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"trainer": {"runs": 0}}), encoding="utf-8")
    with pytest.raises(ConfigError, match="trainer.runs"):
        load_run_config(bad)
    missing_game = tmp_path / "missing.json"
    missing_game.write_text(json.dumps({"game_config_path": str(tmp_path / "nope.json")}), encoding="utf-8")
    with pytest.raises(ConfigError, match="game_config_path"):
        load_run_config(missing_game)


def test_unreadable_config_is_a_failed_run(tmp_path):
    (tmp_path / "broken.json").write_text("{", encoding="utf-8")
    assert main(["--config", str(tmp_path / "broken.json"), "collect-logs"]) == EXIT_FAILURE


def test_unknown_choice_is_rejected_by_the_parser():
    with pytest.raises(SystemExit) as caught:
        main(["train", "--reward", "vibes"])
    assert caught.value.code == EXIT_USAGE


@pytest.mark.parametrize(
    "command",
    [
        ["train", "--steps", "0"],
        ["train", "--runs", "-1"],
        ["evaluate", "--samples", "0"],
        ["collect-logs", "--rows", "many"],
    ],
)
def test_counts_must_be_positive(run_config, command):
    with pytest.raises(SystemExit) as caught:
        main(["--config", str(run_config)] + command)
    assert caught.value.code == EXIT_USAGE


def test_positive_int():
    assert positive_int("3") == 3
    with pytest.raises(argparse.ArgumentTypeError, match="at least 1"):
        positive_int("0")


def test_collect_logs_writes_the_dataset(run_config, tmp_path):
    assert main(["--config", str(run_config), "collect-logs"]) == EXIT_OK
    dataset = tmp_path / "out" / "playtest_logs.jsonl"
    assert len(dataset.read_text(encoding="utf-8").splitlines()) == 30


def test_design_reward_needs_the_dataset(run_config):
    assert main(["--config", str(run_config), "design-reward"]) == EXIT_USAGE


def test_replay_backend_needs_a_file(run_config):
    assert main(["--config", str(run_config), "design-reward", "--mode", "io", "--backend", "replay"]) == EXIT_USAGE


def test_program_rewards_need_a_program(run_config):
    assert main(["--config", str(run_config), "train", "--reward", "hybrid"]) == EXIT_USAGE
    assert main(["--config", str(run_config), "train", "--reward", "llm", "--program", "missing.rwd"]) == EXIT_USAGE


def test_checkpoint_agent_needs_a_checkpoint(run_config):
    assert main(["--config", str(run_config), "evaluate", "--agent", "checkpoint"]) == EXIT_USAGE


def test_report_without_reports_fails(run_config, tmp_path):
    assert main(["--config", str(run_config), "report", "--runs-dir", str(tmp_path / "empty")]) == EXIT_FAILURE


def test_report_aggregates_runs(tmp_path):
    for run, ctr in enumerate([0.1, 0.2, 0.3]):
        write_report(tmp_path / "eval" / f"run-{run}", ctr)
    write_report(tmp_path / "eval" / "heuristic", 0.05, generator="HR")
    table = cmd_report(tmp_path)
    random_row = table[table["generator"] == "RD"].iloc[0]
    assert random_row["ctr_mean"] == pytest.approx(0.2)
    assert random_row["ctr_sd"] == pytest.approx(0.1)
    assert random_row["runs"] == 3
    single = table[table["generator"] == "HR"].iloc[0]
    assert single["ctr_sd"] == 0.0
    assert (tmp_path / "report_table.csv").exists()
    assert "RD" in (tmp_path / "report_table.txt").read_text(encoding="utf-8")


def test_full_experiment(run_config, tmp_path):
    out = tmp_path / "out"
    base = ["--config", str(run_config)]
    assert main(base + ["collect-logs"]) == EXIT_OK

    assert main(base + ["design-reward", "--backend", "scripted"]) == EXIT_OK
    transcript = json.loads((out / "reward" / "cot" / TRANSCRIPT_NAME).read_text(encoding="utf-8"))
    assert transcript["status"] == "completed"
    assert len(transcript["iterations"]) == 5
    program = out / "reward" / "cot" / FINAL_PROGRAM_NAME
    assert program.exists()

    assert main(base + ["train", "--reward", "llm", "--program", str(program)]) == EXIT_OK
    checkpoint = out / "train" / "llm" / "run-1_policy.json"
    assert json.loads(checkpoint.read_text(encoding="utf-8"))["metadata"]["pe_mode"] == "cot"

    assert main(base + ["evaluate", "--agent", "checkpoint", "--checkpoint", str(checkpoint)]) == EXIT_OK
    assert main(base + ["evaluate", "--agent", "random"]) == EXIT_OK
    assert main(base + ["evaluate", "--agent", "heuristic"]) == EXIT_OK
    report = json.loads((out / "eval" / "DRL-llm-run-1" / REPORT_NAME).read_text(encoding="utf-8"))
    assert report["n_samples"] == 3
    assert report["generator"] == "DRL"
    assert len((out / RESULTS_TABLE).read_text(encoding="utf-8").splitlines()) == 4

    assert main(base + ["report", "--plots"]) == EXIT_OK
    assert (out / "report_table.csv").exists()
    assert list((out / "plots").glob("*.png"))
