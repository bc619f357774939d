from src.cli.commands import (
    CliUsageError,
    ReportError,
    cmd_collect_logs,
    cmd_design_reward,
    cmd_evaluate,
    cmd_report,
    cmd_train,
    load_reward_program,
)
from src.cli.main import build_parser, main
from src.cli.run_config import ConfigError, RunConfig, load_run_config
