from typing import Dict, List, Sequence
from functools import lru_cache
from pathlib import Path
from string import Template

from src.pipeline.pipeline_schema import InsightSet, PipelineConfig
from src.reward_dsl.ast_nodes import RewardProgram
from src.reward_dsl.evaluator import ModuleEvalReport
from src.reward_dsl.printer import format_number, print_program

PROMPT_ROOT = Path(__file__).parent / "prompts"


class PromptTemplateError(Exception):
    """Custom exception for missing or malformed prompt templates."""

    pass


@lru_cache(maxsize=None)
def load_template(name: str, version: str = "v1") -> Template:
    path = PROMPT_ROOT / version / f"{name}.txt"
    try:
        return Template(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise PromptTemplateError(f"Prompt template {version}/{name} not found: {e}") from e


def render(name: str, version: str = "v1", **values: str) -> str:
    """
    Fills a prompt template.

    Raises:
        PromptTemplateError: If the template references a value not supplied.
    """
    try:
        return load_template(name, version).substitute(**values).strip() + "\n"
    except KeyError as e:
        raise PromptTemplateError(f"Template {version}/{name} needs value {e}") from e


def default_env_description(version: str = "v1") -> str:
    """Game description followed by the role-differentiation passage."""
    return (
        load_template("env_description", version).template.strip()
        + "\n\n"
        + load_template("role_differentiation", version).template.strip()
    )


def _range_values(config: PipelineConfig) -> Dict[str, str]:
    low, high = config.constraints.output_range
    return {"range_low": format_number(low), "range_high": format_number(high)}


def _conversation(config: PipelineConfig, user: str) -> List[Dict[str, str]]:
    return [
        {"role": "system", "content": render("system", config.prompt_version)},
        {"role": "user", "content": user},
    ]


def build_insight_prompt(config: PipelineConfig) -> str:
    """
    Builds the insight-elicitation prompt.

    Args:
        config: Pipeline configuration.

    Returns:
        str: Prompt text with the environment description, the role-differentiation
        passage, every catalog name and the desired output range.
    """
    role_passage = load_template("role_differentiation", config.prompt_version).template.strip()
    # custom descriptions still carry the role passage
    env_description = config.env_description.strip()
    role_text = "" if role_passage in env_description else role_passage
    return render(
        "insight",
        config.prompt_version,
        env_description=env_description,
        role_differentiation=role_text,
        catalog=config.constraints.catalog.describe(),
        max_insights=str(config.max_insights),
        max_chars=str(config.insight_max_chars),
        **_range_values(config),
    )


def insight_conversation(config: PipelineConfig) -> List[Dict[str, str]]:
    return _conversation(config, build_insight_prompt(config))


def initial_program_conversation(
    config: PipelineConfig, insights: InsightSet
) -> List[Dict[str, str]]:
    user = render(
        "initial_program",
        config.prompt_version,
        env_description=config.env_description.strip(),
        language=render("language", config.prompt_version).strip(),
        catalog=config.constraints.catalog.describe(),
        insights=insights.numbered(),
        **_range_values(config),
    )
    return _conversation(config, user)


def repair_message(config: PipelineConfig, problems: Sequence[str]) -> Dict[str, str]:
    listing = "\n".join(f"- {problem}" for problem in problems)
    return {"role": "user", "content": render("repair", config.prompt_version, problems=listing)}


def build_feedback_prompt(
    config: PipelineConfig, program: RewardProgram, report: ModuleEvalReport
) -> str:
    """
    Builds the feedback prompt from the current program and its latest report only.

    Args:
        config: Pipeline configuration.
        program: Program that was evaluated.
        report: Its evaluation over the alignment rows.

    Returns:
        str: Prompt text containing the program source, every module name and
        the full statistics table.
    """
    return render(
        "feedback",
        config.prompt_version,
        n_rows=str(report.n_rows),
        program=print_program(program).strip(),
        module_names=", ".join(program.module_names),
        report=report.to_text(),
        **_range_values(config),
    )


def feedback_conversation(
    config: PipelineConfig, program: RewardProgram, report: ModuleEvalReport
) -> List[Dict[str, str]]:
    return _conversation(config, build_feedback_prompt(config, program, report))


def revision_conversation(
    config: PipelineConfig, program: RewardProgram, feedback: str
) -> List[Dict[str, str]]:
    user = render(
        "revision",
        config.prompt_version,
        language=render("language", config.prompt_version).strip(),
        catalog=config.constraints.catalog.describe(),
        program=print_program(program).strip(),
        feedback=feedback.strip(),
        **_range_values(config),
    )
    return _conversation(config, user)
