from typing import Dict, List, Optional, Sequence
from logging import getLogger
import re

import numpy as np

from src.pipeline.llm_backend import LlmBackend
from src.pipeline.pipeline_schema import (
    AlignmentIteration,
    InsightSet,
    PipelineConfig,
    PipelineMode,
    PipelineTranscript,
    ProgramRecord,
)
from src.pipeline.prompt_builder import (
    feedback_conversation,
    initial_program_conversation,
    insight_conversation,
    repair_message,
    revision_conversation,
)
from src.reward_dsl.ast_nodes import RewardProgram
from src.reward_dsl.evaluator import ModuleEvalReport, evaluate_batch
from src.reward_dsl.lexer import ParseError
from src.reward_dsl.parser import parse_program
from src.reward_dsl.printer import print_program
from src.reward_dsl.validator import validate
from src.simulator.game_schema import PlaytestRow
from src.simulator.log_collector import load_log_dataset
from src.utils.artifact_manager import ArtifactManager

logger = getLogger(__name__)

TRANSCRIPT_NAME = "transcript.json"
FINAL_PROGRAM_NAME = "final_program.rwd"

_NUMBERED_LINE = re.compile(r"^\s*(?:\*\*)?\d+\s*[.)]\s*(?:\*\*)?\s*(.*\S)\s*$")
_CODE_BLOCK = re.compile(r"```[A-Za-z0-9_+-]*[ \t]*\n(.*?)```", re.DOTALL)

INSIGHT_REPROMPT = (
    "I could not find a numbered list in your answer. Answer again with the insights "
    "as a numbered list, one insight per line, starting with '1.'."
)


class PipelineError(Exception):
    """Custom exception for reward-design pipeline failures."""

    def __init__(self, message: str, transcript: Optional[PipelineTranscript] = None):
        self.transcript = transcript
        super().__init__(message)


class InsightExtractionError(PipelineError):
    """Custom exception for responses without a usable insight list."""

    pass


class ProgramSynthesisError(PipelineError):
    """Raised when no valid program is produced within the retry limit."""

    def __init__(self, stage: str, attempts: int, diagnostics: List[str]):
        self.stage = stage
        self.attempts = attempts
        self.diagnostics = diagnostics
        summary = "; ".join(diagnostics[:5])
        super().__init__(f"{stage}: no valid program after {attempts} attempts: {summary}")


def extract_numbered_items(text: str) -> List[str]:
    """Returns the items of every numbered line ("1. ...", "2) ...") in order."""
    items = []
    for line in text.splitlines():
        found = _NUMBERED_LINE.match(line)
        if found:
            items.append(found.group(1).strip().strip("*").strip())
    return [item for item in items if item]


def extract_program_text(response: str) -> str:
    """Unwraps the first fenced code block of a response, if any."""
    found = _CODE_BLOCK.search(response)
    return found.group(1) if found else response


def generate_insights(backend: LlmBackend, config: PipelineConfig) -> InsightSet:
    """
    Elicits design insights as a numbered list.

    Args:
        backend: Language-model backend.
        config: Pipeline configuration.

    Returns:
        InsightSet: At least one insight, each capped at config.insight_max_chars.

    Raises:
        InsightExtractionError: If neither the answer nor one reprompt holds a
            numbered list.
        LlmBackendError: If the backend fails.
    """
    conversation = insight_conversation(config)
    response = backend.complete(conversation, stage="insights")
    items = extract_numbered_items(response)
    if not items:
        logger.warning("No numbered insights in the response, reprompting once")
        conversation = conversation + [
            {"role": "assistant", "content": response},
            {"role": "user", "content": INSIGHT_REPROMPT},
        ]
        response = backend.complete(conversation, stage="insights-retry")
        items = extract_numbered_items(response)
    if not items:
        raise InsightExtractionError("No numbered insight list could be extracted after one reprompt")

    if len(items) > config.max_insights:
        logger.warning(f"Keeping the first {config.max_insights} of {len(items)} insights")
        items = items[: config.max_insights]
    capped = []
    for item in items:
        if len(item) > config.insight_max_chars:
            logger.warning(f"Insight truncated to {config.insight_max_chars} characters")
            item = item[: config.insight_max_chars].rstrip()
        capped.append(item)
    logger.info(f"Extracted {len(capped)} design insights")
    return InsightSet(insights=capped)


def _synthesize(
    backend: LlmBackend,
    conversation: List[Dict[str, str]],
    config: PipelineConfig,
    stage: str,
    name: str,
) -> RewardProgram:
    problems: List[str] = []
    for attempt in range(config.retry_limit + 1):
        label = stage if attempt == 0 else f"{stage}-retry"
        response = backend.complete(conversation, stage=label)
        text = extract_program_text(response)
        try:
            program = parse_program(text, name=name)
        except ParseError as e:
            problems = [f"syntax error at {e}"]
        else:
            diagnostics = validate(program, config.constraints)
            if not diagnostics:
                return program
            problems = [str(diagnostic) for diagnostic in diagnostics]

        if attempt < config.retry_limit:
            logger.warning(
                f"{stage}: attempt {attempt + 1} rejected ({len(problems)} problems), "
                f"retrying: {problems[0]}"
            )
            conversation = conversation + [
                {"role": "assistant", "content": response},
                repair_message(config, problems),
            ]
    raise ProgramSynthesisError(stage, config.retry_limit + 1, problems)


def generate_initial_program(
    backend: LlmBackend, insights: InsightSet, config: PipelineConfig
) -> RewardProgram:
    """
    Synthesizes the initial reward program from the insights.

    Args:
        backend: Language-model backend.
        insights: Design insights, one intended module each.
        config: Pipeline configuration; retry_limit bounds the repair reprompts.

    Returns:
        RewardProgram: A program that parses and validates.

    Raises:
        ProgramSynthesisError: Carrying the last diagnostics after
            retry_limit + 1 failed attempts.
    """
    conversation = initial_program_conversation(config, insights)
    program = _synthesize(backend, conversation, config, "initial-program", "R0")
    logger.info(f"Initial program accepted with modules {list(program.module_names)}")
    return program


def sample_alignment_rows(
    dataset: Sequence[PlaytestRow], m: int, seed: int
) -> List[PlaytestRow]:
    """
    Samples m rows without replacement.

    Args:
        dataset: Collected playtest rows.
        m: Sample size; m == len(dataset) returns a shuffled copy.
        seed: Sampling seed.

    Returns:
        List[PlaytestRow]: The sampled rows.

    Raises:
        PipelineError: If the dataset holds fewer than m rows or m < 1.
    """
    if m < 1:
        raise PipelineError(f"m must be ≥ 1, got {m}")
    if len(dataset) < m:
        raise PipelineError(f"dataset has {len(dataset)} rows, cannot sample {m}")
    rng = np.random.default_rng(seed)
    indices = rng.choice(len(dataset), size=m, replace=False)
    return [dataset[int(index)] for index in indices]


def generate_feedback(
    backend: LlmBackend,
    program: RewardProgram,
    report: ModuleEvalReport,
    config: PipelineConfig,
) -> str:
    """
    Asks for a single feedback on the current program and its evaluation report.

    Returns:
        str: The feedback text, stripped.

    Raises:
        PipelineError: If the response is empty.
    """
    response = backend.complete(feedback_conversation(config, program, report), stage="feedback")
    feedback = response.strip()
    if not feedback:
        raise PipelineError("Backend returned an empty feedback")
    return feedback


def revise_program(
    backend: LlmBackend, program: RewardProgram, feedback: str, config: PipelineConfig
) -> RewardProgram:
    """
    Produces the next program from the current one and a feedback.

    Raises:
        ProgramSynthesisError: After retry_limit + 1 failed attempts.
    """
    conversation = revision_conversation(config, program, feedback)
    name = f"R{int(program.name[1:]) + 1}" if program.name[1:].isdigit() else program.name
    return _synthesize(backend, conversation, config, "revision", name)


def program_record(program: RewardProgram) -> ProgramRecord:
    return ProgramRecord(
        name=program.name,
        source=print_program(program),
        modules=list(program.module_names),
        weights=[module.weight for module in program.modules],
    )


def _persist(
    transcript: PipelineTranscript,
    output_dir: Optional[str],
    final_program: Optional[RewardProgram] = None,
) -> None:
    if not output_dir:
        return
    manager = ArtifactManager(output_dir)
    manager.write_json(TRANSCRIPT_NAME, transcript.model_dump(mode="json"))
    if final_program is not None:
        manager.write_text(FINAL_PROGRAM_NAME, print_program(final_program))


def run_pipeline(
    backend: LlmBackend,
    config: PipelineConfig,
    dataset: Optional[Sequence[PlaytestRow]] = None,
) -> PipelineTranscript:
    """
    Runs insight generation, initial synthesis and, in cot mode, n_align cycles of
    evaluate, feedback and revise on one fixed sample of log rows.

    Args:
        backend: Language-model backend.
        config: Pipeline configuration.
        dataset: Playtest rows; loaded from config.log_dataset_path when omitted.

    Returns:
        PipelineTranscript: Completed transcript, also written to config.output_dir
        together with the final program when an output directory is set.

    Raises:
        PipelineError: On any stage failure, after the partial transcript is flushed.
    """
    transcript = PipelineTranscript(mode=config.mode, prompt_version=config.prompt_version)
    final_program = None
    logger.info("=" * 60)
    logger.info(f"REWARD DESIGN ({config.mode.value}, n_align={config.n_align})")
    logger.info("=" * 60)
    try:
        if config.mode == PipelineMode.COT and dataset is None:
            if not config.log_dataset_path:
                raise PipelineError("cot mode needs log_dataset_path or a dataset")
            dataset = load_log_dataset(config.log_dataset_path)
            logger.info(f"Loaded {len(dataset)} log rows from {config.log_dataset_path}")

        insights = generate_insights(backend, config)
        transcript.insights = insights.insights
        program = generate_initial_program(backend, insights, config)
        transcript.initial_program = program_record(program)

        if config.mode == PipelineMode.COT:
            rows = sample_alignment_rows(dataset, config.m_rows, config.rng_seed)
            transcript.alignment_row_seeds = [row.seed for row in rows]
            for index in range(config.n_align):
                report = evaluate_batch(program, rows, config.constraints)
                feedback = generate_feedback(backend, program, report, config)
                transcript.iterations.append(
                    AlignmentIteration(
                        program_source=print_program(program),
                        eval_report=report,
                        feedback=feedback,
                    )
                )
                program = revise_program(backend, program, feedback, config)
                logger.info(
                    f"Alignment iteration {index + 1}/{config.n_align}: "
                    f"range_violations={report.range_violations}/{report.n_rows}, "
                    f"error_rows={report.error_rows.count}"
                )
            transcript.final_eval_report = evaluate_batch(program, rows, config.constraints)

        final_program = program
        transcript.final_program = program_record(program)
        transcript.status = "completed"
    except Exception as e:
        transcript.status = "failed"
        transcript.error = f"{type(e).__name__}: {e}"
        transcript.backend_call_log = list(backend.call_log)
        logger.error(f"Reward design failed: {transcript.error}")
        try:
            _persist(transcript, config.output_dir)
        except Exception as persist_error:
            logger.error(f"Could not flush the partial transcript: {persist_error}")
        if isinstance(e, PipelineError):
            e.transcript = transcript
            raise
        raise PipelineError(transcript.error, transcript) from e

    transcript.backend_call_log = list(backend.call_log)
    _persist(transcript, config.output_dir, final_program)
    logger.info(
        f"Reward design finished after {backend.call_count} backend calls; "
        f"final modules {list(final_program.module_names)}"
    )
    return transcript
