import json

import numpy as np
import pytest
import requests

from src.pipeline.alignment_service import (
    FINAL_PROGRAM_NAME,
    TRANSCRIPT_NAME,
    InsightExtractionError,
    PipelineError,
    ProgramSynthesisError,
    extract_numbered_items,
    extract_program_text,
    generate_feedback,
    generate_initial_program,
    generate_insights,
    revise_program,
    run_pipeline,
    sample_alignment_rows,
)
from src.pipeline.canned_designer import CANNED_INSIGHTS, canned_designer, canned_program
from src.pipeline.llm_backend import (
    API_KEY_ENV,
    BackendSettings,
    HttpBackend,
    LlmBackendError,
    RecordingBackend,
    ReplayBackend,
    ScriptedBackend,
    create_backend,
)
from src.pipeline.pipeline_schema import InsightSet, PipelineConfig, PipelineMode
from src.pipeline.prompt_builder import build_feedback_prompt, build_insight_prompt, default_env_description
from src.reward_dsl.evaluator import evaluate_batch
from src.reward_dsl.parser import parse_program
from src.reward_dsl.printer import print_program
from src.reward_dsl.validator import validate
from src.simulator.game_schema import CATALOG_VARIABLES
from tests.conftest import make_row

INVALID_PROGRAM = "```\nmodule heal weight 1:\n  heal_done_p1 / 10\n```"


@pytest.fixture
def dataset():
    rng = np.random.default_rng(17)
    return [
        make_row(seed=i, **{name: float(rng.uniform(0, 300)) for name in CATALOG_VARIABLES})
        for i in range(60)
    ]


@pytest.fixture
def config(constraints, tmp_path):
    return PipelineConfig(
        env_description=default_env_description(),
        constraints=constraints,
        n_align=5,
        m_rows=20,
        mode=PipelineMode.COT,
        rng_seed=1,
        output_dir=str(tmp_path / "design"),
    )


def canned(weights=(0.4, 0.3, 0.3)):
    return parse_program(extract_program_text(canned_program(weights)), name="R0")


def test_insight_prompt_lists_catalog_and_range(config):
    prompt = build_insight_prompt(config)
    assert all(name in prompt for name in CATALOG_VARIABLES)
    assert "-1" in prompt
    assert "numbered list" in prompt
    assert prompt == build_insight_prompt(config)


def test_extract_numbered_items():
    text = "Sure!\n1. first\n2) second\n**3.** third\nnot a list line"
    assert extract_numbered_items(text) == ["first", "second", "third"]
    assert extract_numbered_items("no numbers here") == []


def test_generate_insights_from_canned_answer(config):
    backend = ScriptedBackend([CANNED_INSIGHTS])
    insights = generate_insights(backend, config)
    assert len(insights.insights) == 3
    assert backend.call_count == 1


def test_insights_reprompt_once_then_fail(config):
    backend = ScriptedBackend(["", "still nothing"])
    with pytest.raises(InsightExtractionError):
        generate_insights(backend, config)
    assert backend.call_count == 2
    assert [call.role for call in backend.call_log] == ["insights", "insights-retry"]


def test_long_insights_are_truncated(config):
    backend = ScriptedBackend(["1. " + "x" * 2000])
    insights = generate_insights(backend, config)
    assert len(insights.insights[0]) == config.insight_max_chars


def test_initial_program_is_valid(config):
    insights = InsightSet(insights=extract_numbered_items(CANNED_INSIGHTS))
    program = generate_initial_program(ScriptedBackend([canned_program()]), insights, config)
    assert program.name == "R0"
    assert program.module_names == ("survival", "shared_damage", "role_split")
    assert validate(program, config.constraints) == []


def test_invalid_program_is_repaired_on_retry(config):
    backend = ScriptedBackend([INVALID_PROGRAM, canned_program()])
    insights = InsightSet(insights=["one"])
    program = generate_initial_program(backend, insights, config)
    assert backend.call_count == 2
    assert [call.role for call in backend.call_log] == ["initial-program", "initial-program-retry"]
    assert "heal_done_p1" in backend.conversations[1][-1]["content"]
    assert len(program.modules) == 3


def test_persistently_invalid_program_exhausts_the_retries(config):
    backend = ScriptedBackend(lambda conversation: INVALID_PROGRAM)
    with pytest.raises(ProgramSynthesisError) as caught:
        generate_initial_program(backend, InsightSet(insights=["one"]), config)
    assert caught.value.attempts == config.retry_limit + 1 == 4
    assert backend.call_count == 4
    assert any("heal_done_p1" in d for d in caught.value.diagnostics)


def test_syntax_errors_also_count_as_attempts(config):
    backend = ScriptedBackend(["```\nmodule x weight:\n```", canned_program()])
    generate_initial_program(backend, InsightSet(insights=["one"]), config)
    assert "syntax error" in backend.conversations[1][-1]["content"]


def test_sample_alignment_rows(dataset):
    rows = sample_alignment_rows(dataset, 20, seed=3)
    assert len({row.seed for row in rows}) == 20
    assert rows == sample_alignment_rows(dataset, 20, seed=3)
    everything = sample_alignment_rows(dataset, len(dataset), seed=3)
    assert sorted(row.seed for row in everything) == list(range(len(dataset)))


def test_sample_alignment_rows_needs_enough_rows(dataset):
    with pytest.raises(PipelineError):
        sample_alignment_rows(dataset[:5], 20, seed=0)


def test_feedback_prompt_carries_program_and_statistics(config, dataset):
    program = canned()
    report = evaluate_batch(program, dataset[:20], config.constraints)
    prompt = build_feedback_prompt(config, program, report)
    assert all(name in prompt for name in program.module_names)
    assert report.to_text() in prompt
    assert print_program(program).strip() in prompt


def test_feedback_is_returned_verbatim(config, dataset):
    program = canned()
    report = evaluate_batch(program, dataset[:20], config.constraints)
    feedback = generate_feedback(ScriptedBackend(["  Lower survival.  "]), program, report, config)
    assert feedback == "Lower survival."
    with pytest.raises(PipelineError):
        generate_feedback(ScriptedBackend(["   "]), program, report, config)


def test_revision_changes_only_the_requested_weight(config):
    program = canned()
    revised = revise_program(
        ScriptedBackend([canned_program((0.5, 0.3, 0.3))]), program, "raise survival", config
    )
    assert revised.name == "R1"
    assert revised.module_names == program.module_names
    for before, after in zip(program.modules, revised.modules):
        assert before.body == after.body
    assert [m.weight for m in revised.modules] == [0.5, 0.3, 0.3]


def test_cot_run_makes_the_expected_calls(config, dataset, tmp_path):
    backend = ScriptedBackend(canned_designer)
    transcript = run_pipeline(backend, config, dataset)
    assert transcript.status == "completed"
    assert len(transcript.iterations) == 5
    assert backend.call_count == 2 + 2 * 5
    assert len(transcript.alignment_row_seeds) == 20
    for iteration in transcript.iterations:
        assert validate(parse_program(iteration.program_source), config.constraints) == []
        assert iteration.feedback
    assert transcript.final_program.weights == [0.34, 0.33, 0.33]
    assert transcript.final_eval_report.n_rows == 20

    out = tmp_path / "design"
    saved = json.loads((out / TRANSCRIPT_NAME).read_text(encoding="utf-8"))
    assert saved["status"] == "completed"
    assert len(saved["backend_call_log"]) == 12
    assert (out / FINAL_PROGRAM_NAME).read_text(encoding="utf-8") == transcript.final_program.source


def test_io_run_skips_alignment(constraints, dataset):
    config = PipelineConfig(
        env_description=default_env_description(),
        constraints=constraints,
        n_align=5,
        mode=PipelineMode.IO,
    )
    assert config.n_align == 0
    backend = ScriptedBackend(canned_designer)
    transcript = run_pipeline(backend, config)
    assert transcript.iterations == []
    assert backend.call_count == 2
    assert transcript.final_program.modules == ["survival", "shared_damage", "role_split"]


def test_cot_run_without_rows_fails(constraints):
    config = PipelineConfig(env_description="A raid.", constraints=constraints)
    with pytest.raises(PipelineError, match="log_dataset_path"):
        run_pipeline(ScriptedBackend(canned_designer), config)


def test_failed_run_flushes_a_partial_transcript(config, dataset, tmp_path):
    backend = ScriptedBackend([CANNED_INSIGHTS] + [INVALID_PROGRAM] * 4)
    with pytest.raises(ProgramSynthesisError) as caught:
        run_pipeline(backend, config, dataset)
    assert caught.value.transcript.status == "failed"
    saved = json.loads((tmp_path / "design" / TRANSCRIPT_NAME).read_text(encoding="utf-8"))
    assert saved["status"] == "failed"
    assert len(saved["insights"]) == 3
    assert len(saved["backend_call_log"]) == 5
    assert not (tmp_path / "design" / FINAL_PROGRAM_NAME).exists()


def test_replayed_session_is_reproducible(constraints, dataset, recorded_session, tmp_path):
    sources = []
    for name in ("first", "second"):
        config = PipelineConfig(
            env_description=default_env_description(),
            constraints=constraints,
            rng_seed=9,
            output_dir=str(tmp_path / name),
        )
        transcript = run_pipeline(ReplayBackend.from_file(recorded_session), config, dataset)
        assert len(transcript.iterations) == 5
        assert transcript.final_program.modules == [
            "survival",
            "shared_damage",
            "role_split",
            "team_alive",
        ]
        sources.append((tmp_path / name / FINAL_PROGRAM_NAME).read_text(encoding="utf-8"))
    assert sources[0] == sources[1]


def test_replay_exhaustion_is_a_backend_error():
    backend = ReplayBackend(["only one"])
    backend.complete([{"role": "user", "content": "a"}])
    with pytest.raises(LlmBackendError, match="exhausted"):
        backend.complete([{"role": "user", "content": "b"}])


def test_replay_file_must_hold_strings(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"not": "a list"}), encoding="utf-8")
    with pytest.raises(LlmBackendError):
        ReplayBackend.from_file(path)
    with pytest.raises(LlmBackendError):
        ReplayBackend.from_file(tmp_path / "missing.json")


def test_recorded_responses_replay_identically(tmp_path):
    path = tmp_path / "session.json"
    recorder = RecordingBackend(ScriptedBackend(["a", "b"]), path)
    conversation = [{"role": "user", "content": "hi"}]
    answers = [recorder.complete(conversation), recorder.complete(conversation)]
    replay = ReplayBackend.from_file(path)
    assert [replay.complete(conversation), replay.complete(conversation)] == answers


def test_create_backend_kinds(recorded_session):
    assert isinstance(create_backend(BackendSettings(kind="scripted")), ScriptedBackend)
    replay = create_backend(BackendSettings(kind="replay", replay_path=str(recorded_session)))
    assert isinstance(replay, ReplayBackend)
    with pytest.raises(LlmBackendError):
        create_backend(BackendSettings(kind="replay"))
    with pytest.raises(LlmBackendError, match="unknown"):
        create_backend(BackendSettings(kind="carrier-pigeon"))


def test_http_backend_needs_an_api_key(monkeypatch):
    monkeypatch.delenv(API_KEY_ENV, raising=False)
    with pytest.raises(LlmBackendError, match=API_KEY_ENV):
        HttpBackend(BackendSettings(kind="http"))


class FakeResponse:
    def __init__(self, status_code, body=None):
        self.status_code = status_code
        self.body = body
        self.text = json.dumps(body) if body is not None else "server error"

    def raise_for_status(self):
        if self.status_code >= 400:
            raise requests.exceptions.HTTPError(f"HTTP {self.status_code}")

    def json(self):
        return self.body


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []

    def post(self, url, headers=None, json=None, timeout=None):
        self.requests.append({"url": url, "headers": headers, "json": json})
        return self.responses.pop(0)


def test_http_backend_retries_server_errors(monkeypatch):
    monkeypatch.setattr("src.pipeline.llm_backend.time.sleep", lambda seconds: None)
    backend = HttpBackend(BackendSettings(kind="http", max_retries=2), api_key="test-key")
    ok = FakeResponse(200, {"choices": [{"message": {"content": "1. insight"}}]})
    backend.session = FakeSession([FakeResponse(503), ok])
    assert backend.complete([{"role": "user", "content": "hi"}], stage="insights") == "1. insight"
    assert len(backend.session.requests) == 2
    sent = backend.session.requests[0]
    assert sent["url"].endswith("/chat/completions")
    assert sent["headers"]["Authorization"] == "Bearer test-key"
    assert sent["json"]["messages"] == [{"role": "user", "content": "hi"}]
    assert backend.call_count == 1


def test_http_backend_gives_up_after_the_retries(monkeypatch):
    monkeypatch.setattr("src.pipeline.llm_backend.time.sleep", lambda seconds: None)
    backend = HttpBackend(BackendSettings(kind="http", max_retries=1), api_key="test-key")
    backend.session = FakeSession([FakeResponse(500), FakeResponse(429)])
    with pytest.raises(LlmBackendError, match="2 attempts"):
        backend.complete([{"role": "user", "content": "hi"}])
    assert backend.call_count == 0


def test_http_backend_rejects_malformed_payload():
    backend = HttpBackend(BackendSettings(kind="http"), api_key="test-key")
    backend.session = FakeSession([FakeResponse(200, {"choices": []})])
    with pytest.raises(LlmBackendError, match="payload"):
        backend.complete([{"role": "user", "content": "hi"}])
