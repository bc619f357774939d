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
from src.pipeline.llm_backend import (
    BackendCall,
    BackendSettings,
    HttpBackend,
    LlmBackend,
    LlmBackendError,
    RecordingBackend,
    ReplayBackend,
    ScriptedBackend,
    create_backend,
)
from src.pipeline.pipeline_schema import (
    AlignmentIteration,
    InsightSet,
    PipelineConfig,
    PipelineMode,
    PipelineTranscript,
    ProgramRecord,
)
from src.pipeline.prompt_builder import (
    build_feedback_prompt,
    build_insight_prompt,
    default_env_description,
)
