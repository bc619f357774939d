from src.metrics.metrics_schema import ContentSample, EvalReport, MetricsError
from src.metrics.pca import PcaResult, pca_first_component
from src.metrics.sample_io import load_samples, write_samples
from src.metrics.scores import (
    DEFAULT_THRESHOLD,
    controllability,
    controllability_sd,
    diversity,
    diversity_with_flag,
    evaluate_generator,
    team_build_score,
    valid_filter,
)
