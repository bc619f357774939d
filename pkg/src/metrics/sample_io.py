from typing import List, Sequence
from pathlib import Path

from pydantic import ValidationError

from src.metrics.metrics_schema import ContentSample
from src.utils.artifact_manager import ArtifactError, ArtifactManager


def write_samples(samples: Sequence[ContentSample], path: str | Path) -> int:
    """Writes content samples as JSONL, one team and winrate per line."""
    path = Path(path)
    return ArtifactManager(path.parent).write_jsonl(
        path.name, (sample.model_dump(mode="json") for sample in samples)
    )


def load_samples(path: str | Path) -> List[ContentSample]:
    """
    Reads content samples written by write_samples.

    Raises:
        ArtifactError: If the file is missing or a line is not a valid sample.
    """
    path = Path(path)
    samples = []
    for line_no, record in enumerate(ArtifactManager(path.parent).read_jsonl(path.name), start=1):
        try:
            samples.append(ContentSample.model_validate(record))
        except ValidationError as e:
            raise ArtifactError(f"Invalid content sample on line {line_no} of {path}: {e}") from e
    return samples
