from typing import Any, Dict, Iterable, List, Optional
from logging import getLogger
from pathlib import Path
from hashlib import sha256
import json

from pandas import DataFrame, read_csv

logger = getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class ArtifactError(Exception):
    """Custom exception for artifact file operations."""

    pass


class ArtifactManager:
    """File-backed artifact store rooted at a run's output directory."""

    def __init__(self, root: str | Path):
        """
        Initialize the ArtifactManager.

        Args:
            root: Output directory. Relative artifact paths resolve against it.
        """
        self.root = Path(root)

    def path(self, name: str | Path) -> Path:
        """
        Resolves an artifact name to an absolute path under the root.

        Args:
            name: Relative or absolute path.

        Returns:
            Path: Resolved path.
        """
        name = Path(name)
        return name if name.is_absolute() else self.root / name

    def _prepare(self, name: str | Path) -> Path:
        full_path = self.path(name)
        try:
            full_path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ArtifactError(f"Cannot create directory {full_path.parent}: {e}") from e
        return full_path

    def write_text(self, name: str | Path, text: str) -> Path:
        """
        Writes a UTF-8 text artifact.

        Args:
            name: Artifact path.
            text: Content.

        Returns:
            Path: Written file.

        Raises:
            ArtifactError: If the write fails.
        """
        full_path = self._prepare(name)
        try:
            full_path.write_text(text, encoding="utf-8")
        except OSError as e:
            raise ArtifactError(f"Failed to write {full_path}: {e}") from e
        logger.info(f"Artifact saved to {full_path}")
        return full_path

    def read_text(self, name: str | Path) -> str:
        full_path = self.path(name)
        try:
            return full_path.read_text(encoding="utf-8")
        except FileNotFoundError as e:
            raise ArtifactError(f"Artifact does not exist: {full_path}") from e
        except (OSError, UnicodeDecodeError) as e:
            raise ArtifactError(f"Failed to read {full_path}: {e}") from e

    def write_json(self, name: str | Path, payload: Any) -> Path:
        """
        Writes an indented JSON artifact.

        Args:
            name: Artifact path.
            payload: JSON-serializable object.

        Returns:
            Path: Written file.

        Raises:
            ArtifactError: If the payload is not serializable or the write fails.
        """
        try:
            text = json.dumps(payload, indent=2, ensure_ascii=False)
        except (TypeError, ValueError) as e:
            raise ArtifactError(f"Payload for {name} is not JSON serializable: {e}") from e
        return self.write_text(name, text + "\n")

    def read_json(self, name: str | Path) -> Any:
        text = self.read_text(name)
        try:
            return json.loads(text)
        except json.JSONDecodeError as e:
            raise ArtifactError(f"Invalid JSON in {self.path(name)}: {e}") from e

    def write_jsonl(self, name: str | Path, records: Iterable[Dict[str, Any]]) -> int:
        """
        Writes one JSON object per line.

        Args:
            name: Artifact path.
            records: Objects to write, in order.

        Returns:
            Number of lines written.

        Raises:
            ArtifactError: If serialization or the write fails.
        """
        full_path = self._prepare(name)
        count = 0
        try:
            with full_path.open("w", encoding="utf-8") as handle:
                for record in records:
                    handle.write(json.dumps(record, ensure_ascii=False))
                    handle.write("\n")
                    count += 1
        except (TypeError, ValueError) as e:
            raise ArtifactError(f"Record {count} of {full_path} is not serializable: {e}") from e
        except OSError as e:
            raise ArtifactError(f"Failed to write {full_path}: {e}") from e
        logger.info(f"{count} records saved to {full_path}")
        return count

    def read_jsonl(self, name: str | Path) -> List[Dict[str, Any]]:
        """
        Reads a JSONL artifact, skipping blank lines.

        Raises:
            ArtifactError: If the file is missing or a line is not valid JSON.
        """
        records = []
        for line_no, line in enumerate(self.read_text(name).splitlines(), start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise ArtifactError(
                    f"Invalid JSON on line {line_no} of {self.path(name)}: {e}"
                ) from e
        return records

    def write_csv(self, name: str | Path, data: DataFrame) -> Path:
        full_path = self._prepare(name)
        try:
            data.to_csv(full_path, index=False)
        except OSError as e:
            raise ArtifactError(f"Failed to write {full_path}: {e}") from e
        logger.info(f"Table saved to {full_path}")
        return full_path

    def append_csv_row(self, name: str | Path, row: Dict[str, Any]) -> Path:
        """
        Appends a row to a CSV table, writing the header on first use.

        Args:
            name: Artifact path.
            row: Column name to value.

        Returns:
            Path: The table file.
        """
        full_path = self._prepare(name)
        try:
            DataFrame([row]).to_csv(
                full_path, mode="a", header=not full_path.exists(), index=False
            )
        except OSError as e:
            raise ArtifactError(f"Failed to append to {full_path}: {e}") from e
        return full_path

    def read_csv(self, name: str | Path) -> DataFrame:
        full_path = self.path(name)
        if not full_path.exists():
            raise ArtifactError(f"Artifact does not exist: {full_path}")
        try:
            return read_csv(full_path)
        except Exception as e:
            raise ArtifactError(f"Failed to read table {full_path}: {e}") from e

    def exists(self, name: str | Path) -> bool:
        return self.path(name).exists()

    def file_hash(self, name: str | Path) -> str:
        """
        Computes the sha256 hex digest of an artifact.

        Raises:
            ArtifactError: If the file cannot be read.
        """
        full_path = self.path(name)
        try:
            return sha256(full_path.read_bytes()).hexdigest()
        except OSError as e:
            raise ArtifactError(f"Cannot hash {full_path}: {e}") from e

    def write_manifest(self, extra: Optional[Dict[str, Any]] = None) -> Path:
        """
        Lists every artifact under the root with its sha256 hash.

        Args:
            extra: Additional top-level fields (command, seed, ...).

        Returns:
            Path: The manifest file.
        """
        files = {}
        if self.root.exists():
            for file_path in sorted(self.root.rglob("*")):
                if file_path.is_file() and file_path.name != MANIFEST_NAME:
                    relative = file_path.relative_to(self.root).as_posix()
                    files[relative] = self.file_hash(file_path.resolve())
        manifest = dict(extra or {})
        manifest["files"] = files
        return self.write_json(MANIFEST_NAME, manifest)
