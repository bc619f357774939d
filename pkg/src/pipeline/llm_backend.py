from typing import Callable, Dict, List, Optional, Sequence
from abc import ABC, abstractmethod
from datetime import datetime, timezone
from logging import getLogger
from pathlib import Path
import json
import os
import time

import requests
from dotenv import load_dotenv
from pydantic import BaseModel, Field

from src.pipeline.canned_designer import canned_designer

load_dotenv()

API_KEY_ENV = "CHATPCG_API_KEY"

logger = getLogger(__name__)

Conversation = List[Dict[str, str]]


class LlmBackendError(Exception):
    """Custom exception for language-model backend failures."""

    pass


class BackendCall(BaseModel):
    role: str
    prompt_chars: int
    response_chars: int
    timestamp: str


class BackendSettings(BaseModel):
    kind: str = "scripted"
    model: str = "gpt-4-turbo-2024-04-09"
    base_url: str = "https://api.openai.com/v1"
    temperature: float = Field(default=0.7, ge=0.0, le=2.0)
    timeout: float = Field(default=120.0, gt=0)
    max_retries: int = Field(default=3, ge=0)
    replay_path: Optional[str] = None
    record_path: Optional[str] = None


class LlmBackend(ABC):
    """Chat-completion backend: one text response per call, every call logged."""

    def __init__(self):
        self.call_log: List[BackendCall] = []

    @property
    def call_count(self) -> int:
        return len(self.call_log)

    def complete(self, conversation: Conversation, stage: str = "user") -> str:
        """
        Sends a conversation and returns the model's reply.

        Args:
            conversation: Messages as {"role", "content"} dicts.
            stage: Pipeline stage label recorded in the call log.

        Returns:
            str: The response text.

        Raises:
            LlmBackendError: If the backend cannot produce a response.
        """
        response = self._respond(conversation)
        if not isinstance(response, str):
            raise LlmBackendError(f"backend returned {type(response).__name__}, expected text")
        self.call_log.append(
            BackendCall(
                role=stage,
                prompt_chars=sum(len(message["content"]) for message in conversation),
                response_chars=len(response),
                timestamp=datetime.now(timezone.utc).isoformat(),
            )
        )
        logger.info(
            f"Backend call #{self.call_count} ({stage}): "
            f"{self.call_log[-1].prompt_chars} prompt chars -> {len(response)} response chars"
        )
        return response

    @abstractmethod
    def _respond(self, conversation: Conversation) -> str: ...


class HttpBackend(LlmBackend):
    """OpenAI-compatible chat-completion endpoint over HTTP."""

    def __init__(self, settings: BackendSettings, api_key: Optional[str] = None):
        super().__init__()
        self.settings = settings
        self.api_key = api_key or os.getenv(API_KEY_ENV)
        if not self.api_key:
            raise LlmBackendError(f"{API_KEY_ENV} is not set; the http backend needs it")
        self.session = requests.Session()

    def _respond(self, conversation: Conversation) -> str:
        url = f"{self.settings.base_url.rstrip('/')}/chat/completions"
        payload = {
            "model": self.settings.model,
            "messages": conversation,
            "temperature": self.settings.temperature,
        }
        headers = {
            "Authorization": f"Bearer {self.api_key}",
            "Content-Type": "application/json",
        }
        last_error = None
        for attempt in range(self.settings.max_retries + 1):
            try:
                response = self.session.post(
                    url, headers=headers, json=payload, timeout=self.settings.timeout
                )
                if response.status_code == 429 or response.status_code >= 500:
                    raise LlmBackendError(f"HTTP {response.status_code}: {response.text[:200]}")
                response.raise_for_status()
                body = response.json()
                return body["choices"][0]["message"]["content"]
            except (requests.exceptions.RequestException, LlmBackendError) as e:
                last_error = e
                logger.warning(f"Chat completion attempt {attempt + 1} failed: {e}")
                if attempt < self.settings.max_retries:
                    time.sleep(min(2.0**attempt, 30.0))
            except (KeyError, IndexError, TypeError, ValueError) as e:
                raise LlmBackendError(f"Unexpected chat completion payload: {e}") from e
        raise LlmBackendError(
            f"Chat completion failed after {self.settings.max_retries + 1} attempts: {last_error}"
        ) from last_error


class ReplayBackend(LlmBackend):
    """Plays back recorded responses in call order."""

    def __init__(self, responses: Sequence[str]):
        super().__init__()
        self.responses = list(responses)
        self.position = 0

    @classmethod
    def from_file(cls, path: str | Path) -> "ReplayBackend":
        """
        Loads a replay file: a JSON array of response strings.

        Raises:
            LlmBackendError: If the file is missing or malformed.
        """
        try:
            responses = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise LlmBackendError(f"Cannot load replay file {path}: {e}") from e
        if not isinstance(responses, list) or not all(isinstance(r, str) for r in responses):
            raise LlmBackendError(f"Replay file {path} must hold a JSON array of strings")
        return cls(responses)

    def _respond(self, conversation: Conversation) -> str:
        if self.position >= len(self.responses):
            raise LlmBackendError(
                f"Replay exhausted after {len(self.responses)} responses"
            )
        response = self.responses[self.position]
        self.position += 1
        return response


class ScriptedBackend(LlmBackend):
    """Deterministic canned responses: a fixed sequence or a function of the conversation."""

    def __init__(self, script: Sequence[str] | Callable[[Conversation], str]):
        super().__init__()
        self.script = script if callable(script) else list(script)
        self.position = 0
        self.conversations: List[Conversation] = []

    def _respond(self, conversation: Conversation) -> str:
        self.conversations.append([dict(message) for message in conversation])
        if callable(self.script):
            return self.script(conversation)
        if self.position >= len(self.script):
            raise LlmBackendError(f"Script exhausted after {len(self.script)} responses")
        response = self.script[self.position]
        self.position += 1
        return response


class RecordingBackend(LlmBackend):
    """Wraps a backend and writes every response to a replay file as it arrives."""

    def __init__(self, inner: LlmBackend, path: str | Path):
        super().__init__()
        self.inner = inner
        self.path = Path(path)
        self.recorded: List[str] = []

    def _respond(self, conversation: Conversation) -> str:
        response = self.inner._respond(conversation)
        self.recorded.append(response)
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(json.dumps(self.recorded, indent=2), encoding="utf-8")
        except OSError as e:
            raise LlmBackendError(f"Cannot write replay file {self.path}: {e}") from e
        return response


def create_backend(settings: BackendSettings) -> LlmBackend:
    """
    Builds the backend named by settings.kind.

    Args:
        settings: Backend settings; replay needs replay_path, record_path wraps
            the http backend in a recorder, scripted answers with canned content.

    Returns:
        LlmBackend: Ready-to-use backend.

    Raises:
        LlmBackendError: For unknown kinds or missing files.
    """
    if settings.kind == "http":
        backend: LlmBackend = HttpBackend(settings)
        if settings.record_path:
            backend = RecordingBackend(backend, settings.record_path)
        return backend
    if settings.kind == "replay":
        if not settings.replay_path:
            raise LlmBackendError("replay backend needs replay_path")
        return ReplayBackend.from_file(settings.replay_path)
    if settings.kind == "scripted":
        return ScriptedBackend(canned_designer)
    raise LlmBackendError(f"unknown backend kind {settings.kind!r}")
