"""Chat-completion endpoints for the agent extraction route.

Two implementations of one interface: an HTTP client speaking the de-facto
open chat-completion wire protocol (model + ordered role/content messages +
temperature in, first choice's content out), and a scripted endpoint that
replays canned responses from fixture files keyed by a request hash, so the
whole pipeline runs offline and deterministically.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import requests

DEFAULT_CREDENTIAL_ENV = "LICENSECHAIN_API_KEY"


@dataclass(frozen=True)
class AgentEndpointConfig:
    base_url: str
    model: str
    credential_env: str = DEFAULT_CREDENTIAL_ENV
    timeout: float = 60.0
    max_retries: int = 2
    temperature: float = 0.0

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[dict, ...]
    temperature: float = 0.0

    def to_payload(self) -> dict:
        return {
            "model": self.model,
            "messages": [dict(m) for m in self.messages],
            "temperature": self.temperature,
        }


def request_key(request: ChatRequest) -> str:
    """Stable hash of a chat request; scripted fixtures are filed under it."""
    canonical = json.dumps(request.to_payload(), sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


class EndpointError(RuntimeError):
    pass


class TransportError(EndpointError):
    """Endpoint unreachable or persistently failing after retries."""


class ScriptedResponseMissing(EndpointError):
    def __init__(self, key: str, request: ChatRequest):
        self.key = key
        self.request = request
        super().__init__(f"no scripted response for request key {key} (model={request.model})")


class ChatEndpoint(Protocol):
    def complete(self, request: ChatRequest) -> str: ...


@dataclass
class HttpChatEndpoint:
    """Minimal chat-completion client; asserts only on the fields it names."""

    config: AgentEndpointConfig

    def complete(self, request: ChatRequest) -> str:
        url = self.config.base_url.rstrip("/") + "/chat/completions"
        headers = {"Content-Type": "application/json"}
        credential = os.environ.get(self.config.credential_env, "")
        if credential:
            headers["Authorization"] = f"Bearer {credential}"
        last_error: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            try:
                response = requests.post(
                    url,
                    json=request.to_payload(),
                    headers=headers,
                    timeout=self.config.timeout,
                )
                if response.status_code in (429,) or response.status_code >= 500:
                    last_error = EndpointError(f"HTTP {response.status_code} from {url}")
                else:
                    response.raise_for_status()
                    body = response.json()
                    return body["choices"][0]["message"]["content"]
            except (requests.RequestException, KeyError, IndexError, ValueError) as exc:
                last_error = exc
            if attempt < self.config.max_retries:
                time.sleep(min(2.0**attempt * 0.5, 8.0))
        raise TransportError(f"endpoint {url} failed after {self.config.max_retries + 1} attempts: {last_error}")


@dataclass
class ScriptedChatEndpoint:
    """Replays responses from <fixtures>/<request_key>.txt.

    Missing fixtures raise with the key so test authors can file the canned
    response; `record` turns unanswered requests into fixture stubs instead.
    """

    fixtures: Path
    record: bool = False
    calls: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.fixtures = Path(self.fixtures)

    def response_path(self, request: ChatRequest) -> Path:
        return self.fixtures / f"{request_key(request)}.txt"

    def script(self, request: ChatRequest, response: str) -> Path:
        path = self.response_path(request)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(response, encoding="utf-8")
        return path

    def complete(self, request: ChatRequest) -> str:
        key = request_key(request)
        self.calls.append(key)
        path = self.fixtures / f"{key}.txt"
        if not path.exists():
            if self.record:
                self.script(request, "")
            raise ScriptedResponseMissing(key, request)
        return path.read_text(encoding="utf-8")
