"""Chat-completion gateway: one blocking call surface, two backends.

The remote backend speaks JSON-over-HTTP in either an OpenAI-style or a
Gemini-style wire shape. The stub backend answers from a fixtures file and
is byte-deterministic, which is what every offline test and the reproducible
demo mode run on.

Transient failures (HTTP 429, any 5xx, timeouts, dropped connections) are
retried with exponential backoff and full jitter: base 1s, factor 2, at
most 4 attempts in total. Anything else fails immediately.
"""

from __future__ import annotations

import json
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import httpx

RETRY_BASE_SECONDS = 1.0
RETRY_FACTOR = 2.0
MAX_ATTEMPTS = 4
DEFAULT_PARALLELISM = 8


class GatewayError(Exception):
    pass


class GatewayUnavailableError(GatewayError):
    """All retry attempts exhausted against a transient failure."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class NonTransientError(GatewayError):
    """Backend rejected the request in a way retrying cannot fix."""


class ProtocolError(GatewayError):
    """Backend answered, but not in the expected shape."""

    def __init__(self, message: str, raw_body: str):
        super().__init__(f"{message}; raw body: {raw_body[:500]!r}")
        self.raw_body = raw_body


class StubFixtureMissing(NonTransientError):
    def __init__(self, key: str):
        super().__init__(f"stub backend has no fixture for request key {key!r}")
        self.key = key


class _TransientFailure(Exception):
    """Internal marker; never escapes the gateway."""


@dataclass(frozen=True)
class ChatRequest:
    system_prompt: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_output_tokens: int = 1024
    # Routing key for the stub backend, stamped by prompt rendering
    # (e.g. "expand:<question>"). Ignored by remote backends.
    request_key: str = ""

    def __post_init__(self):
        object.__setattr__(self, "messages", tuple(tuple(m) for m in self.messages))
        if not self.messages:
            raise ValueError("messages must be non-empty")
        for role, _ in self.messages:
            if role not in ("user", "assistant"):
                raise ValueError(f"bad role {role!r}")
        if self.messages[-1][0] != "user":
            raise ValueError("last message must come from the user")
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature out of range")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: str
    latency: float
    backend_id: str
    attempts: int = 1

    def __post_init__(self):
        if self.finish_reason not in ("stop", "length", "error"):
            raise ValueError(f"bad finish_reason {self.finish_reason!r}")
        if self.finish_reason == "stop" and not self.content:
            raise ValueError("stop response with empty content")


class StubBackend:
    """Fixtures file: JSON object mapping request key -> response text."""

    id = "stub"

    def __init__(self, fixtures: dict[str, str]):
        self.fixtures = dict(fixtures)

    @classmethod
    def from_file(cls, path: str) -> "StubBackend":
        with open(path, encoding="utf-8") as fh:
            fixtures = json.load(fh)
        if not isinstance(fixtures, dict):
            raise ValueError(f"stub fixtures must be a JSON object: {path}")
        return cls(fixtures)

    def send(self, request: ChatRequest) -> tuple[str, str]:
        key = request.request_key
        if key not in self.fixtures:
            raise StubFixtureMissing(key)
        return self.fixtures[key], "stop"


class HttpBackend:
    """Remote chat-completion endpoint; wire style "openai" or "gemini"."""

    def __init__(
        self,
        url: str,
        api_key: str,
        model: str,
        style: str = "openai",
        timeout: float = 60.0,
        client: httpx.Client | None = None,
    ):
        if style not in ("openai", "gemini"):
            raise ValueError(f"unknown wire style {style!r}")
        self.url = url
        self.api_key = api_key
        self.model = model
        self.style = style
        self.id = f"{style}:{model}"
        self._client = client or httpx.Client(timeout=timeout)

    def send(self, request: ChatRequest) -> tuple[str, str]:
        payload, headers = self._encode(request)
        try:
            response = self._client.post(self.url, json=payload, headers=headers)
        except httpx.TimeoutException as exc:
            raise _TransientFailure(f"timeout: {exc}") from exc
        except httpx.TransportError as exc:
            raise _TransientFailure(f"transport failure: {exc}") from exc
        if response.status_code == 429 or response.status_code >= 500:
            raise _TransientFailure(f"HTTP {response.status_code}")
        if response.status_code != 200:
            raise NonTransientError(
                f"HTTP {response.status_code}: {response.text[:200]}"
            )
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolError("response is not JSON", response.text) from exc
        try:
            return self._decode(body)
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"unexpected payload shape: {exc}", response.text) from exc

    def _encode(self, request: ChatRequest):
        if self.style == "openai":
            messages = [{"role": "system", "content": request.system_prompt}]
            messages += [
                {"role": role, "content": content}
                for role, content in request.messages
            ]
            payload = {
                "model": self.model,
                "messages": messages,
                "temperature": request.temperature,
                "max_tokens": request.max_output_tokens,
            }
            headers = {"Authorization": f"Bearer {self.api_key}"}
        else:
            contents = [
                {
                    "role": "user" if role == "user" else "model",
                    "parts": [{"text": content}],
                }
                for role, content in request.messages
            ]
            payload = {
                "contents": contents,
                "systemInstruction": {"parts": [{"text": request.system_prompt}]},
                "generationConfig": {
                    "temperature": request.temperature,
                    "maxOutputTokens": request.max_output_tokens,
                },
            }
            headers = {"x-goog-api-key": self.api_key}
        return payload, headers

    def _decode(self, body) -> tuple[str, str]:
        if self.style == "openai":
            choice = body["choices"][0]
            content = choice["message"]["content"] or ""
            reason = choice.get("finish_reason", "stop")
            finish = {"stop": "stop", "length": "length"}.get(reason, "error")
        else:
            candidate = body["candidates"][0]
            parts = candidate["content"]["parts"]
            content = "".join(part.get("text", "") for part in parts)
            reason = candidate.get("finishReason", "STOP")
            finish = {"STOP": "stop", "MAX_TOKENS": "length"}.get(reason, "error")
        return content, finish


@dataclass
class Gateway:
    """Thread-safe front door; owns retries and the fan-out worker pool."""

    backend: object
    parallelism: int = DEFAULT_PARALLELISM
    sleep: object = time.sleep
    clock: object = time.monotonic
    rng: random.Random = field(default_factory=random.Random)

    def __post_init__(self):
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        self._rng_lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        started = self.clock()
        failure = None
        for attempt in range(1, MAX_ATTEMPTS + 1):
            try:
                content, finish = self.backend.send(request)
            except _TransientFailure as exc:
                failure = exc
                if attempt < MAX_ATTEMPTS:
                    cap = RETRY_BASE_SECONDS * RETRY_FACTOR ** (attempt - 1)
                    with self._rng_lock:
                        delay = self.rng.uniform(0.0, cap)
                    self.sleep(delay)
                continue
            if finish == "stop" and not content:
                raise ProtocolError("empty content with finish_reason stop", content)
            return ChatResponse(
                content=content,
                finish_reason=finish,
                latency=self.clock() - started,
                backend_id=self.backend.id,
                attempts=attempt,
            )
        raise GatewayUnavailableError(
            f"backend unavailable after {MAX_ATTEMPTS} attempts: {failure}",
            attempts=MAX_ATTEMPTS,
        )

    def complete_many(
        self, requests: list[ChatRequest], parallelism: int | None = None
    ) -> list[ChatResponse | GatewayError]:
        """Order-preserving fan-out; per-item failures are embedded."""
        width = self.parallelism if parallelism is None else parallelism
        if width < 1:
            raise ValueError("parallelism must be >= 1")
        if not requests:
            return []

        def run(request: ChatRequest):
            try:
                return self.complete(request)
            except GatewayError as exc:
                return exc

        with ThreadPoolExecutor(max_workers=width) as pool:
            return list(pool.map(run, requests))
