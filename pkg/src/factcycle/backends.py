"""Uniform abstraction over text-generation backends.

Two kinds are supported: a remote chat-completion endpoint speaking a plain
JSON POST protocol, and a deterministic scripted mock driven by match rules.
All agents consume backends only through :func:`complete` and
:func:`health_check` (or the equivalent methods).
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import httpx

from .domain import DomainError


class BackendError(DomainError):
    """Base class for backend failures."""


class BackendTimeoutError(BackendError):
    """The backend did not answer within timeout_ms."""


class BackendProtocolError(BackendError):
    """The backend answered with an error status or a malformed body."""


class NoMatchError(BackendError):
    """A scripted mock had no matching rule and no default response."""


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class BackendKind(str, Enum):
    REMOTE_HTTP = "remote_http"
    SCRIPTED_MOCK = "scripted_mock"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int = 256

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))
        if not self.messages:
            raise ValueError("chat request needs at least one message")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    @classmethod
    def user(cls, content: str, system: str | None = None, max_tokens: int = 256) -> ChatRequest:
        messages: list[ChatMessage] = []
        if system is not None:
            messages.append(ChatMessage(Role.SYSTEM, system))
        messages.append(ChatMessage(Role.USER, content))
        return cls(messages=tuple(messages), max_tokens=max_tokens)

    def last_user_content(self) -> str:
        for message in reversed(self.messages):
            if message.role is Role.USER:
                return message.content
        return ""


@dataclass(frozen=True)
class BackendDescriptor:
    name: str
    kind: BackendKind
    endpoint: str | None = None
    model_id: str | None = None
    timeout_ms: int = 30_000

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.kind is BackendKind.REMOTE_HTTP and (not self.endpoint or not self.model_id):
            raise ValueError("remote_http backends require endpoint and model_id")


@dataclass(frozen=True)
class HealthStatus:
    healthy: bool
    latency_ms: float = 0.0


@dataclass(frozen=True)
class MockRule:
    """One scripted response; ``kind`` is "exact" or "contains"."""

    kind: str
    value: str
    response: str

    def matches(self, text: str) -> bool:
        if self.kind == "exact":
            return text == self.value
        if self.kind == "contains":
            return self.value in text
        raise ValueError(f"unknown match kind {self.kind!r}")


def load_mock_script(path: str | Path) -> list[MockRule]:
    """Load a mock script file: a JSON array of {match:{kind,value}, response}."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError("mock script must be a JSON array")
    rules = []
    for entry in raw:
        match = entry["match"]
        rules.append(MockRule(kind=match["kind"], value=match["value"], response=entry["response"]))
    return rules


class ScriptedMockBackend:
    """Deterministic backend: rules are tried in order over the last user message."""

    def __init__(
        self,
        descriptor: BackendDescriptor,
        rules: Sequence[MockRule] = (),
        default_response: str | None = None,
        delay_ms: float = 0.0,
    ) -> None:
        self.descriptor = descriptor
        self.rules = list(rules)
        self.default_response = default_response
        self.delay_ms = delay_ms
        self._lock = threading.Lock()
        self._in_flight = 0
        self.max_observed_in_flight = 0

    def complete(self, request: ChatRequest) -> str:
        with self._lock:
            self._in_flight += 1
            self.max_observed_in_flight = max(self.max_observed_in_flight, self._in_flight)
        try:
            if self.delay_ms:
                budget = self.descriptor.timeout_ms
                if self.delay_ms > budget:
                    time.sleep(budget / 1000.0)
                    raise BackendTimeoutError(
                        f"mock backend {self.descriptor.name} exceeded {budget} ms"
                    )
                time.sleep(self.delay_ms / 1000.0)
            last_user = request.last_user_content()
            for rule in self.rules:
                if rule.matches(last_user):
                    return rule.response
            if self.default_response is not None:
                return self.default_response
            raise NoMatchError(f"no rule matched and no default configured ({self.descriptor.name})")
        finally:
            with self._lock:
                self._in_flight -= 1

    def health_check(self) -> HealthStatus:
        return HealthStatus(healthy=True, latency_ms=0.0)


class RemoteHttpBackend:
    """Chat-completion client: POST {model, messages, temperature, max_tokens}.

    The response text is extracted at ``response_path`` (default: first
    choice's message content, i.e. ["choices", 0, "message", "content"]).
    """

    DEFAULT_RESPONSE_PATH: tuple[Any, ...] = ("choices", 0, "message", "content")

    def __init__(
        self,
        descriptor: BackendDescriptor,
        response_path: Sequence[Any] | None = None,
        max_in_flight: int = 4,
    ) -> None:
        if descriptor.kind is not BackendKind.REMOTE_HTTP:
            raise ValueError("descriptor is not remote_http")
        self.descriptor = descriptor
        self.response_path = tuple(response_path) if response_path else self.DEFAULT_RESPONSE_PATH
        self._slots = threading.Semaphore(max_in_flight)

    def _post(self, body: dict[str, Any]) -> dict[str, Any]:
        timeout = self.descriptor.timeout_ms / 1000.0
        assert self.descriptor.endpoint is not None
        with self._slots:
            try:
                response = httpx.post(self.descriptor.endpoint, json=body, timeout=timeout)
            except httpx.TimeoutException as exc:
                raise BackendTimeoutError(
                    f"{self.descriptor.name} timed out after {self.descriptor.timeout_ms} ms"
                ) from exc
            except httpx.HTTPError as exc:
                raise BackendProtocolError(f"{self.descriptor.name} transport error: {exc}") from exc
        if response.status_code // 100 != 2:
            raise BackendProtocolError(
                f"{self.descriptor.name} returned status {response.status_code}"
            )
        try:
            return response.json()
        except ValueError as exc:
            raise BackendProtocolError(f"{self.descriptor.name} returned non-JSON body") from exc

    def complete(self, request: ChatRequest) -> str:
        body = {
            "model": self.descriptor.model_id,
            "messages": [{"role": m.role.value, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        payload = self._post(body)
        node: Any = payload
        for step in self.response_path:
            try:
                node = node[step]
            except (KeyError, IndexError, TypeError) as exc:
                raise BackendProtocolError(
                    f"{self.descriptor.name} response missing path {list(self.response_path)}"
                ) from exc
        if not isinstance(node, str):
            raise BackendProtocolError(f"{self.descriptor.name} response text is not a string")
        return node

    def health_check(self) -> HealthStatus:
        probe = ChatRequest.user("ping", max_tokens=1)
        start = time.perf_counter()
        try:
            self.complete(probe)
        except BackendError:
            return HealthStatus(healthy=False, latency_ms=(time.perf_counter() - start) * 1000.0)
        return HealthStatus(healthy=True, latency_ms=(time.perf_counter() - start) * 1000.0)


Backend = ScriptedMockBackend | RemoteHttpBackend


def complete(backend: Backend, request: ChatRequest) -> str:
    return backend.complete(request)


def health_check(backend: Backend) -> HealthStatus:
    return backend.health_check()


def build_backend(config: dict[str, Any], base_dir: Path | None = None) -> Backend:
    """Construct a backend from one entry of the config's ``backends`` map."""
    kind = BackendKind(config["kind"])
    descriptor = BackendDescriptor(
        name=config["name"],
        kind=kind,
        endpoint=config.get("endpoint"),
        model_id=config.get("model_id"),
        timeout_ms=int(config.get("timeout_ms", 30_000)),
    )
    if kind is BackendKind.SCRIPTED_MOCK:
        rules: list[MockRule] = []
        script = config.get("script_file")
        if script:
            script_path = Path(script)
            if base_dir is not None and not script_path.is_absolute():
                script_path = base_dir / script_path
            rules = load_mock_script(script_path)
        return ScriptedMockBackend(
            descriptor,
            rules=rules,
            default_response=config.get("default_response"),
            delay_ms=float(config.get("delay_ms", 0.0)),
        )
    return RemoteHttpBackend(
        descriptor,
        response_path=config.get("response_path"),
        max_in_flight=int(config.get("max_in_flight", 4)),
    )
