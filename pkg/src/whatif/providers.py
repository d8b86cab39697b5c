"""Chat-completion providers: a real HTTP client and a scripted mock.

Any endpoint speaking the common chat-completions shape (model name +
messages + temperature in, text out) works as a provider.  Credentials come
from the ``EOR_PROVIDER_KEY`` environment variable unless given explicitly.
The mock provider replays scripted responses keyed by workflow step so the
whole pipeline runs deterministically offline.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import httpx

PROVIDER_KEY_ENV = "EOR_PROVIDER_KEY"

MOCK_STEPS = ("writer", "debug", "safeguard", "interpreter", "judge")


@dataclass(frozen=True)
class ProviderRequest:
    system: str
    messages: tuple[tuple[str, str], ...] = ()  # (role, content)
    temperature: float = 0.0
    max_tokens: int | None = None


@dataclass(frozen=True)
class ProviderResponse:
    text: str
    prompt_tokens: int | None = None
    completion_tokens: int | None = None
    latency_s: float = 0.0


class ProviderError(RuntimeError):
    """The provider could not produce a response (after retries)."""


class ChatProvider(Protocol):
    def complete(self, request: ProviderRequest) -> ProviderResponse: ...


@dataclass
class HttpChatProvider:
    """Client for chat-completions style HTTP endpoints."""

    endpoint: str
    model: str
    api_key: str | None = None
    timeout_s: float = 60.0
    retries: int = 2

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        key = self.api_key or os.environ.get(PROVIDER_KEY_ENV)
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        messages = [{"role": "system", "content": request.system}]
        messages.extend(
            {"role": role, "content": content} for role, content in request.messages
        )
        payload: dict = {
            "model": self.model,
            "messages": messages,
            "temperature": request.temperature,
        }
        if request.max_tokens is not None:
            payload["max_tokens"] = request.max_tokens

        last_error: Exception | None = None
        start = time.perf_counter()
        for _ in range(self.retries + 1):
            try:
                response = httpx.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout_s
                )
                response.raise_for_status()
                data = response.json()
                text = data["choices"][0]["message"]["content"]
                usage = data.get("usage", {})
                return ProviderResponse(
                    text=text,
                    prompt_tokens=usage.get("prompt_tokens"),
                    completion_tokens=usage.get("completion_tokens"),
                    latency_s=time.perf_counter() - start,
                )
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
        raise ProviderError(
            f"provider call failed after {self.retries + 1} attempts: {last_error}"
        )


def classify_step(request: ProviderRequest) -> str:
    """Recognize which workflow step a request belongs to from its prompt
    wording.  Used by the scripted mock to pick the right response queue."""
    text = request.system + "\n" + "\n".join(content for _, content in request.messages)
    if "professional debugger" in text:
        return "debug"
    if "code safety evaluator" in text:
        return "safeguard"
    if "skilled interpreter" in text:
        return "interpreter"
    if "expert in Operations Research evaluating explanations" in text:
        return "judge"
    return "writer"


class MockProvider:
    """Replays scripted responses, consumed in order per workflow step.

    The script maps step names (``writer``, ``debug``, ``safeguard``,
    ``interpreter``, ``judge``) to response lists.  Debug requests fall back
    to the writer queue when no dedicated debug queue is given.  Exhausting
    a queue raises :class:`ProviderError`, which a session reports as a
    provider failure.
    """

    def __init__(self, script: Mapping[str, Sequence[str]]):
        unknown = set(script) - set(MOCK_STEPS)
        if unknown:
            raise ValueError(f"unknown mock script steps: {sorted(unknown)}")
        self._queues = {step: list(responses) for step, responses in script.items()}
        self.calls: list[tuple[str, ProviderRequest]] = []

    def complete(self, request: ProviderRequest) -> ProviderResponse:
        step = classify_step(request)
        self.calls.append((step, request))
        queue = self._queues.get(step)
        if step == "debug" and not queue:
            queue = self._queues.get("writer")
        if not queue:
            raise ProviderError(f"mock script exhausted for step {step!r}")
        return ProviderResponse(text=queue.pop(0))


def load_mock_script(path: str | Path) -> dict[str, list[str]]:
    data = json.loads(Path(path).read_text("utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"mock script {path} must be a JSON object")
    script: dict[str, list[str]] = {}
    for step, responses in data.items():
        if isinstance(responses, str):
            responses = [responses]
        if not isinstance(responses, list) or not all(
            isinstance(r, str) for r in responses
        ):
            raise ValueError(f"mock script step {step!r} must map to strings")
        script[step] = list(responses)
    return script


def resolve_mock_script(path: str | Path, key: str | None = None) -> dict[str, list[str]]:
    """Find the script for one session: ``path`` may be a single script file
    or a directory holding ``<key>.json`` files (``default.json`` fallback)."""
    path = Path(path)
    if path.is_dir():
        candidates = []
        if key is not None:
            candidates.append(path / f"{key}.json")
        candidates.append(path / "default.json")
        for candidate in candidates:
            if candidate.exists():
                return load_mock_script(candidate)
        raise FileNotFoundError(
            f"no mock script for key {key!r} under {path} "
            f"(looked for {', '.join(c.name for c in candidates)})"
        )
    return load_mock_script(path)
