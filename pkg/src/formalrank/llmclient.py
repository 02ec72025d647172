"""Chat-completion client with deterministic offline replay.

Live mode talks to an OpenAI-compatible JSON endpoint; every request is
cached content-addressed under ``cache/gen/<hash>.json`` before any
parsing, so replay mode can reproduce runs byte-for-byte with zero
network IO.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import requests

from .cache import JsonFileCache, canonical_json, content_key

PROMPT_AUTOFORMALIZE = (
    "As a mathematician familiar with Isabelle, your task is to translate the "
    "natural language problem into an Isabelle language version. \n\n "
    "Natural language version:\n{instruction}\n\n "
    "Translate the natural language version to an Isabelle version:\n"
)

PROMPT_INFORMALIZE = (
    "As a mathematician familiar with Isabelle, your task is to the Isabelle "
    "language problem back to a natural language version. \n\n "
    "Isabelle language version:\n{instruction}\n\n "
    "Translate the Isabelle language problem back to a natural langauge version:\n"
)


class ProviderError(Exception):
    """The endpoint failed after all retries."""


class ReplayMiss(Exception):
    """Replay mode was asked for a request that was never cached."""


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    n: int
    temperature: float
    model: str
    seed: int | None = None

    def key(self) -> str:
        payload = {
            "model": self.model,
            "prompt": self.prompt,
            "n": self.n,
            "temperature": self.temperature,
            "seed": self.seed,
        }
        return content_key("gen", canonical_json(payload))


@dataclass
class Transcript:
    request_hash: str
    responses: list[str]
    timestamp: float


def http_transport(endpoint: str, payload: dict, api_key: str, timeout: float) -> dict:
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    response = requests.post(endpoint, json=payload, headers=headers, timeout=timeout)
    response.raise_for_status()
    return response.json()


class ChatClient:
    """OpenAI-compatible chat client with transcript caching.

    ``transport`` is injectable so tests can count or forbid network use;
    replay mode never touches it.
    """

    def __init__(
        self,
        endpoint: str = "",
        model: str = "",
        api_key_env: str = "FORMALRANK_API_KEY",
        temperature: float = 0.7,
        replay: bool = False,
        cache: JsonFileCache | None = None,
        transport=http_transport,
        max_retries: int = 3,
        backoff: float = 0.5,
        request_timeout: float = 60.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.temperature = temperature
        self.replay = replay
        self.cache = cache
        self.transport = transport
        self.max_retries = max_retries
        self.backoff = backoff
        self.request_timeout = request_timeout

    @property
    def name(self) -> str:
        return self.model or "chat"

    def complete(
        self,
        prompt: str,
        n: int = 1,
        temperature: float | None = None,
        seed: int | None = None,
    ) -> list[str]:
        request = GenerationRequest(
            prompt=prompt,
            n=n,
            temperature=self.temperature if temperature is None else temperature,
            model=self.model,
            seed=seed,
        )
        key = request.key()
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                responses = hit["responses"]
                if len(responses) != n:
                    raise ProviderError(
                        f"cached transcript has {len(responses)} responses, wanted {n}"
                    )
                return list(responses)
        if self.replay:
            raise ReplayMiss(f"no cached transcript for request {key[:12]}")
        responses = self._call(request)
        if self.cache is not None:
            self.cache.put(
                key,
                {
                    "request_hash": key,
                    "responses": responses,
                    "timestamp": time.time(),
                },
            )
        return responses

    def complete_text(self, prompt: str) -> str:
        return self.complete(prompt, n=1)[0]

    def _call(self, request: GenerationRequest) -> list[str]:
        payload = {
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "n": request.n,
            "temperature": request.temperature,
        }
        if request.seed is not None:
            payload["seed"] = request.seed
        api_key = os.environ.get(self.api_key_env, "")
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                reply = self.transport(
                    self.endpoint, payload, api_key, self.request_timeout
                )
                contents = [
                    choice["message"]["content"] for choice in reply["choices"]
                ]
                if len(contents) != request.n:
                    raise KeyError(
                        f"endpoint returned {len(contents)} choices, wanted {request.n}"
                    )
                return contents
            except Exception as exc:  # noqa: BLE001 - every failure retries
                last_error = exc
                if attempt + 1 < self.max_retries:
                    time.sleep(self.backoff * (2 ** attempt))
        raise ProviderError(
            f"request failed after {self.max_retries} retries: {last_error}"
        )


def strip_code_fences(raw: str) -> str:
    """Remove one leading/trailing triple-backtick fence (plus language tag).

    Unfenced input is returned byte-identical; the operation is idempotent.
    """
    stripped = raw.strip()
    if not stripped.startswith("```"):
        return raw
    lines = stripped.splitlines()
    lines = lines[1:]  # drop ```lang
    while lines and lines[-1].strip() == "":
        lines.pop()
    if lines and lines[-1].strip() == "```":
        lines.pop()
    return strip_code_fences("\n".join(lines).strip())


def build_autoformalize_prompt(
    informal_text: str, few_shot: list[dict] | None = None
) -> str:
    """Instruction template with optional worked example pairs up front."""
    parts = []
    for example in few_shot or []:
        parts.append(
            PROMPT_AUTOFORMALIZE.format(instruction=example["informal"])
            + example["formal"]
            + "\n\n"
        )
    parts.append(PROMPT_AUTOFORMALIZE.format(instruction=informal_text))
    return "".join(parts)


def build_informalize_prompt(formal_text: str) -> str:
    return PROMPT_INFORMALIZE.format(instruction=formal_text)


def generate_candidates(
    informal_text: str,
    k: int,
    client: ChatClient,
    few_shot: list[dict] | None = None,
    seed: int | None = None,
) -> list[str]:
    """k raw formal-text candidates, verbatim apart from fence stripping."""
    prompt = build_autoformalize_prompt(informal_text, few_shot)
    responses = client.complete(prompt, n=k, seed=seed)
    return [strip_code_fences(r) for r in responses]
