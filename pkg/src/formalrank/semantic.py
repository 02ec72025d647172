"""Semantic-consistency scoring.

Each candidate is informalized back to natural language (pluggable
text-generation provider, disk-cached) and compared to the original
statement by cosine similarity of embeddings.  A deterministic hashed
term-frequency embedder ships as the test baseline; real runs plug an
HTTP embedding endpoint.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass

import numpy as np
import requests

from .cache import JsonFileCache, content_key
from .llmclient import ProviderError, ReplayMiss, build_informalize_prompt
from .matching import DimensionMismatch

_TOKEN = re.compile(r"[a-z0-9]+")


class EmbeddingProvider:
    """Interface: a named, fixed-dimension text embedder."""

    name = "abstract"
    dimension = 0

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError


class HashedTfEmbedder(EmbeddingProvider):
    """Deterministic baseline: lowercase-token term frequencies hashed
    into a fixed number of buckets, L2-normalized."""

    name = "builtin"

    def __init__(self, dimension: int = 256):
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        vector = np.zeros(self.dimension, dtype=np.float64)
        for token in _TOKEN.findall(text.lower()):
            digest = hashlib.sha256(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "big") % self.dimension
            vector[bucket] += 1.0
        norm = np.linalg.norm(vector)
        if norm > 0:
            vector /= norm
        return vector


class HttpEmbedder(EmbeddingProvider):
    """OpenAI-style embedding endpoint: {input: [texts]} -> {data: [...]}"""

    def __init__(self, endpoint: str, name: str, dimension: int,
                 api_key: str = "", timeout: float = 60.0):
        self.endpoint = endpoint
        self.name = name
        self.dimension = dimension
        self.api_key = api_key
        self.timeout = timeout

    def embed(self, text: str) -> np.ndarray:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = requests.post(
                self.endpoint, json={"input": [text]}, headers=headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
            vector = np.asarray(
                response.json()["data"][0]["embedding"], dtype=np.float64
            )
        except Exception as exc:
            raise ProviderError(f"embedding request failed: {exc}") from exc
        if vector.shape != (self.dimension,):
            raise DimensionMismatch(
                f"provider returned {vector.shape[0]} dims, configured {self.dimension}"
            )
        return vector


def cosine_similarity(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"{u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    # rounding can push |cos| a hair past 1
    return float(min(1.0, max(-1.0, np.dot(u, v) / (nu * nv))))


@dataclass
class InformalizationRecord:
    candidate_id: str
    informal_text: str
    provider: str
    cached: bool
    failed: bool = False
    error: str = ""


def informalize(
    formal_text: str,
    provider,
    cache: JsonFileCache,
    candidate_id: str = "",
    replay: bool = False,
) -> InformalizationRecord:
    """Back-translate one formal statement, going through the disk cache.

    Cache key: (provider name, hash of the formal text).  Replay mode
    requires a hit and never calls the provider.
    """
    key = content_key("informal", provider.name, formal_text)
    hit = cache.get(key)
    if hit is not None:
        return InformalizationRecord(
            candidate_id=candidate_id,
            informal_text=hit["informal_text"],
            provider=hit["provider"],
            cached=True,
        )
    if replay:
        raise ReplayMiss(f"no cached informalization for {key[:12]}")
    text = provider.complete_text(build_informalize_prompt(formal_text))
    cache.put(key, {"informal_text": text, "provider": provider.name})
    return InformalizationRecord(
        candidate_id=candidate_id,
        informal_text=text,
        provider=provider.name,
        cached=False,
    )


def failed_record(candidate_id: str, provider_name: str, error: str) -> InformalizationRecord:
    return InformalizationRecord(
        candidate_id=candidate_id,
        informal_text="",
        provider=provider_name,
        cached=False,
        failed=True,
        error=error,
    )


def semantic_scores(
    original_text: str,
    records: list[InformalizationRecord],
    provider: EmbeddingProvider,
    tau: float = 0.85,
) -> tuple[list[float], list[bool]]:
    """Per-candidate scores (1 + cos)/2 in [0, 1] plus τ-consistency flags.

    Failed informalizations score 0 and are never τ-consistent.  The
    affine rescaling is strictly monotone, so rankings match raw cosine.
    """
    original = provider.embed(original_text)
    scores: list[float] = []
    flags: list[bool] = []
    for record in records:
        if record.failed:
            scores.append(0.0)
            flags.append(False)
            continue
        cos = cosine_similarity(provider.embed(record.informal_text), original)
        scores.append((1.0 + cos) / 2.0)
        flags.append(cos >= tau)
    return scores, flags
