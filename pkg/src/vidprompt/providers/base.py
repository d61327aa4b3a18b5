"""Provider contracts: the boundary between the deterministic pipeline and model inference.

Four capabilities are consumed by the pipeline: text embedding, image
embedding, frame captioning, and LLM completion. Every implementation
(file-backed mock, HTTP client) satisfies the same protocol, so the rest of
the package never knows which backend is in play. Providers are safe for
concurrent calls; ``parallel_map`` is the sanctioned way to fan out.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Protocol, TypeVar, runtime_checkable

import numpy as np

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_PARALLELISM = 4


class ProviderError(RuntimeError):
    """A provider call failed: transport error, backend error, or bad payload."""

    def __init__(self, message: str, status: int | None = None, payload=None):
        super().__init__(message)
        self.status = status
        self.payload = payload


@dataclass(frozen=True)
class CompletionParams:
    """Decoding parameters for a completion call.

    temperature 0 means greedy decoding; a fixed backend must then return
    the same text for the same prompt.
    """

    temperature: float = 0.0
    max_tokens: int = 64
    stop: tuple[str, ...] = ()

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be > 0")


@runtime_checkable
class TextEmbedder(Protocol):
    dim: int
    identity: str

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        """Embed a non-empty batch; returns an order-aligned (len(texts), dim) matrix."""


@runtime_checkable
class ImageEmbedder(Protocol):
    dim: int
    identity: str

    def embed_image(self, frame_ref: str) -> np.ndarray:
        """Embed a single frame reference; returns a unit-norm dim vector."""


@runtime_checkable
class CaptionProvider(Protocol):
    identity: str

    def caption_frame(self, frame_ref: str) -> tuple[str, float]:
        """Caption a frame; returns (caption text, image-text matching filter score)."""


@runtime_checkable
class CompletionProvider(Protocol):
    identity: str

    def complete(self, prompt: str, params: CompletionParams) -> str:
        """Generate a continuation of ``prompt``."""


def canonical_json(obj) -> str:
    """Stable serialization used for cache keys and config hashes."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def apply_stop(text: str, stop: tuple[str, ...]) -> str:
    """Truncate generated text at the first occurrence of any stop sequence."""
    cut = len(text)
    for seq in stop:
        if not seq:
            continue
        pos = text.find(seq)
        if pos != -1:
            cut = min(cut, pos)
    return text[:cut]


def normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """L2-normalize each row; zero rows are rejected because they cannot be normalized."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("embedding contains non-finite values")
    norms = np.linalg.norm(matrix, axis=-1, keepdims=True)
    if np.any(norms == 0.0):
        raise ValueError("embedding contains a zero vector; cannot normalize")
    return matrix / norms


def parallel_map(
    fn: Callable[[T], R], items: Iterable[T], parallelism: int = DEFAULT_PARALLELISM
) -> list[R]:
    """Apply fn over items with bounded parallelism, results in input order."""
    items = list(items)
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    if parallelism == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(fn, items))
