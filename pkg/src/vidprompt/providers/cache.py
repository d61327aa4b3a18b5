"""Content-addressed response cache for provider calls.

The key is the SHA-256 of the canonicalized request JSON plus the provider
identity; values are the wire-shaped response payloads. One file per entry
under a two-level hash-prefix directory; writes go through a temp file and
an atomic rename so concurrent callers never observe partial entries.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from pathlib import Path

import numpy as np

from .base import (
    CaptionProvider,
    CompletionParams,
    CompletionProvider,
    ImageEmbedder,
    TextEmbedder,
    canonical_json,
)


class DiskCache:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def key(self, identity: str, op: str, payload: dict) -> str:
        request = canonical_json({"identity": identity, "op": op, "payload": payload})
        return hashlib.sha256(request.encode("utf-8")).hexdigest()

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / key[2:4] / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self._path(key)
        if not path.exists():
            return None
        entry = json.loads(path.read_text(encoding="utf-8"))
        return entry["response"]

    def put(self, key: str, response: dict) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        entry = {"key": key, "created_at": time.time(), "response": response}
        fd, temp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as handle:
                handle.write(canonical_json(entry))
            os.replace(temp_name, path)
        except BaseException:
            if os.path.exists(temp_name):
                os.unlink(temp_name)
            raise

    def fetch(self, identity: str, op: str, payload: dict, compute) -> dict:
        """Return the cached response for the request, computing and storing on miss."""
        key = self.key(identity, op, payload)
        cached = self.get(key)
        if cached is not None:
            return cached
        response = compute()
        self.put(key, response)
        return response


class CachedTextEmbedder:
    def __init__(self, inner: TextEmbedder, cache: DiskCache):
        self._inner = inner
        self._cache = cache
        self.identity = inner.identity

    @property
    def dim(self) -> int:
        return self._inner.dim

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        payload = {"texts": list(texts)}
        response = self._cache.fetch(
            self.identity,
            "embed_text",
            payload,
            lambda: {"vectors": self._inner.embed_texts(texts).tolist()},
        )
        return np.asarray(response["vectors"], dtype=np.float64)


class CachedImageEmbedder:
    def __init__(self, inner: ImageEmbedder, cache: DiskCache):
        self._inner = inner
        self._cache = cache
        self.identity = inner.identity

    @property
    def dim(self) -> int:
        return self._inner.dim

    def embed_image(self, frame_ref: str) -> np.ndarray:
        response = self._cache.fetch(
            self.identity,
            "embed_image",
            {"path": frame_ref},
            lambda: {"vector": self._inner.embed_image(frame_ref).tolist()},
        )
        return np.asarray(response["vector"], dtype=np.float64)


class CachedCaptioner:
    def __init__(self, inner: CaptionProvider, cache: DiskCache):
        self._inner = inner
        self._cache = cache
        self.identity = inner.identity

    def caption_frame(self, frame_ref: str) -> tuple[str, float]:
        def compute() -> dict:
            caption, score = self._inner.caption_frame(frame_ref)
            return {"caption": caption, "filter_score": score}

        response = self._cache.fetch(self.identity, "caption", {"path": frame_ref}, compute)
        return response["caption"], float(response["filter_score"])


class CachedCompletion:
    def __init__(self, inner: CompletionProvider, cache: DiskCache):
        self._inner = inner
        self._cache = cache
        self.identity = inner.identity

    def complete(self, prompt: str, params: CompletionParams) -> str:
        payload = {
            "prompt": prompt,
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "stop": list(params.stop),
        }
        response = self._cache.fetch(
            self.identity,
            "complete",
            payload,
            lambda: {"text": self._inner.complete(prompt, params)},
        )
        return response["text"]
