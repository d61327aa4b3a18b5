"""File-backed mock providers.

Each mock is a JSON table committed under test data; the whole primary
pipeline is reproducible from these tables with zero network access.
Unknown keys are hard errors so silent fixture drift cannot happen.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .base import CompletionParams, ProviderError, apply_stop, normalize_rows


def _load_table(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


class MockTextEmbedder:
    """Table: {"dim": d, "entries": {text: [d floats]}}; outputs are unit-normalized."""

    def __init__(self, table_path: str | Path):
        table = _load_table(table_path)
        self.dim = int(table["dim"])
        self._entries = table["entries"]
        self.identity = f"mock-text-embedder:{Path(table_path).name}"

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise ProviderError("empty embedding batch")
        rows = []
        for text in texts:
            if text not in self._entries:
                raise ProviderError(f"mock text-embedding table has no entry for {text!r}")
            row = np.asarray(self._entries[text], dtype=np.float64)
            if row.shape != (self.dim,):
                raise ProviderError(f"table entry for {text!r} has dim {row.shape}, want {self.dim}")
            rows.append(row)
        return normalize_rows(np.stack(rows))


class MockImageEmbedder:
    """Table: {"dim": d, "entries": {frame_ref: [d floats]}}."""

    def __init__(self, table_path: str | Path):
        table = _load_table(table_path)
        self.dim = int(table["dim"])
        self._entries = table["entries"]
        self.identity = f"mock-image-embedder:{Path(table_path).name}"

    def embed_image(self, frame_ref: str) -> np.ndarray:
        if frame_ref not in self._entries:
            raise ProviderError(f"mock image-embedding table has no entry for {frame_ref!r}")
        row = np.asarray(self._entries[frame_ref], dtype=np.float64)
        if row.shape != (self.dim,):
            raise ProviderError(f"entry for {frame_ref!r} has wrong dim")
        return normalize_rows(row[None, :])[0]


class MockCaptioner:
    """Table: {"entries": {frame_ref: {"caption": str, "filter_score": float}}}."""

    def __init__(self, table_path: str | Path):
        self._entries = _load_table(table_path)["entries"]
        self.identity = f"mock-captioner:{Path(table_path).name}"

    def caption_frame(self, frame_ref: str) -> tuple[str, float]:
        entry = self._entries.get(frame_ref)
        if entry is None:
            raise ProviderError(f"mock caption table has no entry for {frame_ref!r}")
        return entry["caption"], float(entry["filter_score"])


def prompt_digest(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class MockCompletion:
    """Scripted completions keyed by SHA-256 of the prompt.

    Table: {"by_hash": {digest: text}, "default": optional template}. The
    template may contain "{digest8}" (first 8 hex chars of the prompt
    digest) so pipeline fixtures stay deterministic without enumerating
    every prompt.
    """

    def __init__(self, table_path: str | Path):
        table = _load_table(table_path)
        self._by_hash = table.get("by_hash", {})
        self._default = table.get("default")
        self.identity = f"mock-completion:{Path(table_path).name}"

    def complete(self, prompt: str, params: CompletionParams) -> str:
        if not prompt:
            raise ProviderError("prompt must be non-empty")
        digest = prompt_digest(prompt)
        if digest in self._by_hash:
            text = self._by_hash[digest]
        elif self._default is not None:
            text = self._default.replace("{digest8}", digest[:8])
        else:
            raise ProviderError(f"mock completion table has no entry for prompt digest {digest}")
        return apply_stop(text, params.stop)
