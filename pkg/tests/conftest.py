"""Shared test helpers: toy embedders and fixture paths."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

DATA_DIR = Path(__file__).parent / "data"
GOLDEN_DIR = DATA_DIR / "goldens"


class OneHotEmbedder:
    """Toy embedder mapping each known text to a basis vector of a fixed table."""

    def __init__(self, texts: list[str], dim: int | None = None):
        self._index = {}
        for text in texts:
            self._index.setdefault(text, len(self._index))
        self.dim = dim or len(self._index)
        if self.dim < len(self._index):
            raise ValueError("dim too small for the text table")
        self.identity = "test-one-hot"

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        matrix = np.zeros((len(texts), self.dim))
        for row, text in enumerate(texts):
            if text not in self._index:
                raise KeyError(f"one-hot embedder has no entry for {text!r}")
            matrix[row, self._index[text]] = 1.0
        return matrix


class TableEmbedder:
    """Toy embedder with explicit vectors per text."""

    def __init__(self, table: dict[str, list[float]]):
        self._table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}
        self.dim = len(next(iter(self._table.values())))
        self.identity = "test-table"

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        return np.stack([self._table[t] for t in texts])


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def golden_dir() -> Path:
    return GOLDEN_DIR
