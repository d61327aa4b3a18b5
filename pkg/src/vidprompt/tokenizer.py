"""Retrieval-based visual tokenization: score vocabulary phrases against frame embeddings.

Each sampled frame is matched against every phrase of every vocabulary by
cosine similarity; the top-k phrases per (frame, kind) become that frame's
visual tokens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .vocab import VocabEmbedding, VocabKind

DEFAULT_TOKENS_PER_FRAME = 5
DEFAULT_TOKEN_FRAMES = 8
DEFAULT_CAPTION_FRAMES = 4


@dataclass(frozen=True)
class FrameEmbedding:
    """A unit-norm image embedding for one sampled frame."""

    frame_index: int
    vector: np.ndarray

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] < 1:
            raise ValueError("frame embedding must be a non-empty 1-D vector")
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"frame embedding must be unit-norm, got |v|={norm}")
        object.__setattr__(self, "vector", vec)

    @property
    def dim(self) -> int:
        return int(self.vector.shape[0])


@dataclass(frozen=True)
class TokenScore:
    """One retrieved vocabulary phrase for one frame."""

    phrase: str
    kind: VocabKind
    score: float
    frame_index: int
    rank: int  # 1-based within (frame, kind)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine similarity with 64-bit accumulation, clamped into [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dim mismatch: {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("cosine undefined for zero vector")
    value = float(np.dot(a, b)) / (norm_a * norm_b)
    return min(1.0, max(-1.0, value))


def sample_frame_indices(total_frames: int, n: int) -> list[int]:
    """Centered-uniform sparse sampling: index_i = floor(i*T/n + T/(2n)).

    Picks n frame indices evenly spread over a clip of ``total_frames``
    decodable frames, each at the center of its segment.
    """
    if total_frames < 1 or n < 1:
        raise ValueError("total_frames and n must be >= 1")
    return [min(total_frames - 1, int(i * total_frames / n + total_frames / (2 * n))) for i in range(n)]


def tokenize_frame(
    frame: FrameEmbedding, vocab: VocabEmbedding, k: int = DEFAULT_TOKENS_PER_FRAME
) -> list[TokenScore]:
    """Return the k highest-scoring phrases for a frame, ranks 1..k.

    Ties in score break by ascending lexicographic phrase order so the
    result is identical across platforms. Returns all phrases when the
    vocabulary is smaller than k.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if frame.dim != vocab.dim:
        raise ValueError(f"dim mismatch: frame {frame.dim} vs vocab {vocab.dim}")

    matrix = vocab.matrix.astype(np.float64)
    # True cosine over the stored float32 rows: rows are unit-norm only
    # within 1e-6, so divide by the actual norms.
    norms = np.linalg.norm(matrix, axis=1) * float(np.linalg.norm(frame.vector))
    scores = (matrix @ frame.vector) / norms
    np.clip(scores, -1.0, 1.0, out=scores)
    phrases = vocab.vocabulary.phrases
    order = sorted(range(len(phrases)), key=lambda i: (-scores[i], phrases[i]))

    return [
        TokenScore(
            phrase=phrases[i],
            kind=vocab.vocabulary.kind,
            score=float(scores[i]),
            frame_index=frame.frame_index,
            rank=rank,
        )
        for rank, i in enumerate(order[:k], start=1)
    ]


def tokenize_video(
    frames: list[FrameEmbedding],
    vocabs: dict[VocabKind, VocabEmbedding],
    k: int = DEFAULT_TOKENS_PER_FRAME,
) -> dict[tuple[int, VocabKind], list[TokenScore]]:
    """Tokenize every frame against every vocabulary; no cross-frame interaction."""
    indices = [f.frame_index for f in frames]
    if sorted(indices) != indices or len(set(indices)) != len(indices):
        raise ValueError("frames must be sorted by frame_index and unique")

    result: dict[tuple[int, VocabKind], list[TokenScore]] = {}
    for frame in frames:
        for kind, vocab in vocabs.items():
            result[(frame.frame_index, kind)] = tokenize_frame(frame, vocab, k)
    return result
