"""Support-set sampling and similarity-based in-context example selection.

A support set of M labeled examples is drawn once per seed; for each query,
the N most similar examples (by sentence-embedding cosine against a
task-specific key) are placed in the prompt in ascending similarity order,
so the most relevant example sits adjacent to the query.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prompt import TaskKind
from .providers.base import TextEmbedder, normalize_rows
from .represent import VideoRepresentation

DEFAULT_SUPPORT_SIZE = 10
DEFAULT_IN_CONTEXT = 5

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class LabeledExample:
    """A representation plus its task annotation (caption / answer / gold future event)."""

    example_id: str
    representation: VideoRepresentation
    annotation: str
    question: str | None = None
    candidates: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.annotation.strip():
            raise ValueError(f"example {self.example_id!r} has an empty annotation")


@dataclass(frozen=True)
class SupportSet:
    examples: tuple[LabeledExample, ...]
    seed: int
    size_requested: int


def _splitmix64(state: int) -> tuple[int, int]:
    """One step of the SplitMix64 generator; returns (next_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


def shuffled_indices(n: int, seed: int) -> list[int]:
    """Deterministic Fisher-Yates shuffle of range(n) driven by SplitMix64.

    Pinned algorithm (platform-independent reproducibility): seed the
    generator with ``seed`` masked to 64 bits, then for i = n-1 .. 1 draw
    one 64-bit value and swap positions i and value % (i+1).
    """
    order = list(range(n))
    state = seed & _MASK64
    for i in range(n - 1, 0, -1):
        state, value = _splitmix64(state)
        j = value % (i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def sample_support(
    dataset: list[LabeledExample], size: int = DEFAULT_SUPPORT_SIZE, seed: int = 0
) -> SupportSet:
    """Uniformly sample min(size, len(dataset)) examples without replacement.

    Same (dataset, size, seed) always yields the same set, in the same order.
    """
    if size < 1:
        raise ValueError("support size must be >= 1")
    if not dataset:
        raise ValueError("cannot sample a support set from an empty dataset")
    order = shuffled_indices(len(dataset), seed)
    chosen = [dataset[i] for i in order[: min(size, len(dataset))]]
    return SupportSet(examples=tuple(chosen), seed=seed, size_requested=size)


def example_key(example: LabeledExample, task: TaskKind) -> str:
    """The text compared against the query for in-context selection."""
    if task == TaskKind.QA:
        if not example.question:
            raise ValueError(f"example {example.example_id!r} has no question")
        return example.question
    captions = " ".join(c.text for c in example.representation.frame_captions)
    if task == TaskKind.VLEP:
        dialogue = example.representation.asr or ""
        return f"{captions} {dialogue}".strip()
    return captions


def select_in_context(
    support: SupportSet,
    query_key: str,
    embedder: TextEmbedder,
    n: int = DEFAULT_IN_CONTEXT,
    task: TaskKind | None = None,
    keys: list[str] | None = None,
) -> list[LabeledExample]:
    """Pick the n support examples most similar to the query, least similar first.

    Keys default to ``example_key(example, task)``; pass ``keys`` to override
    (order-aligned with the support set). Ties in similarity break by
    ascending example_id, both for selection and for output order.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not query_key:
        raise ValueError("query_key must be non-empty")
    if keys is None:
        if task is None:
            raise ValueError("either task or keys must be given")
        keys = [example_key(ex, task) for ex in support.examples]
    if len(keys) != len(support.examples):
        raise ValueError("keys must align with support examples")

    vectors = normalize_rows(np.asarray(embedder.embed_texts([query_key, *keys])))
    sims = vectors[1:] @ vectors[0]

    ranked = sorted(
        zip(support.examples, sims), key=lambda pair: (-pair[1], pair[0].example_id)
    )[:n]
    ranked.sort(key=lambda pair: (pair[1], pair[0].example_id))
    return [example for example, _ in ranked]
