"""Visual-token vocabularies: loading, structural filtering, near-duplicate removal, embedding.

A vocabulary is an ordered list of candidate phrases of one kind (objects,
events, or attributes). Event phrases are kept only when they carry verbal
structure (at least one verb and one argument), and near-duplicates are
removed greedily by sentence-embedding cosine similarity.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Protocol, runtime_checkable

import numpy as np

from .providers.base import TextEmbedder, normalize_rows

logger = logging.getLogger(__name__)


class VocabKind(str, Enum):
    OBJECT = "object"
    EVENT = "event"
    ATTRIBUTE = "attribute"


def normalize_phrase(phrase: str) -> str:
    """Normalization used for duplicate detection: Unicode case-fold + trim, nothing else."""
    return phrase.strip().casefold()


@dataclass(frozen=True)
class Vocabulary:
    """An ordered, duplicate-free phrase list of a single kind."""

    kind: VocabKind
    phrases: tuple[str, ...]
    source_label: str = ""

    def __post_init__(self):
        seen: set[str] = set()
        for phrase in self.phrases:
            if not phrase.strip():
                raise ValueError("vocabulary phrases must be non-empty")
            key = normalize_phrase(phrase)
            if key in seen:
                raise ValueError(f"duplicate phrase after normalization: {phrase!r}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.phrases)


@dataclass(frozen=True)
class VocabEmbedding:
    """A vocabulary plus one unit-norm float32 row per phrase."""

    vocabulary: Vocabulary
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise ValueError("embedding matrix must be 2-D")
        if self.matrix.shape[0] != len(self.vocabulary):
            raise ValueError(
                f"row count {self.matrix.shape[0]} != phrase count {len(self.vocabulary)}"
            )
        if self.matrix.shape[1] < 1:
            raise ValueError("embedding dim must be positive")
        norms = np.linalg.norm(self.matrix.astype(np.float64), axis=1)
        if not np.all(np.abs(norms - 1.0) <= 1e-6):
            raise ValueError("embedding rows must be unit-norm within 1e-6")

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])


def load_phrases(
    path: str | Path,
    kind: VocabKind,
    blocklist: str | Path | None = None,
    source_label: str = "",
) -> Vocabulary:
    """Load one phrase per line (UTF-8), dropping blanks and normalized duplicates.

    Duplicates keep the first occurrence; input order is otherwise preserved.
    ``blocklist`` optionally names a file of phrases to drop (matched after
    normalization), used e.g. to strip fictional-character entries from
    object class lists.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()

    blocked: set[str] = set()
    if blocklist is not None:
        blocked = {
            normalize_phrase(line)
            for line in Path(blocklist).read_text(encoding="utf-8").splitlines()
            if line.strip()
        }

    phrases: list[str] = []
    seen: set[str] = set()
    for line in lines:
        phrase = line.strip()
        if not phrase:
            continue
        key = normalize_phrase(phrase)
        if key in blocked or key in seen:
            continue
        seen.add(key)
        phrases.append(phrase)

    if not phrases:
        raise ValueError(f"no phrases left after cleaning {path}")
    return Vocabulary(kind=kind, phrases=tuple(phrases), source_label=source_label or str(path))


@runtime_checkable
class StructureAnnotator(Protocol):
    """Reports, per phrase, the verbs and arguments it contains."""

    def annotate(self, phrase: str) -> tuple[set[str], set[str]]:
        """Return (verbs, arguments) found in ``phrase``."""


class FileAnnotator:
    """Annotator backed by precomputed labels: JSON {phrase: {"verbs": [...], "arguments": [...]}}.

    Use this to feed offline semantic-role-labeling output into the event
    filter without making the pipeline depend on an SRL model.
    """

    def __init__(self, path: str | Path):
        self._table: dict[str, dict] = json.loads(Path(path).read_text(encoding="utf-8"))

    def annotate(self, phrase: str) -> tuple[set[str], set[str]]:
        entry = self._table.get(phrase)
        if entry is None:
            raise KeyError(f"no structure labels for phrase: {phrase!r}")
        return set(entry.get("verbs", ())), set(entry.get("arguments", ()))


# Closed-class words that are neither verbs nor arguments for the heuristic.
_STOPWORDS = frozenset(
    """a an the and or of in on at to with by for from is are was were be been
    being it its this that these those his her their our your my""".split()
)


class HeuristicAnnotator:
    """Fallback annotator: verbs via a bundled verb lexicon, any other content word is an argument.

    Deliberately crude; it exists so the event filter is usable without
    precomputed labels. Real role labeling belongs offline or in the model
    sidecar.
    """

    def __init__(self, lexicon_path: str | Path | None = None):
        if lexicon_path is None:
            text = resources.files("vidprompt.data").joinpath("verbs.txt").read_text("utf-8")
        else:
            text = Path(lexicon_path).read_text(encoding="utf-8")
        self._verbs = frozenset(w.strip().casefold() for w in text.splitlines() if w.strip())

    def _is_verb(self, word: str) -> bool:
        return any(cand in self._verbs for cand in _inflection_candidates(word))

    def annotate(self, phrase: str) -> tuple[set[str], set[str]]:
        words = [w for w in phrase.casefold().split() if w]
        verbs = {w for w in words if self._is_verb(w)}
        arguments = {w for w in words if w not in verbs and w not in _STOPWORDS}
        return verbs, arguments


def _inflection_candidates(word: str) -> Iterable[str]:
    """Crude de-inflection: yields base-form guesses for lexicon lookup."""
    yield word
    if word.endswith("ing") and len(word) > 4:
        yield word[:-3]
        yield word[:-3] + "e"
        if len(word) > 5 and word[-4] == word[-5]:
            yield word[:-4]
    if word.endswith("ed") and len(word) > 3:
        yield word[:-2]
        yield word[:-1]
        if len(word) > 4 and word[-3] == word[-4]:
            yield word[:-3]
    if word.endswith("es") and len(word) > 3:
        yield word[:-2]
    if word.endswith("s") and len(word) > 2:
        yield word[:-1]


def filter_events(phrases: Iterable[str], annotator: StructureAnnotator) -> list[str]:
    """Keep phrases with at least one verb and one argument, in input order.

    Annotator failures drop the phrase with a logged warning rather than
    aborting the whole vocabulary build.
    """
    kept: list[str] = []
    for phrase in phrases:
        try:
            verbs, arguments = annotator.annotate(phrase)
        except Exception as exc:
            logger.warning("annotator failed on %r, dropping it: %s", phrase, exc)
            continue
        if verbs and arguments:
            kept.append(phrase)
    return kept


def dedup_by_similarity(
    phrases: list[str], embedder: TextEmbedder, threshold: float = 0.9
) -> list[str]:
    """Greedy single-pass near-duplicate removal in input order.

    A phrase is kept iff its cosine similarity to every already-kept phrase
    is <= threshold (strictly-greater similarity counts as a duplicate).
    The first phrase of a near-duplicate group therefore wins.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    if not phrases:
        return []

    vectors = _embed_or_identify_failure(phrases, embedder)
    vectors = normalize_rows(vectors)

    dim = vectors.shape[1]
    kept_rows = np.empty((len(phrases), dim), dtype=np.float64)
    kept: list[str] = []
    for phrase, vec in zip(phrases, vectors):
        sims = kept_rows[: len(kept)] @ vec
        if len(kept) == 0 or float(sims.max(initial=-1.0)) <= threshold:
            kept_rows[len(kept)] = vec
            kept.append(phrase)
    return kept


def _embed_or_identify_failure(phrases: list[str], embedder: TextEmbedder) -> np.ndarray:
    """Batch-embed; on failure, find and name the offending phrase."""
    try:
        return np.asarray(embedder.embed_texts(list(phrases)))
    except Exception:
        for phrase in phrases:
            try:
                embedder.embed_texts([phrase])
            except Exception as exc:
                raise RuntimeError(f"embedding failed for phrase {phrase!r}: {exc}") from exc
        raise


def embed_vocab(vocab: Vocabulary, embedder: TextEmbedder) -> VocabEmbedding:
    """Embed every phrase and L2-normalize, preserving phrase order."""
    vectors = np.asarray(embedder.embed_texts(list(vocab.phrases)))
    if vectors.ndim != 2 or vectors.shape[0] != len(vocab):
        raise ValueError(
            f"embedder returned shape {vectors.shape} for {len(vocab)} phrases"
        )
    matrix = normalize_rows(vectors).astype(np.float32)
    return VocabEmbedding(vocabulary=vocab, matrix=matrix)


def save_vocab_embedding(path: str | Path, embedding: VocabEmbedding) -> None:
    """Write the embedded-vocabulary store: {kind, dim, phrases[], vectors[][]}.

    Vectors are 32-bit reals; JSON decimal round-trip of float32 values is
    bit-exact, which load_vocab_embedding relies on.
    """
    payload = {
        "kind": embedding.vocabulary.kind.value,
        "dim": embedding.dim,
        "source_label": embedding.vocabulary.source_label,
        "phrases": list(embedding.vocabulary.phrases),
        "vectors": embedding.matrix.astype(np.float64).tolist(),
    }
    Path(path).write_text(json.dumps(payload), encoding="utf-8")


def load_vocab_embedding(path: str | Path) -> VocabEmbedding:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    vocab = Vocabulary(
        kind=VocabKind(payload["kind"]),
        phrases=tuple(payload["phrases"]),
        source_label=payload.get("source_label", ""),
    )
    matrix = np.asarray(payload["vectors"], dtype=np.float32)
    if matrix.shape != (len(vocab), payload["dim"]):
        raise ValueError(f"store shape mismatch in {path}")
    return VocabEmbedding(vocabulary=vocab, matrix=matrix)
