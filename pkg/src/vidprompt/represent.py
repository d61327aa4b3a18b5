"""Video-level textual representation: aggregated tokens, frame captions, temporal markers.

Per-frame visual tokens are merged into a short ordered list per kind, frame
captions are attached, and both render as single prompt lines whose items are
prefixed with temporal markers ("First,", "Then,", ...).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .tokenizer import TokenScore
from .vocab import VocabKind

DEFAULT_TOP_M = 4
DEFAULT_MUST_RANK_WITHIN = 2

KIND_LABELS = {
    VocabKind.OBJECT: "Objects",
    VocabKind.EVENT: "Events",
    VocabKind.ATTRIBUTE: "Attributes",
}

MARKER_FIRST = "First,"
MARKER_THEN = "Then,"
MARKER_AFTER = "After that,"
MARKER_FINALLY = "Finally,"


@dataclass(frozen=True)
class FrameCaption:
    frame_index: int
    text: str
    filter_score: float | None = None

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("frame caption must be non-empty")


@dataclass(frozen=True)
class AggregatedToken:
    """A phrase surviving video-level aggregation of per-frame tokens."""

    phrase: str
    kind: VocabKind
    best_score: float
    best_rank: int  # min rank across frames
    frequency: int  # number of frames with the phrase in their top-k
    temporal_indicator: float  # mean index of contributing frames


@dataclass(frozen=True)
class VideoRepresentation:
    """The three-level textual bundle for one video.

    Lists are stored in render order: ascending temporal position, or
    descending when the reversed ablation flag is set.
    """

    video_id: str
    frame_captions: tuple[FrameCaption, ...]
    tokens: dict[VocabKind, tuple[AggregatedToken, ...]]
    asr: str | None = None
    reversed: bool = False

    def rendered_lines(self, static: bool = False) -> list[str]:
        """The prompt lines for this video: one per token kind plus the caption line."""
        lines = [
            render_token_line(kind, list(self.tokens.get(kind, ())), static=static)
            for kind in (VocabKind.OBJECT, VocabKind.EVENT, VocabKind.ATTRIBUTE)
        ]
        lines.append(render_caption_lines(list(self.frame_captions), static=static))
        return lines

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "captions": [
                {"frame_index": c.frame_index, "text": c.text, "filter_score": c.filter_score}
                for c in self.frame_captions
            ],
            "tokens": {
                kind.value + "s": [
                    {
                        "phrase": t.phrase,
                        "best_score": t.best_score,
                        "best_rank": t.best_rank,
                        "frequency": t.frequency,
                        "temporal_indicator": t.temporal_indicator,
                    }
                    for t in self.tokens.get(kind, ())
                ]
                for kind in (VocabKind.OBJECT, VocabKind.EVENT, VocabKind.ATTRIBUTE)
            },
            "asr": self.asr,
            "flags": {"reversed": self.reversed},
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "VideoRepresentation":
        captions = tuple(
            FrameCaption(
                frame_index=c["frame_index"],
                text=c["text"],
                filter_score=c.get("filter_score"),
            )
            for c in payload["captions"]
        )
        tokens: dict[VocabKind, tuple[AggregatedToken, ...]] = {}
        for kind in (VocabKind.OBJECT, VocabKind.EVENT, VocabKind.ATTRIBUTE):
            entries = payload["tokens"].get(kind.value + "s", [])
            tokens[kind] = tuple(
                AggregatedToken(
                    phrase=e["phrase"],
                    kind=kind,
                    best_score=e["best_score"],
                    best_rank=e["best_rank"],
                    frequency=e["frequency"],
                    temporal_indicator=e["temporal_indicator"],
                )
                for e in entries
            )
        return cls(
            video_id=payload["video_id"],
            frame_captions=captions,
            tokens=tokens,
            asr=payload.get("asr"),
            reversed=payload.get("flags", {}).get("reversed", False),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "VideoRepresentation":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def aggregate_tokens(
    per_frame: dict[tuple[int, VocabKind], list[TokenScore]],
    top_m: int = DEFAULT_TOP_M,
    must_rank_within: int = DEFAULT_MUST_RANK_WITHIN,
) -> dict[VocabKind, list[AggregatedToken]]:
    """Merge per-frame tokens into ordered video-level tokens per kind.

    Per kind: (1) merge duplicate phrases across frames (best score, best
    rank, frame frequency, mean contributing frame index); (2) rank by best
    score descending with frequency descending as tie breaker; (3) keep the
    top ``top_m``; (4) drop survivors never ranked within
    ``must_rank_within`` in any frame; (5) order by ascending mean frame
    index, ties by descending best score.
    """
    if top_m < 1:
        raise ValueError("top_m must be >= 1")

    by_kind: dict[VocabKind, dict[str, list[TokenScore]]] = {}
    for (frame_index, kind), scores in per_frame.items():
        groups = by_kind.setdefault(kind, {})
        for token in scores:
            if token.rank < 1:
                raise ValueError(f"invalid rank {token.rank} for {token.phrase!r}")
            groups.setdefault(token.phrase, []).append(token)

    result: dict[VocabKind, list[AggregatedToken]] = {}
    for kind, groups in by_kind.items():
        merged = [
            AggregatedToken(
                phrase=phrase,
                kind=kind,
                best_score=max(t.score for t in hits),
                best_rank=min(t.rank for t in hits),
                frequency=len(hits),
                temporal_indicator=sum(t.frame_index for t in hits) / len(hits),
            )
            for phrase, hits in groups.items()
        ]
        merged.sort(key=lambda t: (-t.best_score, -t.frequency, t.phrase))
        survivors = [t for t in merged[:top_m] if t.best_rank <= must_rank_within]
        survivors.sort(key=lambda t: (t.temporal_indicator, -t.best_score, t.phrase))
        result[kind] = survivors
    return result


def temporal_markers(n: int) -> list[str]:
    """Temporal ordering prefixes for n items.

    Endpoints are fixed ("First,", "Finally,"); middle slots alternate
    "Then," and "After that," starting with "Then," so no marker repeats
    back-to-back.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return []
    if n == 1:
        return [MARKER_FIRST]
    middle = [MARKER_THEN if i % 2 == 0 else MARKER_AFTER for i in range(n - 2)]
    return [MARKER_FIRST, *middle, MARKER_FINALLY]


def _render_items(label: str, items: list[str], static: bool) -> str:
    if not items:
        return f"{label}: none."
    if static:
        rendered = " ".join(f"{item}." for item in items)
    else:
        markers = temporal_markers(len(items))
        rendered = " ".join(f"{marker} {item}." for marker, item in zip(markers, items))
    return f"{label}: {rendered}"


def render_token_line(kind: VocabKind, tokens: list[AggregatedToken], static: bool = False) -> str:
    """One prompt line for a token kind, e.g. "Objects: First, bath toy. Finally, towel."."""
    return _render_items(KIND_LABELS[kind], [t.phrase for t in tokens], static)


def render_caption_lines(captions: list[FrameCaption], static: bool = False) -> str:
    """The frame-caption prompt line, markers matching the caption count."""
    return _render_items("Frame Captions", [c.text for c in captions], static)


def select_caption(candidates: list[tuple[str, float]]) -> tuple[str, float]:
    """Caption filtering policy: keep the highest-scoring candidate (ties keep the first)."""
    if not candidates:
        raise ValueError("no caption candidates")
    best = candidates[0]
    for cand in candidates[1:]:
        if cand[1] > best[1]:
            best = cand
    return best


def build_representation(
    video_id: str,
    frame_captions: list[FrameCaption],
    per_frame_tokens: dict[tuple[int, VocabKind], list[TokenScore]],
    asr: str | None = None,
    reversed_order: bool = False,
    one_frame: bool = False,
    top_m: int = DEFAULT_TOP_M,
    must_rank_within: int = DEFAULT_MUST_RANK_WITHIN,
) -> VideoRepresentation:
    """Assemble the per-video representation, honoring the ablation flags.

    ``one_frame`` keeps only the middle frame's caption and the middle
    frame's tokens (middle of each level's own sampled-frame list).
    ``reversed_order`` reverses caption and token order after aggregation.
    """
    indices = [c.frame_index for c in frame_captions]
    if len(set(indices)) != len(indices):
        raise ValueError(f"duplicate caption frame indices for video {video_id!r}")
    captions = sorted(frame_captions, key=lambda c: c.frame_index)

    tokens_input = per_frame_tokens
    if one_frame:
        if captions:
            captions = [captions[len(captions) // 2]]
        token_frames = sorted({frame for frame, _ in per_frame_tokens})
        if token_frames:
            middle = token_frames[len(token_frames) // 2]
            tokens_input = {
                key: scores for key, scores in per_frame_tokens.items() if key[0] == middle
            }

    aggregated = aggregate_tokens(tokens_input, top_m=top_m, must_rank_within=must_rank_within)
    tokens = {
        kind: tuple(aggregated.get(kind, []))
        for kind in (VocabKind.OBJECT, VocabKind.EVENT, VocabKind.ATTRIBUTE)
    }

    if reversed_order:
        captions = list(reversed(captions))
        tokens = {kind: tuple(reversed(toks)) for kind, toks in tokens.items()}

    return VideoRepresentation(
        video_id=video_id,
        frame_captions=tuple(captions),
        tokens=tokens,
        asr=asr,
        reversed=reversed_order,
    )
