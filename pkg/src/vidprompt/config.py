"""Run configuration: every pipeline constant in one serializable place.

Defaults: 4 caption frames, 8 token frames, top-5 tokens per frame, up to 4
video-level tokens filtered at rank 2, support size 10 with 5 in-context
examples, dedup threshold 0.9. Every value can be overridden by config file
or CLI flag, flags winning.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .providers.base import canonical_json


@dataclass(frozen=True)
class RunConfig:
    task: str = "caption"
    dataset: str = ""
    representations_dir: str = ""
    output_dir: str = "out"

    # provider wiring: mock tables and/or an HTTP endpoint
    text_embed_table: str | None = None
    image_embed_table: str | None = None
    caption_table: str | None = None
    completion_table: str | None = None
    endpoint: str | None = None
    cache_dir: str | None = None

    # vocabulary build inputs / outputs
    vocab_sources: dict = field(default_factory=dict)  # kind -> phrase file
    vocab_blocklist: str | None = None
    event_labels: str | None = None  # precomputed verb/argument labels (JSON)
    vocab_dir: str = "vocab"

    # pipeline constants
    support_size: int = 10
    in_context: int = 5
    seeds: tuple[int, ...] = (1, 2, 3)
    caption_frames: int = 4
    token_frames: int = 8
    top_k: int = 5
    top_m: int = 4
    must_rank_within: int = 2
    dedup_threshold: float = 0.9
    temperature: float = 0.0
    max_tokens: int = 64
    stop: tuple[str, ...] = ("\n",)

    # ablation flags
    one_frame: bool = False
    reversed_order: bool = False
    static_markers: bool = False

    def to_dict(self) -> dict:
        payload = asdict(self)
        payload["seeds"] = list(self.seeds)
        payload["stop"] = list(self.stop)
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        payload = dict(payload)
        if "seeds" in payload:
            payload["seeds"] = tuple(payload["seeds"])
        if "stop" in payload:
            payload["stop"] = tuple(payload["stop"])
        return cls(**payload)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True), encoding="utf-8")

    def with_overrides(self, **overrides) -> "RunConfig":
        """Apply non-None overrides (CLI flags beat config-file values)."""
        changes = {key: value for key, value in overrides.items() if value is not None}
        if "seeds" in changes:
            changes["seeds"] = tuple(changes["seeds"])
        return replace(self, **changes)

    def config_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode("utf-8")).hexdigest()
