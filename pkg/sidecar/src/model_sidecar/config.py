"""Sidecar configuration: which models to host and where to serve."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path


@dataclass(frozen=True)
class SidecarConfig:
    backend: str = "stub"  # "stub" (deterministic, no weights) or "real"

    # model identifiers for the real backend
    encoder_model: str = "openai/clip-vit-large-patch14"
    captioner_model: str = "Salesforce/blip-image-captioning-base"
    matcher_model: str = "Salesforce/blip-itm-base-coco"
    sentence_model: str = "sentence-transformers/all-MiniLM-L6-v2"

    # upstream LLM passthrough for /complete
    llm_endpoint: str | None = None
    llm_api_key: str | None = None

    host: str = "127.0.0.1"
    port: int = 8040
    frame_cache_dir: str = "frame_cache"

    # declared dims; served vectors must match
    text_dim: int = 384
    image_dim: int = 768
    caption_frames: int = 4
    token_frames: int = 8

    @classmethod
    def from_file(cls, path: str | Path) -> "SidecarConfig":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ValueError(f"unknown sidecar config keys: {sorted(unknown)}")
        return cls(**payload)

    @classmethod
    def from_env(cls) -> "SidecarConfig":
        return cls(
            llm_endpoint=os.environ.get("SIDECAR_LLM_ENDPOINT"),
            llm_api_key=os.environ.get("SIDECAR_LLM_API_KEY"),
        )
