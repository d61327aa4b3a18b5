"""FastAPI application implementing the provider wire protocol.

Endpoints: /embed_text, /embed_image, /caption, /complete, /extract_frames,
plus /health reporting model identities and dims. Malformed requests get
4xx; model failures get a structured 5xx body.
"""

from __future__ import annotations

import base64
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backends import BackendError, build_backend
from .config import SidecarConfig
from .frames import extract_frames


class EmbedTextRequest(BaseModel):
    texts: list[str] = Field(min_length=1)


class ImageRequest(BaseModel):
    image_b64: str | None = None
    path: str | None = None


class CompleteRequest(BaseModel):
    prompt: str = Field(min_length=1)
    temperature: float = 0.0
    max_tokens: int = 64
    stop: list[str] = []


class ExtractFramesRequest(BaseModel):
    video_path: str
    n: int | None = None
    level: str = "token"


def _apply_stop(text: str, stop: list[str]) -> str:
    cut = len(text)
    for sequence in stop:
        if sequence:
            position = text.find(sequence)
            if position != -1:
                cut = min(cut, position)
    return text[:cut]


def _image_bytes(request: ImageRequest) -> bytes:
    if bool(request.image_b64) == bool(request.path):
        raise HTTPException(status_code=400, detail="provide exactly one of image_b64 or path")
    if request.image_b64:
        try:
            return base64.b64decode(request.image_b64, validate=True)
        except Exception as exc:
            raise HTTPException(status_code=400, detail=f"invalid base64 image: {exc}")
    path = Path(request.path)
    if not path.is_file():
        raise HTTPException(status_code=400, detail=f"image not found: {path}")
    return path.read_bytes()


def create_app(config: SidecarConfig | None = None, backend=None) -> FastAPI:
    config = config or SidecarConfig()
    backend = backend or build_backend(config)
    app = FastAPI(title="model-sidecar")

    @app.exception_handler(BackendError)
    async def backend_error(request: Request, exc: BackendError):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    @app.get("/health")
    def health():
        return {
            "models": backend.identities,
            "dims": {"text": backend.text_dim, "image": backend.image_dim},
        }

    @app.post("/embed_text")
    def embed_text(request: EmbedTextRequest):
        vectors = backend.embed_texts(request.texts)
        return {"dim": backend.text_dim, "vectors": vectors}

    @app.post("/embed_image")
    def embed_image(request: ImageRequest):
        vector = backend.embed_image(_image_bytes(request))
        return {"dim": backend.image_dim, "vector": vector}

    @app.post("/caption")
    def caption(request: ImageRequest):
        text, filter_score = backend.caption_image(_image_bytes(request))
        return {"caption": text, "filter_score": filter_score}

    @app.post("/complete")
    def complete(request: CompleteRequest):
        text = backend.complete(
            request.prompt, request.temperature, request.max_tokens, request.stop
        )
        return {"text": _apply_stop(text, request.stop)}

    @app.post("/extract_frames")
    def extract(request: ExtractFramesRequest):
        if request.n is not None:
            n = request.n
        elif request.level == "caption":
            n = config.caption_frames
        elif request.level == "token":
            n = config.token_frames
        else:
            raise HTTPException(status_code=400, detail=f"unknown level {request.level!r}")
        if n < 1:
            raise HTTPException(status_code=400, detail="n must be >= 1")
        try:
            paths = extract_frames(request.video_path, n, config.frame_cache_dir)
        except (FileNotFoundError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"frame_paths": paths}

    return app
