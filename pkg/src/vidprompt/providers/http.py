"""HTTP provider clients speaking the sidecar wire protocol.

Endpoints (JSON POST bodies, field names are part of the contract):
  /embed_text      {"texts": [...]}                    -> {"dim", "vectors"}
  /embed_image     {"image_b64" | "path": ...}         -> {"dim", "vector"}
  /caption         {"image_b64" | "path": ...}         -> {"caption", "filter_score"}
  /complete        {"prompt", "temperature",
                    "max_tokens", "stop"}              -> {"text"}
  /extract_frames  {"video_path", "n", "level"}        -> {"frame_paths"}

Transport failures are retried up to three times with exponential backoff;
HTTP error responses are surfaced immediately with their status and payload.
"""

from __future__ import annotations

import os
import time

import numpy as np
import requests

from .base import CompletionParams, ProviderError, apply_stop, normalize_rows

ENDPOINT_ENV = "VIDPROMPT_ENDPOINT"
API_KEY_ENV = "VIDPROMPT_API_KEY"

_MAX_ATTEMPTS = 3
_BACKOFF_SECONDS = 0.5


class HttpClient:
    """Shared POST-with-retry plumbing for all HTTP providers."""

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        session: requests.Session | None = None,
        timeout: float = 60.0,
        sleep=time.sleep,
    ):
        base_url = base_url or os.environ.get(ENDPOINT_ENV)
        if not base_url:
            raise ValueError(f"no endpoint URL; pass base_url or set {ENDPOINT_ENV}")
        self.base_url = base_url.rstrip("/")
        self._api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self._session = session or requests.Session()
        self._timeout = timeout
        self._sleep = sleep

    def post(self, path: str, payload: dict) -> dict:
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        url = f"{self.base_url}{path}"

        last_exc: Exception | None = None
        for attempt in range(_MAX_ATTEMPTS):
            try:
                response = self._session.post(
                    url, json=payload, headers=headers, timeout=self._timeout
                )
            except requests.RequestException as exc:
                last_exc = exc
                if attempt + 1 < _MAX_ATTEMPTS:
                    self._sleep(_BACKOFF_SECONDS * (2**attempt))
                continue
            if response.ok:
                return response.json()
            # A structured error from the backend is authoritative: no retry.
            try:
                error_payload = response.json()
            except ValueError:
                error_payload = response.text
            raise ProviderError(
                f"{url} returned {response.status_code}",
                status=response.status_code,
                payload=error_payload,
            )
        raise ProviderError(f"transport failure calling {url} after {_MAX_ATTEMPTS} attempts: {last_exc}")


class HttpTextEmbedder:
    def __init__(self, client: HttpClient, model_label: str = "text-embedder", dim: int | None = None):
        self._client = client
        self.identity = f"http-text-embedder:{client.base_url}:{model_label}"
        self.dim = dim  # pinned on first response when not declared

    def embed_texts(self, texts: list[str]) -> np.ndarray:
        if not texts:
            raise ProviderError("empty embedding batch")
        body = self._client.post("/embed_text", {"texts": list(texts)})
        vectors = np.asarray(body["vectors"], dtype=np.float64)
        self._check_dim(int(body["dim"]), vectors.shape)
        if vectors.shape[0] != len(texts):
            raise ProviderError(f"got {vectors.shape[0]} vectors for {len(texts)} texts")
        return normalize_rows(vectors)

    def _check_dim(self, reported: int, shape: tuple) -> None:
        if self.dim is None:
            self.dim = reported
        if reported != self.dim or shape[-1] != self.dim:
            raise ProviderError(f"embedding dim drift: expected {self.dim}, got {reported}/{shape}")


class HttpImageEmbedder:
    def __init__(self, client: HttpClient, model_label: str = "image-embedder", dim: int | None = None):
        self._client = client
        self.identity = f"http-image-embedder:{client.base_url}:{model_label}"
        self.dim = dim

    def embed_image(self, frame_ref: str) -> np.ndarray:
        body = self._client.post("/embed_image", {"path": frame_ref})
        vector = np.asarray(body["vector"], dtype=np.float64)
        reported = int(body["dim"])
        if self.dim is None:
            self.dim = reported
        if reported != self.dim or vector.shape != (self.dim,):
            raise ProviderError(f"embedding dim drift: expected {self.dim}, got {reported}")
        return normalize_rows(vector[None, :])[0]


class HttpCaptioner:
    def __init__(self, client: HttpClient, model_label: str = "captioner"):
        self._client = client
        self.identity = f"http-captioner:{client.base_url}:{model_label}"

    def caption_frame(self, frame_ref: str) -> tuple[str, float]:
        body = self._client.post("/caption", {"path": frame_ref})
        caption = body["caption"]
        score = float(body["filter_score"])
        if not caption:
            raise ProviderError(f"empty caption for {frame_ref!r}")
        if not np.isfinite(score):
            raise ProviderError(f"non-finite filter score for {frame_ref!r}")
        return caption, score


class HttpCompletion:
    def __init__(self, client: HttpClient, model_label: str = "completion"):
        self._client = client
        self.identity = f"http-completion:{client.base_url}:{model_label}"

    def complete(self, prompt: str, params: CompletionParams) -> str:
        if not prompt:
            raise ProviderError("prompt must be non-empty")
        body = self._client.post(
            "/complete",
            {
                "prompt": prompt,
                "temperature": params.temperature,
                "max_tokens": params.max_tokens,
                "stop": list(params.stop),
            },
        )
        # Truncate client-side as well; backends differ on stop handling.
        return apply_stop(body["text"], params.stop)


def extract_frames(client: HttpClient, video_path: str, n: int, level: str) -> list[str]:
    """Ask the sidecar to decode and sample n frames; returns image paths."""
    body = client.post("/extract_frames", {"video_path": video_path, "n": n, "level": level})
    return list(body["frame_paths"])
