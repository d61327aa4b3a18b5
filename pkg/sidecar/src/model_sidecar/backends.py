"""Model backends: a deterministic stub and the real frozen-model stack.

The stub serves the full wire protocol with hash-derived unit vectors and
templated captions; it exists so protocol conformance is testable without
downloading any weights. The real backend lazily loads CLIP, BLIP (captioner
plus matching head), and a sentence embedder, and forwards /complete to an
upstream LLM endpoint.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .config import SidecarConfig


class BackendError(RuntimeError):
    """Raised when a hosted model fails; surfaces as a structured 5xx."""


def _unit_vector_from_digest(data: bytes, dim: int) -> list[float]:
    seed = int.from_bytes(hashlib.sha256(data).digest()[:8], "big")
    rng = np.random.RandomState(seed % (2**32))
    vector = rng.normal(size=dim)
    vector /= np.linalg.norm(vector)
    return vector.tolist()


class DeterministicStubBackend:
    """No-weights backend: deterministic, unit-norm, dimension-stable."""

    def __init__(self, config: SidecarConfig):
        self.config = config
        self.text_dim = config.text_dim
        self.image_dim = config.image_dim
        self.identities = {
            "encoder": "stub-encoder",
            "captioner": "stub-captioner",
            "sentence_embedder": "stub-sentence-embedder",
            "llm": "stub-llm",
        }

    def embed_texts(self, texts: list[str]) -> list[list[float]]:
        return [
            _unit_vector_from_digest(b"text:" + text.encode("utf-8"), self.text_dim)
            for text in texts
        ]

    def embed_image(self, data: bytes) -> list[float]:
        return _unit_vector_from_digest(b"image:" + data, self.image_dim)

    def caption_image(self, data: bytes) -> tuple[str, float]:
        digest = hashlib.sha256(data).hexdigest()
        score = 0.5 + int(digest[:4], 16) / (2 * 0xFFFF)  # deterministic in (0.5, 1.0]
        return f"a frame showing scene {digest[:8]}", score

    def complete(self, prompt: str, temperature: float, max_tokens: int, stop: list[str]) -> str:
        digest = hashlib.sha256(prompt.encode("utf-8")).hexdigest()
        return f"stub completion {digest[:8]}"


class RealModelBackend:
    """Frozen pretrained models; imports torch lazily so the stub path stays light.

    Captioning follows a generate-then-filter scheme: up to three candidate
    captions are generated, each scored with the image-text matching head,
    and the argmax candidate is returned with its score.
    """

    def __init__(self, config: SidecarConfig):
        try:
            import torch
            from PIL import Image  # noqa: F401
            from sentence_transformers import SentenceTransformer
            from transformers import (
                BlipForConditionalGeneration,
                BlipForImageTextRetrieval,
                BlipProcessor,
                CLIPModel,
                CLIPProcessor,
            )
        except ImportError as exc:
            raise BackendError(
                f"real backend needs the [models] extra installed: {exc}"
            ) from exc

        self._torch = torch
        self.config = config
        self._clip = CLIPModel.from_pretrained(config.encoder_model).eval()
        self._clip_processor = CLIPProcessor.from_pretrained(config.encoder_model)
        self._captioner = BlipForConditionalGeneration.from_pretrained(
            config.captioner_model
        ).eval()
        self._caption_processor = BlipProcessor.from_pretrained(config.captioner_model)
        self._matcher = BlipForImageTextRetrieval.from_pretrained(config.matcher_model).eval()
        self._matcher_processor = BlipProcessor.from_pretrained(config.matcher_model)
        self._sentences = SentenceTransformer(config.sentence_model)

        self.text_dim = self._sentences.get_sentence_embedding_dimension()
        self.image_dim = self._clip.config.projection_dim
        self.identities = {
            "encoder": config.encoder_model,
            "captioner": config.captioner_model,
            "matcher": config.matcher_model,
            "sentence_embedder": config.sentence_model,
            "llm": config.llm_endpoint or "unset",
        }

    def _pil(self, data: bytes):
        import io

        from PIL import Image

        return Image.open(io.BytesIO(data)).convert("RGB")

    def embed_texts(self, texts: list[str]) -> list[list[float]]:
        matrix = self._sentences.encode(texts, normalize_embeddings=True)
        return np.asarray(matrix, dtype=np.float64).tolist()

    def embed_image(self, data: bytes) -> list[float]:
        torch = self._torch
        inputs = self._clip_processor(images=self._pil(data), return_tensors="pt")
        with torch.no_grad():
            features = self._clip.get_image_features(**inputs)[0]
        vector = features / features.norm()
        return vector.cpu().double().tolist()

    def embed_clip_texts(self, texts: list[str]) -> list[list[float]]:
        """CLIP-space text embeddings, for building retrieval vocabularies."""
        torch = self._torch
        inputs = self._clip_processor(text=texts, return_tensors="pt", padding=True, truncation=True)
        with torch.no_grad():
            features = self._clip.get_text_features(**inputs)
        features = features / features.norm(dim=-1, keepdim=True)
        return features.cpu().double().tolist()

    def caption_image(self, data: bytes) -> tuple[str, float]:
        torch = self._torch
        image = self._pil(data)
        inputs = self._caption_processor(images=image, return_tensors="pt")
        with torch.no_grad():
            outputs = self._captioner.generate(
                **inputs, num_beams=3, num_return_sequences=3, max_new_tokens=32
            )
        candidates = [
            self._caption_processor.decode(seq, skip_special_tokens=True).strip()
            for seq in outputs
        ]
        candidates = [c for c in candidates if c] or ["an image"]

        best_caption, best_score = None, float("-inf")
        for candidate in candidates:
            match_inputs = self._matcher_processor(
                images=image, text=candidate, return_tensors="pt"
            )
            with torch.no_grad():
                logits = self._matcher(**match_inputs).itm_score
            score = float(torch.softmax(logits, dim=-1)[0, 1])
            if score > best_score:
                best_caption, best_score = candidate, score
        return best_caption, best_score

    def complete(self, prompt: str, temperature: float, max_tokens: int, stop: list[str]) -> str:
        if not self.config.llm_endpoint:
            raise BackendError("no upstream LLM endpoint configured")
        import requests

        headers = {}
        if self.config.llm_api_key:
            headers["Authorization"] = f"Bearer {self.config.llm_api_key}"
        response = requests.post(
            self.config.llm_endpoint,
            json={
                "prompt": prompt,
                "temperature": temperature,
                "max_tokens": max_tokens,
                "stop": stop,
            },
            headers=headers,
            timeout=120,
        )
        if not response.ok:
            raise BackendError(f"upstream LLM returned {response.status_code}: {response.text}")
        return response.json()["text"]


def build_backend(config: SidecarConfig):
    if config.backend == "stub":
        return DeterministicStubBackend(config)
    if config.backend == "real":
        return RealModelBackend(config)
    raise ValueError(f"unknown backend {config.backend!r}")
