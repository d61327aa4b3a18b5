"""Provider contracts, file-backed mocks, HTTP clients, and the response cache."""

from .base import (
    CaptionProvider,
    CompletionParams,
    CompletionProvider,
    ImageEmbedder,
    ProviderError,
    TextEmbedder,
    apply_stop,
    canonical_json,
    parallel_map,
)
from .cache import (
    CachedCaptioner,
    CachedCompletion,
    CachedImageEmbedder,
    CachedTextEmbedder,
    DiskCache,
)
from .http import (
    HttpCaptioner,
    HttpClient,
    HttpCompletion,
    HttpImageEmbedder,
    HttpTextEmbedder,
    extract_frames,
)
from .mock import MockCaptioner, MockCompletion, MockImageEmbedder, MockTextEmbedder, prompt_digest

__all__ = [
    "CaptionProvider",
    "CompletionParams",
    "CompletionProvider",
    "ImageEmbedder",
    "ProviderError",
    "TextEmbedder",
    "apply_stop",
    "canonical_json",
    "parallel_map",
    "CachedCaptioner",
    "CachedCompletion",
    "CachedImageEmbedder",
    "CachedTextEmbedder",
    "DiskCache",
    "HttpCaptioner",
    "HttpClient",
    "HttpCompletion",
    "HttpImageEmbedder",
    "HttpTextEmbedder",
    "extract_frames",
    "MockCaptioner",
    "MockCompletion",
    "MockImageEmbedder",
    "MockTextEmbedder",
    "prompt_digest",
]
