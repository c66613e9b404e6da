"""Gateway: template rendering, retries, normalization, concurrency cap."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from duomem.errors import (
    BackendUnavailable,
    BadRequest,
    EmbedFailure,
    GroundingFailure,
    ResponseTooLarge,
)
from duomem.gateway.prompts import PromptRegistry, default_registry
from duomem.gateway.types import (
    DEFAULT_CATEGORIES,
    ChatRequest,
    EmbeddingVector,
    GroundingBox,
    ImageRef,
)
from duomem.images import image_key, image_size

NORM_TOLERANCE = 1e-6


@dataclass
class GatewayConfig:
    max_retries: int = 2          # transient retries beyond the first attempt
    backoff_base: float = 0.05    # seconds; doubles per retry
    backoff_cap: float = 2.0
    max_response_chars: int = 1_000_000
    max_concurrency: int = 4
    cache_embeddings: bool = True


class Gateway:
    """Uniform access to chat, embedding, and grounding backends."""

    def __init__(
        self,
        backend,
        registry: Optional[PromptRegistry] = None,
        config: Optional[GatewayConfig] = None,
    ) -> None:
        self.backend = backend
        self.registry = registry or default_registry()
        self.config = config or GatewayConfig()
        self._sem = threading.BoundedSemaphore(self.config.max_concurrency)
        self._embed_cache: dict[tuple[str, str], np.ndarray] = {}
        self._cache_lock = threading.Lock()

    # -- chat -----------------------------------------------------------

    def render(self, req: ChatRequest) -> str:
        return self.registry.render(req.prompt_id, req.slots)

    def chat(self, req: ChatRequest) -> str:
        rendered = self.render(req)
        last_error: Optional[Exception] = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                delay = min(
                    self.config.backoff_base * (2 ** (attempt - 1)),
                    self.config.backoff_cap,
                )
                time.sleep(delay)
            try:
                with self._sem:
                    text = self.backend.chat(
                        req.prompt_id, rendered, req.images, req.temperature
                    )
                break
            except BackendUnavailable as exc:
                last_error = exc
            # BadRequest and friends propagate: semantic errors never retry.
        else:
            raise BackendUnavailable(
                f"chat failed after {self.config.max_retries + 1} attempts: {last_error}"
            )
        if len(text) > self.config.max_response_chars:
            raise ResponseTooLarge(f"{len(text)} chars")
        return text

    # -- embeddings -----------------------------------------------------

    def _normalize(self, values: np.ndarray, modality: str) -> EmbeddingVector:
        values = np.asarray(values, dtype=float).reshape(-1)
        if values.size == 0 or not np.all(np.isfinite(values)):
            raise EmbedFailure(f"bad {modality} embedding")
        norm = float(np.linalg.norm(values))
        if norm == 0.0:
            raise EmbedFailure(f"zero-norm {modality} embedding")
        return EmbeddingVector(values=values / norm, modality=modality)

    def _cached(self, kind: str, key: str, produce) -> np.ndarray:
        if not self.config.cache_embeddings:
            return produce()
        cache_key = (kind, key)
        with self._cache_lock:
            if cache_key in self._embed_cache:
                return self._embed_cache[cache_key]
        values = produce()
        with self._cache_lock:
            self._embed_cache[cache_key] = values
        return values

    def embed_text(self, text: str) -> EmbeddingVector:
        if not text or not text.strip():
            raise EmbedFailure("empty text input")
        values = self._cached("text", text, lambda: self.backend.embed_text(text))
        return self._normalize(values, "text")

    def embed_image(self, image: ImageRef) -> EmbeddingVector:
        if not image:
            raise EmbedFailure("empty image input")
        values = self._cached(
            "image", image_key(image), lambda: self.backend.embed_image(image)
        )
        return self._normalize(values, "image")

    # -- grounding ------------------------------------------------------

    def ground(
        self, image: ImageRef, categories: Optional[list[str]] = None
    ) -> list[GroundingBox]:
        categories = categories if categories is not None else list(DEFAULT_CATEGORIES)
        if not categories:
            raise BadRequest("categories must be non-empty")
        boxes = self.backend.ground(image, categories)
        try:
            width, height = image_size(image)
        except Exception as exc:
            raise GroundingFailure(f"unreadable image: {exc}") from exc
        clipped = [box.clipped(width, height) for box in boxes]
        return sorted(clipped, key=lambda b: -b.score)
