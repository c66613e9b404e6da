"""Deterministic scripted backend for tests and offline runs.

Chat responses come from an ordered script of (prompt_id, response) pairs;
a response may be a string, a callable of the rendered prompt, or an
exception to raise (for retry testing). With no script (or once the script
is consumed in non-strict mode) per-prompt handlers and safe built-in
defaults take over, so the engine stays runnable with zero configuration.

Embeddings are unit-deterministic: a vector is derived from a SHA-256 of the
input, so identical inputs always embed identically. Specific inputs can be
pinned to engineered vectors via `embedding_overrides`.
"""

from __future__ import annotations

import hashlib
import threading
from typing import Callable, Optional, Union

import numpy as np

from duomem.errors import MockScriptError
from duomem.gateway.types import GroundingBox, ImageRef
from duomem.images import image_key

ChatResponse = Union[str, Exception, Callable[..., str]]

_BUILTIN_DEFAULTS = {
    "dsm_update": "```yaml\n[]\n```",
    "transition": "```yaml\ndynamic_ops: []\nstatic_ops: []\n```",
    "kind_classify": "```yaml\n[]\n```",
    "align": "",
    "answer": "I don't have enough recorded context to answer that yet.",
    "answer_full_context": "I don't have enough recorded context to answer that yet.",
    "judge_free_text": "YES",
    "judge_key_point": "YES",
}
_FALLBACK = "```yaml\n[]\n```"


def hash_vector(key: str, dim: int) -> np.ndarray:
    seed = int.from_bytes(hashlib.sha256(key.encode("utf-8")).digest()[:8], "big")
    return np.random.default_rng(seed).standard_normal(dim)


class MockBackend:
    name = "mock"

    def __init__(
        self,
        script: Optional[list[tuple[str, ChatResponse]]] = None,
        strict: bool = False,
        dim: int = 16,
        handlers: Optional[dict[str, Callable[..., str]]] = None,
        default_responses: Optional[dict[str, str]] = None,
        embedding_overrides: Optional[dict[str, np.ndarray]] = None,
        ground_results: Optional[list[list[GroundingBox]]] = None,
        ground_handler: Optional[Callable] = None,
    ) -> None:
        self.script = list(script) if script else []
        self.strict = strict
        self.dim = dim
        self.handlers = handlers or {}
        self.default_responses = default_responses or {}
        self.embedding_overrides = embedding_overrides or {}
        self.ground_results = list(ground_results) if ground_results else []
        self.ground_handler = ground_handler
        self.calls: list[tuple[str, str]] = []  # (prompt_id, rendered) capture
        self._lock = threading.Lock()

    # -- chat -----------------------------------------------------------

    def chat(
        self,
        prompt_id: str,
        rendered: str,
        images: list[ImageRef],
        temperature: float,
    ) -> str:
        with self._lock:
            self.calls.append((prompt_id, rendered))
            if self.script:
                expected, response = self.script[0]
                if expected != prompt_id:
                    if self.strict:
                        raise MockScriptError(
                            f"expected {expected!r} next, got {prompt_id!r}"
                        )
                else:
                    self.script.pop(0)
                    return self._realize(response, rendered, images)
            elif self.strict:
                raise MockScriptError(f"script exhausted; unexpected {prompt_id!r}")
        return self._default_for(prompt_id, rendered, images)

    def _realize(self, response: ChatResponse, rendered: str, images) -> str:
        if isinstance(response, Exception):
            raise response
        if callable(response):
            return response(rendered, images)
        return response

    def _default_for(self, prompt_id: str, rendered: str, images) -> str:
        if prompt_id in self.handlers:
            return self.handlers[prompt_id](rendered, images)
        if prompt_id in self.default_responses:
            return self.default_responses[prompt_id]
        return _BUILTIN_DEFAULTS.get(prompt_id, _FALLBACK)

    def assert_exhausted(self) -> None:
        if self.script:
            leftover = [pid for pid, _ in self.script]
            raise MockScriptError(f"unconsumed script entries: {leftover}")

    # -- embeddings -----------------------------------------------------

    def embed_text(self, text: str) -> np.ndarray:
        if text in self.embedding_overrides:
            return np.asarray(self.embedding_overrides[text], dtype=float)
        return hash_vector("text:" + text, self.dim)

    def embed_image(self, image: ImageRef) -> np.ndarray:
        key = image_key(image)
        if key in self.embedding_overrides:
            return np.asarray(self.embedding_overrides[key], dtype=float)
        return hash_vector("image:" + key, self.dim)

    # -- grounding ------------------------------------------------------

    def ground(self, image: ImageRef, categories: list[str]) -> list[GroundingBox]:
        if self.ground_handler is not None:
            return self.ground_handler(image, categories)
        if self.ground_results:
            return self.ground_results.pop(0)
        return []
