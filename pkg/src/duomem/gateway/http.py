"""OpenAI-compatible HTTP backend plus a labeled-box grounding client.

Endpoint schemas:
  chat       POST {chat_url}      OpenAI chat-completions body; images sent
                                  as base64 data-URL image_url parts.
  embeddings POST {embed_url}     OpenAI embeddings body; image inputs are
                                  sent as {"image": "<base64>"} entries.
  grounding  POST {ground_url}    {"image": "<base64>", "categories": [...]}
                                  -> {"boxes": [{"label", "bbox": [x,y,w,h],
                                      "score"}, ...]}

Transport failures and 5xx map to BackendUnavailable (the gateway retries
those); 4xx map to BadRequest (never retried).
"""

from __future__ import annotations

import base64
import os
from dataclasses import dataclass, field
from typing import Optional

import httpx
import numpy as np

from duomem.errors import BackendUnavailable, BadRequest, EmbedFailure, GroundingFailure
from duomem.gateway.types import GroundingBox, ImageRef
from duomem.images import image_bytes


@dataclass
class HttpBackendConfig:
    chat_url: str = ""
    embed_url: str = ""
    ground_url: str = ""
    api_key: str = ""
    chat_model: str = "default"
    embed_model: str = "default"
    timeout: float = 60.0
    extra_headers: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_env(cls) -> "HttpBackendConfig":
        return cls(
            chat_url=os.environ.get("GW_CHAT_URL", ""),
            embed_url=os.environ.get("GW_EMBED_URL", ""),
            ground_url=os.environ.get("GW_GROUND_URL", ""),
            api_key=os.environ.get("GW_API_KEY", ""),
            chat_model=os.environ.get("GW_CHAT_MODEL", "default"),
            embed_model=os.environ.get("GW_EMBED_MODEL", "default"),
        )


def _data_url(image: ImageRef) -> str:
    return "data:image/png;base64," + base64.b64encode(image_bytes(image)).decode()


class HttpBackend:
    name = "http"

    def __init__(
        self,
        config: Optional[HttpBackendConfig] = None,
        client: Optional[httpx.Client] = None,
    ) -> None:
        self.config = config or HttpBackendConfig.from_env()
        headers = dict(self.config.extra_headers)
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        if client is None:
            client = httpx.Client(timeout=self.config.timeout, headers=headers)
        else:
            client.headers.update(headers)
        self._client = client

    def _post(self, url: str, body: dict) -> dict:
        if not url:
            raise BadRequest("backend URL not configured")
        try:
            response = self._client.post(url, json=body)
        except httpx.HTTPError as exc:
            raise BackendUnavailable(f"transport failure: {exc}") from exc
        if response.status_code >= 500:
            raise BackendUnavailable(f"server error {response.status_code}")
        if response.status_code >= 400:
            raise BadRequest(f"{response.status_code}: {response.text[:200]}")
        try:
            return response.json()
        except ValueError as exc:
            raise BackendUnavailable(f"non-JSON response: {exc}") from exc

    # -- chat -----------------------------------------------------------

    def chat(
        self,
        prompt_id: str,
        rendered: str,
        images: list[ImageRef],
        temperature: float,
    ) -> str:
        content: list[dict] = [{"type": "text", "text": rendered}]
        for image in images:
            content.append(
                {"type": "image_url", "image_url": {"url": _data_url(image)}}
            )
        body = {
            "model": self.config.chat_model,
            "messages": [{"role": "user", "content": content}],
            "temperature": temperature,
        }
        data = self._post(self.config.chat_url, body)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed chat response: {exc}") from exc

    # -- embeddings -----------------------------------------------------

    def _embed(self, entry) -> np.ndarray:
        body = {"model": self.config.embed_model, "input": [entry]}
        data = self._post(self.config.embed_url, body)
        try:
            return np.asarray(data["data"][0]["embedding"], dtype=float)
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise EmbedFailure(f"malformed embedding response: {exc}") from exc

    def embed_text(self, text: str) -> np.ndarray:
        return self._embed(text)

    def embed_image(self, image: ImageRef) -> np.ndarray:
        return self._embed({"image": base64.b64encode(image_bytes(image)).decode()})

    # -- grounding ------------------------------------------------------

    def ground(self, image: ImageRef, categories: list[str]) -> list[GroundingBox]:
        body = {
            "image": base64.b64encode(image_bytes(image)).decode(),
            "categories": categories,
        }
        data = self._post(self.config.ground_url, body)
        try:
            return [
                GroundingBox(
                    label=raw["label"],
                    bbox=tuple(float(v) for v in raw["bbox"]),
                    score=float(raw["score"]),
                )
                for raw in data["boxes"]
            ]
        except (KeyError, TypeError, ValueError) as exc:
            raise GroundingFailure(f"malformed grounding response: {exc}") from exc
