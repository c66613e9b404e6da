"""Request/response types for the model gateway."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from duomem.errors import BadRequest, DimensionMismatch

# An image handle is either a filesystem path or raw PNG/JPEG bytes.
ImageRef = Union[str, bytes]

# Default open-set grounding categories.
DEFAULT_CATEGORIES = ["person", "animal", "household item", "personal belonging"]


@dataclass
class ChatRequest:
    prompt_id: str
    slots: dict[str, str] = field(default_factory=dict)
    images: list[ImageRef] = field(default_factory=list)
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise BadRequest(f"temperature {self.temperature} outside [0, 2]")


@dataclass
class EmbeddingVector:
    values: np.ndarray
    modality: str  # "text" | "image"

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def dot(self, other: "EmbeddingVector") -> float:
        if self.dim != other.dim:
            raise DimensionMismatch(f"dim {self.dim} vs {other.dim}")
        return float(np.dot(self.values, other.values))


@dataclass
class GroundingBox:
    label: str
    bbox: tuple[float, float, float, float]  # x, y, w, h in pixels
    score: float

    def clipped(self, width: int, height: int) -> "GroundingBox":
        x, y, w, h = self.bbox
        x = min(max(x, 0.0), width)
        y = min(max(y, 0.0), height)
        w = min(w, width - x)
        h = min(h, height - y)
        return GroundingBox(self.label, (x, y, max(w, 0.0), max(h, 0.0)), self.score)
