"""Concept identification and context selection over memory items.

Every item is scored as a two-term sum of cosine similarities (vectors are
unit-normalized at the gateway, so cosine reduces to dot product):

  visual term   query-entity image vs. the item's stored image
  textual term  depends on the scoring mode:
                  cross_modal  query-entity image vs. the item's text
                  text_text    query text vs. the item's text

A missing modality contributes 0 to its term, except that a cross-modal
textual term falls back to text-text when the query carries no image, so
imageless questions still resolve by text.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

from duomem.errors import EmptyMemory
from duomem.gateway.core import Gateway
from duomem.gateway.types import EmbeddingVector, ImageRef
from duomem.memory.types import DynamicMemory, MemoryItem, StaticMemory

DEFAULT_TOP_E = 8


class ScoringMode(str, Enum):
    CROSS_MODAL = "cross_modal"
    TEXT_TEXT = "text_text"


@dataclass
class IndexedItem:
    item: MemoryItem
    text_vec: EmbeddingVector
    image_vec: Optional[EmbeddingVector] = None


@dataclass
class ScoreBreakdown:
    visual_term: float
    textual_term: float
    mode: ScoringMode

    @property
    def total(self) -> float:
        return self.visual_term + self.textual_term


def fused_score(
    query_img_vec: Optional[EmbeddingVector],
    query_text_vec: Optional[EmbeddingVector],
    indexed: IndexedItem,
    mode: ScoringMode = ScoringMode.CROSS_MODAL,
) -> ScoreBreakdown:
    visual = 0.0
    if query_img_vec is not None and indexed.image_vec is not None:
        visual = query_img_vec.dot(indexed.image_vec)

    textual = 0.0
    if mode is ScoringMode.CROSS_MODAL and query_img_vec is not None:
        textual = query_img_vec.dot(indexed.text_vec)
    elif query_text_vec is not None:
        textual = query_text_vec.dot(indexed.text_vec)

    return ScoreBreakdown(visual_term=visual, textual_term=textual, mode=mode)


def index_items(gateway: Gateway, items: list[MemoryItem]) -> list[IndexedItem]:
    """Embed each item's text (and image, when present) via the gateway."""
    indexed = []
    for item in items:
        indexed.append(
            IndexedItem(
                item=item,
                text_vec=gateway.embed_text(item.text),
                image_vec=(
                    gateway.embed_image(item.image_ref) if item.image_ref else None
                ),
            )
        )
    return indexed


def _sort_key(indexed: IndexedItem, score: float) -> tuple:
    # Higher score wins; on exact ties the older (lower-seq) item wins,
    # then lexicographic concept id.
    return (-score, indexed.item.seq, indexed.item.concept_id)


def resolve_concept(
    gateway: Gateway,
    entity_image: Optional[ImageRef],
    query_text: Optional[str],
    ds: DynamicMemory,
    sp: StaticMemory,
    mode: ScoringMode = ScoringMode.CROSS_MODAL,
    min_score: Optional[float] = None,
) -> str:
    """Concept id of the best-scoring item across both memories."""
    items = sp.items + ds.items
    if not items:
        raise EmptyMemory("no memory items to resolve against")
    query_img_vec = gateway.embed_image(entity_image) if entity_image else None
    query_text_vec = gateway.embed_text(query_text) if query_text else None
    indexed = index_items(gateway, items)
    scored = [
        (fused_score(query_img_vec, query_text_vec, ix, mode).total, ix)
        for ix in indexed
    ]
    total, best = min(scored, key=lambda pair: _sort_key(pair[1], pair[0]))
    if min_score is not None and total < min_score:
        raise EmptyMemory(f"best score {total:.4f} below cutoff {min_score}")
    return best.item.concept_id


def select_top_e(
    items: list[IndexedItem],
    query_text_vec: Optional[EmbeddingVector],
    query_img_vec: Optional[EmbeddingVector],
    top_e: int = DEFAULT_TOP_E,
    mode: ScoringMode = ScoringMode.CROSS_MODAL,
) -> list[MemoryItem]:
    """The E most relevant items; under budget, input order is preserved."""
    if top_e < 1:
        raise ValueError("top_e must be >= 1")
    if len(items) <= top_e:
        return [ix.item for ix in items]
    scored = [
        (fused_score(query_img_vec, query_text_vec, ix, mode).total, ix)
        for ix in items
    ]
    ranked = sorted(scored, key=lambda pair: _sort_key(pair[1], pair[0]))
    return [ix.item for _, ix in ranked[:top_e]]
