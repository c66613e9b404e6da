"""Versioned, human-readable session snapshots with exact round-trip."""

from __future__ import annotations

import json
from typing import Any

from duomem.errors import CorruptSnapshot, SchemaMismatch
from duomem.memory.types import (
    AttributeKind,
    DynamicMemory,
    MemoryItem,
    MemoryState,
    StaticMemory,
)

SCHEMA_VERSION = 1


def _item_doc(item: MemoryItem) -> dict[str, Any]:
    doc: dict[str, Any] = {
        "concept_id": item.concept_id,
        "text": item.text,
        "kind": item.kind.value,
        "seq": item.seq,
        "item_no": item.item_no,
    }
    if item.image_ref is not None:
        doc["image_ref"] = item.image_ref
    return doc


def snapshot(state: MemoryState) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "tau": state.ds.capacity_tau,
        "seq_counter": state.next_seq,
        "dynamic": [_item_doc(i) for i in state.ds.items],
        "static": [_item_doc(i) for i in state.sp.items],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _parse_item(doc: Any) -> MemoryItem:
    if not isinstance(doc, dict):
        raise CorruptSnapshot("item entry is not a mapping")
    try:
        return MemoryItem(
            concept_id=doc["concept_id"],
            text=doc["text"],
            kind=AttributeKind(doc["kind"]),
            image_ref=doc.get("image_ref"),
            seq=int(doc["seq"]),
            item_no=int(doc["item_no"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptSnapshot(f"bad item entry: {exc}") from exc


def restore(document: str) -> MemoryState:
    try:
        doc = json.loads(document)
    except (json.JSONDecodeError, TypeError) as exc:
        raise CorruptSnapshot(f"unparseable snapshot: {exc}") from exc
    if not isinstance(doc, dict):
        raise CorruptSnapshot("snapshot root is not a mapping")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaMismatch(f"unsupported schema_version {version!r}")
    try:
        tau = int(doc["tau"])
        seq_counter = int(doc["seq_counter"])
        dynamic = doc["dynamic"]
        static = doc["static"]
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptSnapshot(f"missing or malformed field: {exc}") from exc
    if not isinstance(dynamic, list) or not isinstance(static, list):
        raise CorruptSnapshot("dynamic/static must be lists")
    return MemoryState(
        ds=DynamicMemory(capacity_tau=tau, items=[_parse_item(d) for d in dynamic]),
        sp=StaticMemory(items=[_parse_item(d) for d in static]),
        next_seq=seq_counter,
    )
