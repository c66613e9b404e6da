from duomem.memory.types import (
    ATTR_TEXT_SOFT_WORD_LIMIT,
    AttributeKind,
    DynamicMemory,
    MemoryItem,
    MemoryOp,
    MemoryState,
    OpName,
    StaticMemory,
    TransitionPlan,
)
from duomem.memory.store import apply_ops, apply_transition, evict_fifo, locate, trigger
from duomem.memory.snapshot import SCHEMA_VERSION, restore, snapshot

__all__ = [
    "ATTR_TEXT_SOFT_WORD_LIMIT",
    "AttributeKind",
    "DynamicMemory",
    "MemoryItem",
    "MemoryOp",
    "MemoryState",
    "OpName",
    "StaticMemory",
    "TransitionPlan",
    "apply_ops",
    "apply_transition",
    "evict_fifo",
    "locate",
    "trigger",
    "SCHEMA_VERSION",
    "restore",
    "snapshot",
]
