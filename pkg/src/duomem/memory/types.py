"""Data types for the double-memory store.

A session owns one DynamicMemory (bounded, FIFO-evicted buffer of recent
attribute records) and one StaticMemory (unbounded store of long-term
attributes, writable only via transitions out of the dynamic buffer).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

from duomem.errors import MalformedOp

# Soft cap from the memory-update instructions; over-length text is accepted.
ATTR_TEXT_SOFT_WORD_LIMIT = 25


class AttributeKind(str, Enum):
    SHORT_TERM = "short_term"
    LONG_TERM = "long_term"
    # Items enter the dynamic buffer unclassified; classification happens
    # when the transition machinery inspects them.
    UNCLASSIFIED = "unclassified"


class OpName(str, Enum):
    ADD = "add"
    MODIFY = "modify"
    REMOVE = "remove"


def validate_concept_id(value: str) -> str:
    if not isinstance(value, str) or not value.strip():
        raise MalformedOp("concept_id must be a non-empty string")
    return value


@dataclass
class MemoryItem:
    concept_id: str
    text: str
    kind: AttributeKind = AttributeKind.UNCLASSIFIED
    image_ref: Optional[str] = None
    seq: int = 0          # global insertion counter, stable FIFO key
    item_no: int = 0      # 1-based display index, reindexed after mutations

    def copy(self) -> "MemoryItem":
        return replace(self)


@dataclass
class MemoryOp:
    """One atomic add/modify/remove instruction parsed from model output."""

    concept_id: str
    op: OpName
    memory_text: Optional[str] = None
    target_id: Optional[int] = None

    def __post_init__(self) -> None:
        validate_concept_id(self.concept_id)
        if not isinstance(self.op, OpName):
            try:
                self.op = OpName(str(self.op).lower())
            except ValueError:
                raise MalformedOp(f"unknown op {self.op!r}") from None
        if self.op is OpName.ADD:
            if self.target_id is not None:
                raise MalformedOp("add must not carry a target_id")
            if not self.memory_text or not str(self.memory_text).strip():
                raise MalformedOp("add requires memory text")
        elif self.op is OpName.MODIFY:
            if not self.memory_text or not str(self.memory_text).strip():
                raise MalformedOp("modify requires memory text")
            self._check_target()
        else:  # REMOVE
            if self.memory_text is not None:
                raise MalformedOp("remove must not carry memory text")
            self._check_target()

    def _check_target(self) -> None:
        if not isinstance(self.target_id, int) or isinstance(self.target_id, bool):
            raise MalformedOp(f"{self.op.value} requires an integer target_id")
        if self.target_id < 1:
            raise MalformedOp("target_id must be >= 1")


@dataclass
class TransitionPlan:
    """Paired op lists produced by the transition step.

    dynamic_ops remove classified items from the dynamic buffer;
    static_ops add (or revise) the corresponding long-term facts.
    """

    dynamic_ops: list[MemoryOp] = field(default_factory=list)
    static_ops: list[MemoryOp] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not self.dynamic_ops and not self.static_ops


@dataclass
class DynamicMemory:
    capacity_tau: int = 10
    items: list[MemoryItem] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.capacity_tau < 1:
            raise ValueError("capacity_tau must be a positive integer")


@dataclass
class StaticMemory:
    items: list[MemoryItem] = field(default_factory=list)


@dataclass
class MemoryState:
    """Everything a session persists: both memories plus the seq counter."""

    ds: DynamicMemory = field(default_factory=DynamicMemory)
    sp: StaticMemory = field(default_factory=StaticMemory)
    next_seq: int = 1

    @classmethod
    def fresh(cls, tau: int = 10) -> "MemoryState":
        return cls(ds=DynamicMemory(capacity_tau=tau))
