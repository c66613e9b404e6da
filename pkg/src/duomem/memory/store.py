"""Pure operations over the double-memory state.

All mutating operations are atomic: they build the new item lists on copies
and commit only when every op in the batch resolved. target_id values always
address the 1-based numbering as it stood when the batch was rendered to the
model; item_no is reindexed to a contiguous 1..N only after the whole batch.
"""

from __future__ import annotations

from typing import Iterable, Union

from duomem.errors import DanglingTarget, LongTermPresent
from duomem.memory.types import (
    AttributeKind,
    DynamicMemory,
    MemoryItem,
    MemoryOp,
    MemoryState,
    OpName,
    StaticMemory,
    TransitionPlan,
)

Memory = Union[DynamicMemory, StaticMemory]


def _reindex(items: list[MemoryItem]) -> list[MemoryItem]:
    for pos, item in enumerate(items, start=1):
        item.item_no = pos
    return items


def _apply(
    items: list[MemoryItem],
    ops: Iterable[MemoryOp],
    next_seq: int,
    kind_for_adds: AttributeKind,
) -> tuple[list[MemoryItem], int]:
    working = [item.copy() for item in items]
    by_no = {item.item_no: item for item in working}
    removed: set[int] = set()

    for op in ops:
        if op.op is OpName.ADD:
            working.append(
                MemoryItem(
                    concept_id=op.concept_id,
                    text=str(op.memory_text),
                    kind=kind_for_adds,
                    seq=next_seq,
                )
            )
            next_seq += 1
            continue
        target = by_no.get(op.target_id)
        if target is None or target.seq in removed:
            raise DanglingTarget(
                f"{op.op.value} targets item {op.target_id}, which does not exist"
            )
        if target.concept_id != op.concept_id:
            raise DanglingTarget(
                f"item {op.target_id} belongs to {target.concept_id!r}, "
                f"not {op.concept_id!r}"
            )
        if op.op is OpName.MODIFY:
            target.text = str(op.memory_text)
        else:
            removed.add(target.seq)
            working = [i for i in working if i.seq != target.seq]

    return _reindex(working), next_seq


def apply_ops(
    memory: Memory,
    ops: list[MemoryOp],
    state: MemoryState,
    *,
    kind_for_adds: AttributeKind = AttributeKind.UNCLASSIFIED,
) -> Memory:
    """Apply an op batch atomically; memory is unchanged if any op fails."""
    new_items, next_seq = _apply(memory.items, ops, state.next_seq, kind_for_adds)
    memory.items = new_items
    state.next_seq = next_seq
    return memory


def trigger(ds: DynamicMemory) -> bool:
    """True iff the buffer is over capacity or holds any long-term item."""
    if len(ds.items) > ds.capacity_tau:
        return True
    return any(item.kind is AttributeKind.LONG_TERM for item in ds.items)


def evict_fifo(ds: DynamicMemory) -> list[MemoryItem]:
    """Drop oldest items until the buffer fits; returns the evicted items.

    Must run after long-term items have transitioned out.
    """
    if any(item.kind is AttributeKind.LONG_TERM for item in ds.items):
        raise LongTermPresent("transition long-term items before evicting")
    evicted: list[MemoryItem] = []
    while len(ds.items) > ds.capacity_tau:
        oldest = min(ds.items, key=lambda i: i.seq)
        ds.items.remove(oldest)
        evicted.append(oldest)
    _reindex(ds.items)
    return evicted


def apply_transition(state: MemoryState, plan: TransitionPlan) -> None:
    """Apply a transition plan to both memories, atomically as a pair.

    Items entering the static memory are forced to long-term kind.
    """
    new_ds, seq_after_ds = _apply(
        state.ds.items, plan.dynamic_ops, state.next_seq, AttributeKind.UNCLASSIFIED
    )
    new_sp, seq_after_sp = _apply(
        state.sp.items, plan.static_ops, seq_after_ds, AttributeKind.LONG_TERM
    )
    for item in new_sp:
        item.kind = AttributeKind.LONG_TERM
    state.ds.items = new_ds
    state.sp.items = new_sp
    state.next_seq = seq_after_sp


def locate(ds: DynamicMemory, sp: StaticMemory, concept_id: str) -> list[MemoryItem]:
    """All items for one concept: static items first, then dynamic items."""
    return [i for i in sp.items if i.concept_id == concept_id] + [
        i for i in ds.items if i.concept_id == concept_id
    ]
