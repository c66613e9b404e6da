"""Parsers for structured model output.

The output contract for memory-editing calls is "first fenced block wins":
the model may emit an analysis preamble, then a fenced YAML block. A bare
``[]`` (the documented no-update marker) is accepted without a fence.
Every parser is total: arbitrary byte input yields a result or a typed error.
"""

from __future__ import annotations

import re
from typing import Any

import yaml

from duomem.errors import AmbiguousVerdict, MalformedOp, NoStructuredBlock
from duomem.memory.types import AttributeKind, MemoryOp, TransitionPlan

_FENCE_RE = re.compile(r"```[ \t]*(?:[A-Za-z0-9_+-]+)?[ \t]*\n(.*?)```", re.DOTALL)
_FIRST_WORD_RE = re.compile(r"[A-Za-z]+")
_BULLET_RE = re.compile(r"^\s*(?:[-*•])\s+(.*\S)\s*$")


def extract_fenced_block(raw: str) -> str:
    """First fenced code block in the text, unfenced content stripped."""
    if not isinstance(raw, str):
        raise NoStructuredBlock("input is not text")
    match = _FENCE_RE.search(raw)
    if match:
        return match.group(1)
    # Tolerate an unfenced reply consisting only of a preamble plus YAML,
    # which happens when chatty models drop the fence.
    stripped = "\n".join(
        line for line in raw.splitlines() if not line.lstrip().startswith("#")
    ).strip()
    if stripped:
        return stripped
    raise NoStructuredBlock("no fenced block found")


def _load_yaml(block: str) -> Any:
    try:
        return yaml.safe_load(block)
    except Exception as exc:  # yaml raises a zoo of error types on fuzz input
        raise NoStructuredBlock(f"unparseable block: {exc}") from exc


def _to_memory_op(entry: Any) -> MemoryOp:
    if not isinstance(entry, dict):
        raise MalformedOp(f"op entry is not a mapping: {entry!r}")
    concept_id = entry.get("concept_id")
    if not isinstance(concept_id, str):
        raise MalformedOp("op entry missing concept_id")
    op = entry.get("op")
    if not isinstance(op, str):
        raise MalformedOp("op entry missing op")
    memory = entry.get("memory")
    if memory is not None and not isinstance(memory, str):
        memory = str(memory)
    target = entry.get("target_id")
    if target is not None and not isinstance(target, int):
        raise MalformedOp(f"target_id must be an integer, got {target!r}")
    return MemoryOp(concept_id=concept_id, op=op, memory_text=memory, target_id=target)


def _op_list(data: Any, context: str) -> list[MemoryOp]:
    if data is None:
        return []
    if not isinstance(data, list):
        raise MalformedOp(f"{context} must be a list, got {type(data).__name__}")
    return [_to_memory_op(entry) for entry in data]


def parse_memory_ops(raw: str) -> list[MemoryOp]:
    """Parse the memory-update output into a list of atomic ops."""
    return _op_list(_load_yaml(extract_fenced_block(raw)), "memory ops")


def parse_transition_plan(raw: str) -> TransitionPlan:
    """Parse the transition output; both op-list keys are required."""
    data = _load_yaml(extract_fenced_block(raw))
    if not isinstance(data, dict):
        raise NoStructuredBlock("transition output is not a mapping")
    if "dynamic_ops" not in data or "static_ops" not in data:
        raise MalformedOp("transition output requires dynamic_ops and static_ops")
    return TransitionPlan(
        dynamic_ops=_op_list(data["dynamic_ops"], "dynamic_ops"),
        static_ops=_op_list(data["static_ops"], "static_ops"),
    )


def parse_judge_verdict(raw: str) -> bool:
    """YES/NO verdict, decided by the first alphabetic token."""
    if not isinstance(raw, str):
        raise AmbiguousVerdict("verdict is not text")
    match = _FIRST_WORD_RE.search(raw)
    token = match.group(0).upper() if match else ""
    if token == "YES":
        return True
    if token == "NO":
        return False
    raise AmbiguousVerdict(f"verdict starts with {token or raw[:20]!r}")


def parse_bullets(raw: str) -> list[str]:
    """Extract a simple bulleted list; non-bullet lines are ignored."""
    if not isinstance(raw, str):
        return []
    bullets = []
    for line in raw.splitlines():
        match = _BULLET_RE.match(line)
        if match:
            bullets.append(match.group(1))
    return bullets


def parse_kind_labels(raw: str) -> list[tuple[int, AttributeKind]]:
    """Parse the item-kind audit output: [(item_no, kind), ...]."""
    data = _load_yaml(extract_fenced_block(raw))
    if data is None:
        return []
    if not isinstance(data, list):
        raise MalformedOp("kind labels must be a list")
    labels: list[tuple[int, AttributeKind]] = []
    for entry in data:
        if not isinstance(entry, dict):
            raise MalformedOp(f"kind label entry is not a mapping: {entry!r}")
        target = entry.get("target_id")
        if not isinstance(target, int) or target < 1:
            raise MalformedOp(f"bad target_id in kind label: {target!r}")
        try:
            kind = AttributeKind(str(entry.get("kind")))
        except ValueError:
            raise MalformedOp(f"unknown kind {entry.get('kind')!r}") from None
        if kind is AttributeKind.UNCLASSIFIED:
            raise MalformedOp("kind label must be short_term or long_term")
        labels.append((target, kind))
    return labels
