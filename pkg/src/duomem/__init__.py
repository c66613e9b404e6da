"""Double-memory personalized dialogue engine."""

from duomem.memory import (
    AttributeKind,
    DynamicMemory,
    MemoryItem,
    MemoryOp,
    MemoryState,
    OpName,
    StaticMemory,
    TransitionPlan,
    apply_ops,
    apply_transition,
    evict_fifo,
    locate,
    trigger,
)
from duomem.memory.snapshot import restore, snapshot
from duomem.gateway.core import Gateway, GatewayConfig
from duomem.gateway.mock import MockBackend
from duomem.pipeline import DialogueTurn, PipelineConfig, Query, Session
from duomem.evaluation import Evaluator, MetricsReport, RunSpec

__version__ = "0.1.0"

__all__ = [
    "AttributeKind",
    "DialogueTurn",
    "DynamicMemory",
    "Evaluator",
    "Gateway",
    "GatewayConfig",
    "MemoryItem",
    "MemoryOp",
    "MemoryState",
    "MetricsReport",
    "MockBackend",
    "OpName",
    "PipelineConfig",
    "Query",
    "RunSpec",
    "Session",
    "StaticMemory",
    "TransitionPlan",
    "apply_ops",
    "apply_transition",
    "evict_fifo",
    "locate",
    "restore",
    "snapshot",
    "trigger",
]
