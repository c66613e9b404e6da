from duomem.gateway.core import Gateway, GatewayConfig, NORM_TOLERANCE
from duomem.gateway.http import HttpBackend, HttpBackendConfig
from duomem.gateway.mock import MockBackend, hash_vector
from duomem.gateway.parsers import (
    extract_fenced_block,
    parse_bullets,
    parse_judge_verdict,
    parse_kind_labels,
    parse_memory_ops,
    parse_transition_plan,
)
from duomem.gateway.prompts import PromptRegistry, default_registry
from duomem.gateway.types import (
    DEFAULT_CATEGORIES,
    ChatRequest,
    EmbeddingVector,
    GroundingBox,
    ImageRef,
)

__all__ = [
    "Gateway",
    "GatewayConfig",
    "NORM_TOLERANCE",
    "HttpBackend",
    "HttpBackendConfig",
    "MockBackend",
    "hash_vector",
    "extract_fenced_block",
    "parse_bullets",
    "parse_judge_verdict",
    "parse_kind_labels",
    "parse_memory_ops",
    "parse_transition_plan",
    "PromptRegistry",
    "default_registry",
    "DEFAULT_CATEGORIES",
    "ChatRequest",
    "EmbeddingVector",
    "GroundingBox",
    "ImageRef",
]
