"""Typed errors shared across the engine."""


class DuomemError(Exception):
    """Base class for all engine errors."""


# -- memory store ------------------------------------------------------------

class MalformedOp(DuomemError):
    """A memory operation violates its field constraints."""


class DanglingTarget(DuomemError):
    """A modify/remove op addresses an item number that does not exist."""


class LongTermPresent(DuomemError):
    """FIFO eviction was attempted while long-term items remain in the buffer."""


class SchemaMismatch(DuomemError):
    """Snapshot document has an unsupported schema version."""


class CorruptSnapshot(DuomemError):
    """Snapshot document is truncated or structurally invalid."""


# -- model gateway -----------------------------------------------------------

class BackendUnavailable(DuomemError):
    """Transport to the model backend failed after exhausting retries."""


class BadRequest(DuomemError):
    """The request itself is invalid (unknown template, unbound slot, 4xx)."""


class ResponseTooLarge(DuomemError):
    """The backend response exceeds the configured size cap."""


class EmbedFailure(DuomemError):
    """Embedding backend returned no usable vector."""


class GroundingFailure(DuomemError):
    """Open-set grounding backend failed."""


class NoStructuredBlock(DuomemError):
    """Model output contains no parseable fenced block."""


class AmbiguousVerdict(DuomemError):
    """Judge output starts with neither YES nor NO."""


class MockScriptError(DuomemError):
    """Scripted mock consumed out of order or left entries behind."""


# -- retrieval ---------------------------------------------------------------

class DimensionMismatch(DuomemError):
    """Vectors with different dimensions were combined."""


class EmptyMemory(DuomemError):
    """Concept resolution was asked to score an empty memory union."""


# -- dataset -----------------------------------------------------------------

class SchemaError(DuomemError):
    """Dataset document violates the schema; message carries file context."""


class DanglingImageRef(DuomemError):
    """A turn or question references an image id with no backing file."""


# -- service -----------------------------------------------------------------

class UnknownSession(DuomemError):
    """Session id not found."""


class TurnInFlight(DuomemError):
    """A second turn was posted while one is still being processed."""
