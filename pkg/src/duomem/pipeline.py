"""End-to-end orchestration of the double-memory assistant.

Phase 1  ingest_turn: per-turn dynamic-memory update, kind classification,
         trigger-driven transition into static memory, FIFO eviction.
Phase 2  run_query: segment the query image, resolve the concept by fused
         similarity, locate and select the most relevant items, align them
         to the question, generate the answer.
Phase 3  the fresh (question, answer) pair is ingested like any other turn.

All bookkeeping (audit log, traces) uses logical step counters instead of
wall-clock time so that scripted sessions replay byte-identically.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional

from duomem.errors import (
    DuomemError,
    EmptyMemory,
    GroundingFailure,
    MalformedOp,
    NoStructuredBlock,
)
from duomem.gateway.core import Gateway
from duomem.gateway.parsers import (
    parse_bullets,
    parse_kind_labels,
    parse_memory_ops,
    parse_transition_plan,
)
from duomem.gateway.types import ChatRequest, ImageRef
from duomem.images import crop_image, image_size
from duomem.memory.store import (
    apply_ops,
    apply_transition,
    evict_fifo,
    locate,
    trigger,
)
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
from duomem.retrieval import (
    DEFAULT_TOP_E,
    ScoringMode,
    index_items,
    resolve_concept,
    select_top_e,
)


@dataclass
class DialogueTurn:
    user_text: str
    assistant_text: str = ""
    image: Optional[ImageRef] = None
    turn_id: int = 0
    concept_id: Optional[str] = None


@dataclass
class Query:
    text: str
    image: Optional[ImageRef] = None
    turn_id: int = 0

    def __post_init__(self) -> None:
        if not self.text or not self.text.strip():
            raise ValueError("query text must be non-empty")


@dataclass
class PipelineConfig:
    no_ds: bool = False
    no_sp: bool = False
    no_memory: bool = False
    no_align: bool = False
    no_retrieval: bool = False
    scoring_mode: ScoringMode = ScoringMode.CROSS_MODAL
    top_e: int = DEFAULT_TOP_E
    tau: int = 10
    parse_retries: int = 1
    classify_kinds: bool = True
    min_score: Optional[float] = None
    categories: Optional[list[str]] = None

    def __post_init__(self) -> None:
        if self.no_memory:
            self.no_ds = True
            self.no_sp = True
        if isinstance(self.scoring_mode, str):
            self.scoring_mode = ScoringMode(self.scoring_mode)

    def to_dict(self) -> dict:
        doc = dataclasses.asdict(self)
        doc["scoring_mode"] = self.scoring_mode.value
        return doc


@dataclass
class AlignedContext:
    source_concept: str
    bullets: list[str]
    provenance: list[dict] = field(default_factory=list)
    degraded: bool = False


_EMPTY_CONTEXT = "(no memory available)"


def render_items(items: list[MemoryItem]) -> str:
    """Numbered listing exactly as addressed by target_id."""
    if not items:
        return "[]"
    return "\n".join(f"{i.item_no}. [{i.concept_id}] {i.text}" for i in items)


class Session:
    """One conversation's state machine; turns are strictly sequential."""

    def __init__(
        self,
        gateway: Gateway,
        config: Optional[PipelineConfig] = None,
        session_id: str = "session",
    ) -> None:
        self.gateway = gateway
        self.config = config or PipelineConfig()
        self.session_id = session_id
        self.memory = MemoryState.fresh(self.config.tau)
        self.audit_log: list[dict] = []
        self.traces: dict[str, dict] = {}
        self.unprocessed: list[dict] = []
        self._step = 0
        self._trace_counter = 0

    # -- small helpers ----------------------------------------------------

    def _next_step(self) -> int:
        self._step += 1
        return self._step

    def _chat(self, prompt_id: str, slots: dict, images=None) -> str:
        req = ChatRequest(prompt_id=prompt_id, slots=slots, images=images or [])
        return self.gateway.chat(req)

    def _chat_parsed(self, prompt_id: str, slots: dict, parse: Callable, images=None):
        """Chat then parse, with one automatic re-prompt on parse failure."""
        attempts = self.config.parse_retries + 1
        last: Optional[Exception] = None
        for _ in range(attempts):
            raw = self._chat(prompt_id, slots, images)
            try:
                return parse(raw)
            except (NoStructuredBlock, MalformedOp) as exc:
                last = exc
        raise last  # type: ignore[misc]

    # -- Phase 1: ingestion ------------------------------------------------

    def ingest_turn(self, turn: DialogueTurn) -> dict:
        record: dict = {
            "step": self._next_step(),
            "kind": "ingest",
            "turn_id": turn.turn_id,
            "ops": [],
            "plan": None,
            "evicted": [],
            "status": "ok",
        }
        slots = {
            "concept_id": turn.concept_id or "unknown",
            "dynamic_memory": render_items(self.memory.ds.items),
            "question": turn.user_text,
            "answer": turn.assistant_text,
            "image_attached": "Yes" if turn.image else "No",
        }
        images = [turn.image] if turn.image else []
        try:
            ops = self._chat_parsed("dsm_update", slots, parse_memory_ops, images)
        except (NoStructuredBlock, MalformedOp) as exc:
            record["status"] = "unprocessed"
            record["reason"] = str(exc)
            self.unprocessed.append(record)
            self.audit_log.append(record)
            return record

        try:
            apply_ops(self.memory.ds, ops, self.memory)
        except DuomemError as exc:
            record["status"] = "unprocessed"
            record["reason"] = str(exc)
            self.unprocessed.append(record)
            self.audit_log.append(record)
            return record
        record["ops"] = [_op_doc(op) for op in ops]

        if ops and self.config.classify_kinds:
            self._classify_kinds(record)

        if trigger(self.memory.ds):
            self._run_transition(record)
        self.audit_log.append(record)
        return record

    def _classify_kinds(self, record: dict) -> None:
        unclassified = [
            i for i in self.memory.ds.items if i.kind is AttributeKind.UNCLASSIFIED
        ]
        if not unclassified:
            return
        slots = {"dynamic_memory": render_items(self.memory.ds.items)}
        try:
            labels = self._chat_parsed("kind_classify", slots, parse_kind_labels)
        except (NoStructuredBlock, MalformedOp) as exc:
            record.setdefault("degradations", []).append(
                f"kind classification skipped: {exc}"
            )
            return
        by_no = {i.item_no: i for i in self.memory.ds.items}
        for item_no, kind in labels:
            item = by_no.get(item_no)
            if item is not None:
                item.kind = kind
        record["kinds"] = [[no, kind.value] for no, kind in labels]

    def _run_transition(self, record: dict) -> None:
        concept = _dominant_concept(self.memory.ds.items) or "unknown"
        slots = {
            "concept_id": concept,
            "dynamic_memory": render_items(self.memory.ds.items),
            "static_memory": render_items(self.memory.sp.items),
        }
        plan: Optional[TransitionPlan] = None
        try:
            plan = self._chat_parsed("transition", slots, parse_transition_plan)
        except (NoStructuredBlock, MalformedOp) as exc:
            record.setdefault("degradations", []).append(
                f"transition parse failed: {exc}"
            )
        if plan is not None and not plan.is_empty():
            try:
                apply_transition(self.memory, plan)
                record["plan"] = _plan_doc(plan)
            except DuomemError as exc:
                record.setdefault("degradations", []).append(
                    f"transition rejected: {exc}"
                )

        # Long-term items the model declined to move block FIFO eviction;
        # move them structurally so capacity can be enforced.
        leftovers = [
            i for i in self.memory.ds.items if i.kind is AttributeKind.LONG_TERM
        ]
        if leftovers:
            forced = TransitionPlan(
                dynamic_ops=[
                    MemoryOp(i.concept_id, OpName.REMOVE, target_id=i.item_no)
                    for i in leftovers
                ],
                static_ops=[
                    MemoryOp(i.concept_id, OpName.ADD, memory_text=i.text)
                    for i in leftovers
                ],
            )
            apply_transition(self.memory, forced)
            record["forced_transition"] = _plan_doc(forced)

        if len(self.memory.ds.items) > self.memory.ds.capacity_tau:
            evicted = evict_fifo(self.memory.ds)
            record["evicted"] = [_item_doc(i) for i in evicted]

    # -- Phase 2: answering --------------------------------------------

    def segment_query(self, query: Query) -> list[tuple[ImageRef, float]]:
        """Entity crops with scores, best first; whole image as fallback."""
        if query.image is None:
            return []
        try:
            boxes = self.gateway.ground(
                query.image, self.config.categories
            )
        except GroundingFailure:
            return [(query.image, 0.0)]
        if not boxes:
            return [(query.image, 0.0)]
        return [(crop_image(query.image, b.bbox), b.score) for b in boxes]

    def _visible_memories(self) -> tuple[DynamicMemory, StaticMemory]:
        ds = DynamicMemory(capacity_tau=self.memory.ds.capacity_tau)
        sp = StaticMemory()
        if not self.config.no_ds:
            ds.items = self.memory.ds.items
        if not self.config.no_sp:
            sp.items = self.memory.sp.items
        return ds, sp

    def align(self, query: Query, items: list[MemoryItem], concept_id: str) -> AlignedContext:
        provenance = [
            {
                "memory": "sp" if any(s.seq == i.seq for s in self.memory.sp.items) else "ds",
                "seq": i.seq,
                "text": i.text,
            }
            for i in items
        ]
        listing = "\n".join(
            [f"Concept ID: {concept_id}", "Memories:"]
            + [f"- {i.text}" for i in items]
        )
        slots = {
            "question": query.text,
            "image_attached": "Yes" if query.image else "No",
            "memory_context": listing,
        }
        try:
            raw = self._chat("align", slots)
        except DuomemError:
            # Degrade: pass the raw item texts through unaligned.
            return AlignedContext(
                source_concept=concept_id,
                bullets=[i.text for i in items],
                provenance=provenance,
                degraded=True,
            )
        return AlignedContext(
            source_concept=concept_id,
            bullets=parse_bullets(raw),
            provenance=provenance,
        )

    def answer(self, query: Query, context_text: str) -> str:
        slots = {
            "context": context_text if context_text else _EMPTY_CONTEXT,
            "question": query.text,
            "image_status": (
                "Image provided: Yes" if query.image else "Image provided: No"
            ),
        }
        images = [query.image] if query.image else []
        return self._chat("answer", slots, images)

    def run_query(self, query: Query) -> tuple[str, dict]:
        cfg = self.config
        self._trace_counter += 1
        trace: dict = {
            "trace_id": f"t{self._trace_counter}",
            "session_id": self.session_id,
            "query": {"text": query.text, "has_image": query.image is not None},
            "events": [],
            "crops": 0,
            "resolved": [],
            "selected": [],
            "contexts": [],
            "degradations": [],
        }

        def event(name: str, **detail) -> None:
            trace["events"].append({"step": self._next_step(), "name": name, **detail})

        contexts: list[AlignedContext] = []
        if cfg.no_memory:
            event("memoryless", reason="memory ablated")
        elif cfg.no_retrieval:
            ds, sp = self._visible_memories()
            all_items = sp.items + ds.items
            event("digest", items=len(all_items))
            if all_items:
                contexts = [self._contextualize(query, all_items, "all", trace)]
        else:
            contexts = self._retrieve_contexts(query, trace, event)

        context_text = _render_contexts(contexts)
        answer_text = self.answer(query, context_text)
        event("answer", chars=len(answer_text))
        trace["answer"] = answer_text

        # Phase 3: the new exchange becomes part of history.
        if not cfg.no_memory:
            primary = contexts[0].source_concept if contexts else None
            record = self.ingest_turn(
                DialogueTurn(
                    user_text=query.text,
                    assistant_text=answer_text,
                    image=query.image,
                    turn_id=query.turn_id,
                    concept_id=primary if primary not in (None, "all") else None,
                )
            )
            event("memory_update", status=record["status"])

        self.traces[trace["trace_id"]] = trace
        return answer_text, trace

    def _retrieve_contexts(self, query: Query, trace: dict, event) -> list[AlignedContext]:
        cfg = self.config
        ds, sp = self._visible_memories()
        crops = self.segment_query(query)
        trace["crops"] = len(crops)
        if crops:
            event("segment", crops=len(crops))
        entities: list[Optional[ImageRef]] = [c for c, _ in crops] or [None]

        contexts: list[AlignedContext] = []
        seen: set[str] = set()
        for entity in entities:
            try:
                cid = resolve_concept(
                    self.gateway,
                    entity,
                    query.text,
                    ds,
                    sp,
                    mode=cfg.scoring_mode,
                    min_score=cfg.min_score,
                )
            except EmptyMemory as exc:
                trace["degradations"].append(f"memoryless answer: {exc}")
                event("memoryless", reason=str(exc))
                return []
            if cid in seen:
                continue
            seen.add(cid)
            trace["resolved"].append(cid)
            event("resolve", concept_id=cid)
            located = locate(ds, sp, cid)
            indexed = index_items(self.gateway, located)
            query_text_vec = self.gateway.embed_text(query.text)
            query_img_vec = self.gateway.embed_image(entity) if entity else None
            selected = select_top_e(
                indexed, query_text_vec, query_img_vec, cfg.top_e, cfg.scoring_mode
            )
            trace["selected"].extend(_item_doc(i) for i in selected)
            event("select", concept_id=cid, items=len(selected))
            if selected:
                contexts.append(self._contextualize(query, selected, cid, trace))
        return contexts

    def _contextualize(
        self, query: Query, items: list[MemoryItem], cid: str, trace: dict
    ) -> AlignedContext:
        if self.config.no_align:
            ctx = AlignedContext(
                source_concept=cid, bullets=[i.text for i in items]
            )
        else:
            ctx = self.align(query, items, cid)
            if ctx.degraded:
                trace["degradations"].append(f"alignment degraded for {cid}")
        trace["contexts"].append(
            {"concept_id": cid, "bullets": ctx.bullets, "degraded": ctx.degraded}
        )
        return ctx


def _dominant_concept(items: list[MemoryItem]) -> Optional[str]:
    counts: dict[str, int] = {}
    for item in items:
        counts[item.concept_id] = counts.get(item.concept_id, 0) + 1
    if not counts:
        return None
    return max(counts, key=lambda c: (counts[c], c))


def _render_contexts(contexts: list[AlignedContext]) -> str:
    parts = []
    for ctx in contexts:
        lines = [f"[{ctx.source_concept}]"] + [f"- {b}" for b in ctx.bullets]
        parts.append("\n".join(lines))
    return "\n\n".join(parts)


def _op_doc(op: MemoryOp) -> dict:
    doc: dict = {"concept_id": op.concept_id, "op": op.op.value}
    if op.memory_text is not None:
        doc["memory"] = op.memory_text
    if op.target_id is not None:
        doc["target_id"] = op.target_id
    return doc


def _plan_doc(plan: TransitionPlan) -> dict:
    return {
        "dynamic_ops": [_op_doc(o) for o in plan.dynamic_ops],
        "static_ops": [_op_doc(o) for o in plan.static_ops],
    }


def _item_doc(item: MemoryItem) -> dict:
    return {
        "concept_id": item.concept_id,
        "text": item.text,
        "kind": item.kind.value,
        "seq": item.seq,
    }
