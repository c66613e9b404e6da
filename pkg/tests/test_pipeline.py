"""Session orchestration: ingestion, transitions, querying, ablations."""

import numpy as np
import pytest

from conftest import make_gateway

from duomem.gateway.types import GroundingBox
from duomem.images import placeholder_png
from duomem.memory.types import AttributeKind
from duomem.pipeline import (
    DialogueTurn,
    PipelineConfig,
    Query,
    Session,
    render_items,
)
from duomem.retrieval import ScoringMode


OPS_ADD = "```yaml\n- concept_id: {cid}\n  op: add\n  memory: {text}\n```"


def unit(values):
    arr = np.asarray(values, dtype=float)
    return arr / np.linalg.norm(arr)


def test_render_items_numbering_and_empty_marker():
    assert render_items([]) == "[]"


def test_ingest_applies_ops_and_classifies_kinds():
    gw = make_gateway(
        script=[
            ("dsm_update", OPS_ADD.format(cid="cat", text="likes sun")),
            ("kind_classify", "```yaml\n- target_id: 1\n  kind: short_term\n```"),
        ],
        strict=True,
    )
    session = Session(gw)
    record = session.ingest_turn(DialogueTurn(user_text="cat in the sun", turn_id=1))
    assert record["status"] == "ok"
    items = session.memory.ds.items
    assert [i.text for i in items] == ["likes sun"]
    assert items[0].kind is AttributeKind.SHORT_TERM
    gw.backend.assert_exhausted()


def test_ingest_reprompts_once_then_marks_unprocessed():
    gw = make_gateway(
        script=[("dsm_update", "no yaml here ```"), ("dsm_update", "still } nothing ```")],
        strict=True,
    )
    session = Session(gw)
    record = session.ingest_turn(DialogueTurn(user_text="hello", turn_id=1))
    assert record["status"] == "unprocessed"
    assert session.memory.ds.items == []
    assert session.unprocessed and session.unprocessed[0]["turn_id"] == 1
    gw.backend.assert_exhausted()


def test_dangling_target_marks_turn_unprocessed_without_partial_state():
    gw = make_gateway(
        script=[
            ("dsm_update", "```yaml\n- concept_id: c\n  op: remove\n  target_id: 7\n```"),
        ],
    )
    session = Session(gw, PipelineConfig(parse_retries=0, classify_kinds=False))
    record = session.ingest_turn(DialogueTurn(user_text="x", turn_id=1))
    assert record["status"] == "unprocessed"
    assert session.memory.ds.items == []


def test_long_term_item_triggers_transition_into_static_memory():
    transition = (
        "```yaml\n"
        "dynamic_ops:\n- concept_id: cat\n  op: remove\n  target_id: 1\n"
        "static_ops:\n- concept_id: cat\n  op: add\n  memory: grey shorthair\n"
        "```"
    )
    gw = make_gateway(
        script=[
            ("dsm_update", OPS_ADD.format(cid="cat", text="grey shorthair")),
            ("kind_classify", "```yaml\n- target_id: 1\n  kind: long_term\n```"),
            ("transition", transition),
        ],
        strict=True,
    )
    session = Session(gw)
    record = session.ingest_turn(DialogueTurn(user_text="my cat is grey", turn_id=1))
    assert record["plan"] is not None
    assert [i.text for i in session.memory.sp.items] == ["grey shorthair"]
    assert session.memory.ds.items == []
    gw.backend.assert_exhausted()


def test_declined_transition_is_forced_so_eviction_can_run():
    gw = make_gateway(
        script=[
            ("dsm_update", OPS_ADD.format(cid="cat", text="born in 2019")),
            ("kind_classify", "```yaml\n- target_id: 1\n  kind: long_term\n```"),
            ("transition", "```yaml\ndynamic_ops: []\nstatic_ops: []\n```"),
        ],
        strict=True,
    )
    session = Session(gw)
    record = session.ingest_turn(DialogueTurn(user_text="x", turn_id=1))
    assert "forced_transition" in record
    assert [i.text for i in session.memory.sp.items] == ["born in 2019"]
    assert session.memory.sp.items[0].kind is AttributeKind.LONG_TERM


def test_overflow_evicts_oldest_after_transition():
    tau = 2
    script = []
    for i in range(3):
        script.append(("dsm_update", OPS_ADD.format(cid="cat", text=f"fact {i}")))
    gw = make_gateway(script=script)
    session = Session(gw, PipelineConfig(tau=tau, classify_kinds=False))
    records = [
        session.ingest_turn(DialogueTurn(user_text=f"t{i}", turn_id=i + 1))
        for i in range(3)
    ]
    assert [i.text for i in session.memory.ds.items] == ["fact 1", "fact 2"]
    assert [e["text"] for e in records[2]["evicted"]] == ["fact 0"]


def make_answer_session(tmp_path, **config):
    """A session with one concept in memory and scripted retrieval vectors."""
    gw = make_gateway(dim=4)
    gw.backend.embedding_overrides.update(
        {
            "What is my cat wearing?": unit([1, 0, 0, 0]),
            "cat wears a red collar": unit([1, 0, 0, 0]),
            "mug is chipped": unit([0, 1, 0, 0]),
        }
    )
    gw.backend.default_responses.update(
        {
            "align": "# EXTRACTED MEMORIES:\n- red collar on the cat",
            "answer": "Your cat is wearing a red collar.",
        }
    )
    session = Session(
        gw, PipelineConfig(scoring_mode=ScoringMode.TEXT_TEXT, classify_kinds=False, **config)
    )
    from duomem.memory.store import apply_ops
    from duomem.memory.types import MemoryOp, OpName

    apply_ops(
        session.memory.ds,
        [
            MemoryOp("cat", OpName.ADD, memory_text="cat wears a red collar"),
            MemoryOp("mug", OpName.ADD, memory_text="mug is chipped"),
        ],
        session.memory,
    )
    return session


def test_run_query_resolves_aligns_and_answers(tmp_path):
    session = make_answer_session(tmp_path)
    answer, trace = session.run_query(Query(text="What is my cat wearing?", turn_id=9))
    assert answer == "Your cat is wearing a red collar."
    assert trace["resolved"] == ["cat"]
    assert trace["contexts"][0]["bullets"] == ["red collar on the cat"]
    # Phase 3: the exchange itself was ingested (mock default: no ops).
    assert any(r["kind"] == "ingest" for r in session.audit_log)
    assert session.traces[trace["trace_id"]] is trace


def test_no_align_passes_raw_item_texts(tmp_path):
    session = make_answer_session(tmp_path, no_align=True)
    _, trace = session.run_query(Query(text="What is my cat wearing?"))
    assert trace["contexts"][0]["bullets"] == ["cat wears a red collar"]


def test_no_retrieval_uses_digest_of_everything(tmp_path):
    session = make_answer_session(tmp_path, no_retrieval=True)
    _, trace = session.run_query(Query(text="What is my cat wearing?"))
    assert trace["resolved"] == []
    assert trace["contexts"][0]["concept_id"] == "all"


def test_no_memory_answers_without_context_or_ingest(tmp_path):
    session = make_answer_session(tmp_path, no_memory=True)
    before = len(session.audit_log)
    answer, trace = session.run_query(Query(text="What is my cat wearing?"))
    assert trace["events"][0]["name"] == "memoryless"
    assert len(session.audit_log) == before  # no phase-3 write-back
    rendered = session.gateway.backend.calls[-1][1]
    assert "(no memory available)" in rendered


def test_empty_memory_degrades_to_memoryless_answer():
    gw = make_gateway()
    session = Session(gw, PipelineConfig(classify_kinds=False))
    answer, trace = session.run_query(Query(text="anything?"))
    assert trace["degradations"]
    assert isinstance(answer, str) and answer


def test_segment_query_falls_back_to_whole_image(tmp_path):
    img = tmp_path / "scene.png"
    img.write_bytes(placeholder_png("scene"))
    gw = make_gateway()
    session = Session(gw)
    crops = session.segment_query(Query(text="who is this?", image=str(img)))
    assert crops == [(str(img), 0.0)]


def test_segment_query_crops_each_box(tmp_path):
    img = tmp_path / "scene.png"
    img.write_bytes(placeholder_png("scene"))
    boxes = [
        GroundingBox(label="person", bbox=(0, 0, 10, 10), score=0.9),
        GroundingBox(label="animal", bbox=(5, 5, 10, 10), score=0.5),
    ]
    gw = make_gateway(ground_results=[boxes])
    session = Session(gw)
    crops = session.segment_query(Query(text="who?", image=str(img)))
    assert len(crops) == 2
    assert crops[0][1] == 0.9
    assert isinstance(crops[0][0], bytes)


def test_query_text_must_be_non_empty():
    with pytest.raises(ValueError):
        Query(text="   ")


def test_no_memory_implies_both_single_ablations():
    cfg = PipelineConfig(no_memory=True)
    assert cfg.no_ds and cfg.no_sp
