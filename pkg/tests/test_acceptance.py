"""Acceptance suite: one test per release criterion.

Each criterion gets exactly one test function, so `pytest -v` yields one
pass/fail line per criterion. Oracles are independent of the code under
test: brute-force enumeration, a plain bounded-queue simulation, and
direct numpy arithmetic.
"""

from __future__ import annotations

import itertools
import json
import random
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import make_gateway, make_mini_dataset
from golden_scenario import run_scenario, scenario_configs

from duomem.errors import DuomemError
from duomem.evaluation import Evaluator, MetricsReport, RunSpec, Verdict, _question_text
from duomem.gateway.parsers import (
    extract_fenced_block,
    parse_bullets,
    parse_judge_verdict,
    parse_kind_labels,
    parse_memory_ops,
    parse_transition_plan,
)
from duomem.gateway.types import EmbeddingVector
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
from duomem.memory.store import (
    apply_ops,
    apply_transition,
    evict_fifo,
    trigger,
)
from duomem.pipeline import PipelineConfig
from duomem.retrieval import IndexedItem, ScoringMode, resolve_concept, select_top_e

GOLDENS = Path(__file__).parent / "goldens"


def _passed(name: str) -> None:
    print(f"ACCEPTANCE {name}: PASS")


# ---------------------------------------------------------------------------
# 1. memory invariants under randomized cycles


def test_criterion_1_memory_invariants_randomized():
    started = time.monotonic()
    rng = random.Random(11)
    for tau in (1, 3, 10):
        for _ in range(1000):
            state = MemoryState.fresh(tau)
            for _cycle in range(rng.randint(1, 6)):
                _random_cycle(rng, state, tau)
                _check_invariants(state, tau)
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"invariant sweep took {elapsed:.1f}s"
    _passed("memory-invariants")


def _random_cycle(rng: random.Random, state: MemoryState, tau: int) -> None:
    ops = []
    for _ in range(rng.randint(0, 3)):
        ops.append(
            MemoryOp(rng.choice("abc"), OpName.ADD, memory_text=f"t{rng.random():.6f}")
        )
    items = state.ds.items
    if items and rng.random() < 0.4:
        victim = rng.choice(items)
        name = OpName.REMOVE if rng.random() < 0.5 else OpName.MODIFY
        text = None if name is OpName.REMOVE else "rewritten"
        ops.append(
            MemoryOp(victim.concept_id, name, memory_text=text, target_id=victim.item_no)
        )
    apply_ops(state.ds, ops, state)
    for item in state.ds.items:
        if item.kind is AttributeKind.UNCLASSIFIED:
            item.kind = (
                AttributeKind.LONG_TERM
                if rng.random() < 0.25
                else AttributeKind.SHORT_TERM
            )
    if trigger(state.ds):
        movers = [i for i in state.ds.items if i.kind is AttributeKind.LONG_TERM]
        if movers:
            plan = TransitionPlan(
                dynamic_ops=[
                    MemoryOp(i.concept_id, OpName.REMOVE, target_id=i.item_no)
                    for i in movers
                ],
                static_ops=[
                    MemoryOp(i.concept_id, OpName.ADD, memory_text=i.text)
                    for i in movers
                ],
            )
            apply_transition(state, plan)
        if len(state.ds.items) > tau:
            evict_fifo(state.ds)


def _check_invariants(state: MemoryState, tau: int) -> None:
    ds, sp = state.ds.items, state.sp.items
    assert len(ds) <= tau
    assert all(i.kind is not AttributeKind.LONG_TERM for i in ds)
    assert all(i.kind is AttributeKind.LONG_TERM for i in sp)
    assert [i.item_no for i in ds] == list(range(1, len(ds) + 1))
    assert [i.item_no for i in sp] == list(range(1, len(sp) + 1))
    seqs = [i.seq for i in ds + sp]
    assert len(seqs) == len(set(seqs))
    assert all(s < state.next_seq for s in seqs)
    ds_seqs = [i.seq for i in ds]
    assert ds_seqs == sorted(ds_seqs)
    assert not trigger(state.ds) or len(ds) > tau  # maintenance left no long-term


# ---------------------------------------------------------------------------
# 2. trigger rule, exhaustively


def test_criterion_2_trigger_rule_exhaustive():
    kinds = (
        AttributeKind.SHORT_TERM,
        AttributeKind.LONG_TERM,
        AttributeKind.UNCLASSIFIED,
    )
    checked = 0
    for tau in (1, 2, 3):
        for size in range(0, 5):
            for combo in itertools.product(kinds, repeat=size):
                ds = DynamicMemory(capacity_tau=tau)
                ds.items = [
                    MemoryItem("c", f"t{i}", kind=k, seq=i + 1, item_no=i + 1)
                    for i, k in enumerate(combo)
                ]
                expected = size > tau or AttributeKind.LONG_TERM in combo
                assert trigger(ds) == expected, (tau, combo)
                checked += 1
    assert checked == 3 * sum(3**n for n in range(5))
    _passed("trigger-exhaustive")


# ---------------------------------------------------------------------------
# 3. FIFO semantics against a bounded-queue simulation


def test_criterion_3_fifo_matches_queue_oracle():
    rng = random.Random(23)
    for case in range(500):
        tau = rng.randint(1, 6)
        state = MemoryState.fresh(tau)
        oracle: list[int] = []  # surviving seqs, insertion order
        next_seq = 1
        for _step in range(rng.randint(1, 40)):
            action = rng.random()
            if action < 0.6 or not oracle:
                apply_ops(
                    state.ds,
                    [MemoryOp("c", OpName.ADD, memory_text=f"s{next_seq}")],
                    state,
                )
                oracle.append(next_seq)
                next_seq += 1
            elif action < 0.8:
                idx = rng.randrange(len(oracle))
                apply_ops(
                    state.ds,
                    [MemoryOp("c", OpName.REMOVE, target_id=idx + 1)],
                    state,
                )
                oracle.pop(idx)
            else:
                for item in state.ds.items:
                    item.kind = AttributeKind.SHORT_TERM
                evict_fifo(state.ds)
                while len(oracle) > tau:
                    oracle.pop(0)  # bounded queue drops from the front
            assert [i.seq for i in state.ds.items] == oracle, f"case {case}"
    _passed("fifo-oracle")


# ---------------------------------------------------------------------------
# 4. retrieval against a brute-force scoring oracle


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _oracle_scores(items, q_img, q_text, mode: str) -> list[float]:
    scores = []
    for text_vec, image_vec, _seq, _cid in items:
        visual = float(q_img @ image_vec) if q_img is not None and image_vec is not None else 0.0
        if mode == "cross_modal" and q_img is not None:
            textual = float(q_img @ text_vec)
        elif q_text is not None:
            textual = float(q_text @ text_vec)
        else:
            textual = 0.0
        scores.append(visual + textual)
    return scores


def test_criterion_4_retrieval_matches_bruteforce_oracle():
    rng = np.random.default_rng(7)
    pyrng = random.Random(7)
    for case in range(500):
        dim = pyrng.choice([2, 4, 8, 16])
        n = pyrng.randint(1, 30)
        mode = pyrng.choice(["cross_modal", "text_text"])
        has_q_img = pyrng.random() < 0.6
        q_img = _unit(rng, dim) if has_q_img else None
        q_text = _unit(rng, dim)

        raw = []
        indexed = []
        for i in range(n):
            text_vec = _unit(rng, dim)
            image_vec = _unit(rng, dim) if pyrng.random() < 0.5 else None
            seq = pyrng.randint(1, 1000)
            cid = pyrng.choice(["aa", "bb", "cc"])
            raw.append((text_vec, image_vec, seq, cid))
            item = MemoryItem(cid, f"t{i}", seq=seq, item_no=i + 1)
            indexed.append(
                IndexedItem(
                    item=item,
                    text_vec=EmbeddingVector(values=text_vec, modality="text"),
                    image_vec=(
                        EmbeddingVector(values=image_vec, modality="image")
                        if image_vec is not None
                        else None
                    ),
                )
            )

        scores = _oracle_scores(raw, q_img, q_text, mode)
        order = sorted(
            range(n), key=lambda i: (-scores[i], raw[i][2], raw[i][3])
        )
        top_e = pyrng.randint(1, n)
        expected = [indexed[i].item for i in (order[:top_e] if n > top_e else range(n))]

        got = select_top_e(
            indexed,
            EmbeddingVector(values=q_text, modality="text"),
            EmbeddingVector(values=q_img, modality="image") if has_q_img else None,
            top_e=top_e,
            mode=ScoringMode(mode),
        )
        assert [id(i) for i in got] == [id(i) for i in expected], f"case {case}"
    _passed("retrieval-oracle")


def test_criterion_4b_resolution_matches_oracle():
    # Same oracle applied to concept resolution across both memories.
    gw = make_gateway(dim=8)
    rng = np.random.default_rng(13)
    pyrng = random.Random(13)
    for case in range(100):
        ds = DynamicMemory(capacity_tau=50)
        sp = StaticMemory()
        texts = []
        for i in range(pyrng.randint(1, 12)):
            cid = pyrng.choice(["aa", "bb", "cc"])
            text = f"case{case} item{i}"
            vec = _unit(rng, 8)
            gw.backend.embedding_overrides[text] = vec
            item = MemoryItem(cid, text, seq=i + 1, item_no=i + 1)
            (sp if pyrng.random() < 0.3 else ds).items.append(item)
            texts.append((item, vec))
        query = f"case{case} query"
        q_vec = _unit(rng, 8)
        gw.backend.embedding_overrides[query] = q_vec

        ordered = sp.items + ds.items
        scores = {id(i): float(q_vec @ vec) for i, vec in texts}
        best = min(ordered, key=lambda i: (-scores[id(i)], i.seq, i.concept_id))
        got = resolve_concept(gw, None, query, ds, sp, mode=ScoringMode.TEXT_TEXT)
        assert got == best.concept_id, f"case {case}"
    _passed("resolution-oracle")


# ---------------------------------------------------------------------------
# 5. parser totality under fuzz


def test_criterion_5_parser_fuzz_and_examples():
    parsers = [
        parse_memory_ops,
        parse_transition_plan,
        parse_kind_labels,
        parse_judge_verdict,
        parse_bullets,
        extract_fenced_block,
    ]
    rng = random.Random(99)
    alphabet = bytes(range(256))
    for i in range(100_000):
        length = rng.randint(0, 48)
        raw = bytes(rng.choices(alphabet, k=length)).decode("latin-1")
        parser = parsers[i % len(parsers)]
        try:
            parser(raw)
        except DuomemError:
            pass  # typed errors are fine; anything else fails the test

    # Canonical example replies in the documented output format must parse.
    ops = parse_memory_ops(
        "# Analysis\n# the user introduced a new fact\n"
        "```yaml\n"
        '- concept_id: "cat"\n  op: "add"\n  memory: "cat wears a red collar"\n'
        '- concept_id: "cat"\n  op: "modify"\n  target_id: 1\n  memory: "collar is new"\n'
        "```"
    )
    assert [o.op for o in ops] == [OpName.ADD, OpName.MODIFY]
    assert parse_memory_ops("[]") == []
    plan = parse_transition_plan(
        "# Analysis\n```yaml\n"
        "dynamic_ops:\n- concept_id: \"cat\"\n  op: \"remove\"\n  target_id: 2\n"
        "static_ops:\n- concept_id: \"cat\"\n  op: \"add\"\n  memory: \"a grey shorthair\"\n"
        "```"
    )
    assert len(plan.dynamic_ops) == 1 and len(plan.static_ops) == 1
    empty = parse_transition_plan("```yaml\ndynamic_ops: []\nstatic_ops: []\n```")
    assert empty.is_empty()
    assert parse_judge_verdict("YES") and not parse_judge_verdict("No.")
    assert parse_bullets("- red collar\n- grey fur") == ["red collar", "grey fur"]
    _passed("parser-fuzz")


# ---------------------------------------------------------------------------
# 6. metric arithmetic


def test_criterion_6_metric_arithmetic_exact():
    report = MetricsReport(system="engine", split="both", answer_format="choice")
    report.verdicts = [
        Verdict("c1", "easy", choice_correct=1),
        Verdict("c2", "easy", choice_correct=1),
        Verdict("c3", "easy", choice_correct=1),
        Verdict("c4", "easy", choice_correct=0),
        Verdict("f1", "easy", free_correct=1),
        Verdict("f2", "easy", free_correct=0),
        Verdict("h1", "hard", key_point_hits=[("long", 1), ("short", 1), ("short", 1)]),
        Verdict("h2", "hard", key_point_hits=[("long", 0), ("short", 1), ("short", 0)]),
    ]
    assert report.acc_c == 0.75
    assert report.acc_f == 0.5
    assert report.spr_l == 0.5
    assert report.spr_s == 0.75
    _passed("metric-arithmetic")


# ---------------------------------------------------------------------------
# 7. golden end-to-end replay


def test_criterion_7_golden_replay_byte_identical():
    started = time.monotonic()
    for label, config in scenario_configs().items():
        golden_path = GOLDENS / f"replay_{label}.json"
        assert golden_path.exists(), f"missing golden for {label}"
        first = run_scenario(config, label)
        second = run_scenario(config, label)
        assert first == second, f"replay of {label} is not reproducible"
        assert first == golden_path.read_text(), f"replay of {label} drifted"
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"golden replay took {elapsed:.1f}s"
    _passed("golden-replay")


# ---------------------------------------------------------------------------
# 8. ablations must actually cost accuracy


def _crafted_world(dataset):
    """Answers are derivable only from aligned, noise-free memory."""
    facts = {
        "What color is Mochi's collar?": ("red collar", "Red"),
        "What is the mug made of?": ("favourite mug", "Ceramic"),
        "What did Alex injure?": ("sprained a wrist", "A wrist"),
        "Describe Mochi and Mochi's current accessory.":
            ("red collar", "A grey cat wearing a red collar"),
        "Describe the mug and its latest damage.":
            ("handle chipped", "A blue ceramic mug with a chipped handle"),
        "Who is Alex and what happened recently?":
            ("climbing partner", "The user's climbing partner who sprained a wrist"),
    }

    def dsm_update(rendered, images):
        import re as _re

        match = _re.search(r'\* User Input: "(.*)"', rendered)
        text = (match.group(1) if match else "").replace(":", " -")
        if not text:
            return "```yaml\n[]\n```"
        cid = (
            "mochi" if "ochi" in text
            else "mug01" if "mug" in text or "handle" in text
            else "alex"
        )
        return (
            "```yaml\n"
            f"- concept_id: {cid}\n  op: add\n  memory: FACT {text}\n"
            f"- concept_id: {cid}\n  op: add\n  memory: NOISE filler about {cid}\n"
            "```"
        )

    def align(rendered, images):
        section = rendered.split("Memories:", 1)[-1].split("---", 1)[0]
        keep = [
            line.strip() for line in section.splitlines()
            if line.strip().startswith("- ") and "NOISE" not in line
        ]
        return "\n".join(keep)

    def answer(rendered, images):
        context = rendered.split("- CONCEPT CONTEXT:", 1)[-1]
        context = context.split("- USER QUESTION:", 1)[0]
        if "NOISE" in context or "(no memory available)" in context:
            return "I cannot tell."
        for question, (needle, gold) in facts.items():
            if question in rendered and needle in context:
                return gold
        return "I cannot tell."

    return make_gateway(handlers={"dsm_update": dsm_update, "align": align, "answer": answer})


def test_criterion_8_ablations_strictly_hurt_accuracy(tmp_path):
    root = str(tmp_path / "dataset")
    dataset = make_mini_dataset(root)

    # Pin retrieval: each question and each concept's items live on one axis.
    axes = {"mochi": 0, "mug01": 1, "alex": 2}

    def configured(**flags):
        return PipelineConfig(
            classify_kinds=False, scoring_mode="text_text", tau=50, **flags
        )

    results = {}
    for label, flags in (
        ("full", {}),
        ("no_align", {"no_align": True}),
        ("no_memory", {"no_memory": True}),
    ):
        gw = _crafted_world(dataset)
        spec = RunSpec(
            system="engine", dataset_root=root, split="both",
            answer_format="choice", config=configured(**flags),
        )
        overrides = gw.backend.embedding_overrides
        for q in dataset.questions("both"):
            vec = np.zeros(4)
            vec[axes[q.concept_id]] = 1.0
            overrides[_question_text(q, spec)] = vec
        for history in dataset.histories.values():
            vec = np.zeros(4)
            vec[axes[history.concept_id]] = 1.0
            for turn in history.turns:
                text = turn.user_input.replace(":", " -")
                overrides[f"FACT {text}"] = vec
                overrides[f"NOISE filler about {history.concept_id}"] = vec
        report = Evaluator(gw).run(spec, dataset=dataset)
        results[label] = report.acc_c

    assert results["full"] == 1.0, results
    assert results["full"] > results["no_align"], results
    assert results["full"] > results["no_memory"], results
    _passed("ablation-direction")


# ---------------------------------------------------------------------------
# 9. crash and restore


def test_criterion_9_crash_restore_replays_identically(tmp_path):
    from fastapi.testclient import TestClient

    from golden_scenario import TURNS, make_scenario_gateway
    from duomem.service import create_app

    turns = TURNS[:8]
    crash_at = 4

    def post_turns(client, rows, start):
        for i, (user, assistant) in enumerate(rows, start):
            resp = client.post(
                "/sessions/s1/turns",
                json={"user_text": user, "assistant_text": assistant},
            )
            assert resp.status_code == 200, resp.text

    # Uninterrupted reference run.
    ref_dir = tmp_path / "ref"
    client = TestClient(create_app(make_scenario_gateway(), state_dir=ref_dir))
    client.post("/sessions", json={"session_id": "s1", "config": {"tau": 5}})
    post_turns(client, turns, 1)
    reference = (ref_dir / "sessions" / "s1.json").read_text()

    # Crashed run: the first process dies after turn k; a second process
    # picks the session up from its snapshot and replays the remainder.
    crash_dir = tmp_path / "crash"
    client_a = TestClient(create_app(make_scenario_gateway(), state_dir=crash_dir))
    client_a.post("/sessions", json={"session_id": "s1", "config": {"tau": 5}})
    post_turns(client_a, turns[:crash_at], 1)
    del client_a  # nothing carries over but the on-disk snapshot

    client_b = TestClient(create_app(make_scenario_gateway(), state_dir=crash_dir))
    post_turns(client_b, turns[crash_at:], crash_at + 1)
    restored = (crash_dir / "sessions" / "s1.json").read_text()

    assert restored == reference
    _passed("crash-restore")
