"""Evaluation harness: runs a system over the benchmark and scores it.

Two systems are supported: the double-memory engine itself (any ablation
via PipelineConfig) and a full-context baseline that answers every question
with the entire dialogue history in the prompt. Choice questions score by
exact option match; free-text questions and key points are judged by a
YES/NO judge model.

Memory isolation: the engine ingests all histories once, the resulting
state is snapshotted, and every question is answered against a restored
copy, so question order cannot change any verdict.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from duomem.errors import AmbiguousVerdict, DuomemError
from duomem.dataset.loader import image_path, load_dataset
from duomem.dataset.schema import Dataset, EvalQuestion
from duomem.gateway.core import Gateway
from duomem.gateway.parsers import parse_judge_verdict
from duomem.gateway.types import ChatRequest
from duomem.memory.snapshot import restore, snapshot
from duomem.pipeline import DialogueTurn, PipelineConfig, Query, Session

SYSTEMS = ("engine", "baseline")
OPTION_LETTERS = "ABCD"

# A leading letter is a choice marker only when it stands alone or is
# followed by punctuation ("A", "a.", "(B) ..."); "A wrist" is prose.
_LEADING_LETTER_RE = re.compile(r"^\s*[\(\[]?([A-Da-d])(?=[\)\].:,]|\s*$)")


@dataclass
class RunSpec:
    system: str = "engine"
    config: PipelineConfig = field(default_factory=PipelineConfig)
    dataset_root: str = "."
    split: str = "both"            # easy | hard | both
    answer_format: str = "choice"  # choice | free_text
    workers: int = 1

    def __post_init__(self) -> None:
        if self.system not in SYSTEMS:
            raise ValueError(f"system must be one of {SYSTEMS}")
        if self.split not in ("easy", "hard", "both"):
            raise ValueError(f"unknown split {self.split!r}")
        if self.answer_format not in ("choice", "free_text"):
            raise ValueError(f"unknown answer format {self.answer_format!r}")


@dataclass
class Verdict:
    question_id: str
    difficulty: str
    prediction: str = ""
    choice_correct: Optional[int] = None
    free_correct: Optional[int] = None
    key_point_hits: list[tuple[Optional[str], int]] = field(default_factory=list)
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "difficulty": self.difficulty,
            "prediction": self.prediction,
            "choice_correct": self.choice_correct,
            "free_correct": self.free_correct,
            "key_point_hits": [[tag, hit] for tag, hit in self.key_point_hits],
            "error": self.error,
        }


@dataclass
class MetricsReport:
    system: str
    split: str
    answer_format: str
    verdicts: list[Verdict] = field(default_factory=list)

    def _ratio(self, hits: int, total: int) -> Optional[float]:
        return hits / total if total else None

    @property
    def acc_c(self) -> Optional[float]:
        scored = [v.choice_correct for v in self.verdicts if v.choice_correct is not None]
        return self._ratio(sum(scored), len(scored))

    @property
    def acc_f(self) -> Optional[float]:
        scored = [v.free_correct for v in self.verdicts if v.free_correct is not None]
        return self._ratio(sum(scored), len(scored))

    def _point_ratio(self, difficulty: str, tag: Optional[str]) -> Optional[float]:
        hits = total = 0
        for verdict in self.verdicts:
            if verdict.difficulty != difficulty:
                continue
            for point_tag, hit in verdict.key_point_hits:
                if tag is None or point_tag == tag:
                    total += 1
                    hits += hit
        return self._ratio(hits, total)

    @property
    def spr(self) -> Optional[float]:
        return self._point_ratio("easy", None)

    @property
    def spr_l(self) -> Optional[float]:
        return self._point_ratio("hard", "long")

    @property
    def spr_s(self) -> Optional[float]:
        return self._point_ratio("hard", "short")

    @property
    def errors(self) -> int:
        return sum(1 for v in self.verdicts if v.error)

    def to_dict(self) -> dict:
        return {
            "system": self.system,
            "split": self.split,
            "answer_format": self.answer_format,
            "n_questions": len(self.verdicts),
            "errors": self.errors,
            "aggregates": {
                "acc_c": self.acc_c,
                "acc_f": self.acc_f,
                "spr": self.spr,
                "spr_l": self.spr_l,
                "spr_s": self.spr_s,
            },
            "verdicts": [v.to_dict() for v in sorted(self.verdicts, key=lambda v: v.question_id)],
        }

    def to_table(self) -> str:
        def fmt(value: Optional[float]) -> str:
            return f"{100 * value:6.2f}" if value is not None else "   -  "

        header = f"{'System':<10} {'ACC-C':>7} {'ACC-F':>7} {'SPR':>7} {'SPR-L':>7} {'SPR-S':>7}"
        row = (
            f"{self.system:<10} {fmt(self.acc_c):>7} {fmt(self.acc_f):>7} "
            f"{fmt(self.spr):>7} {fmt(self.spr_l):>7} {fmt(self.spr_s):>7}"
        )
        return header + "\n" + row


def score_choice(prediction: str, question: EvalQuestion) -> tuple[int, Optional[str]]:
    """Exact option match: leading letter A-D, else verbatim option text.

    Returns (verdict, failure reason).
    """
    leading = _LEADING_LETTER_RE.match(prediction or "")
    chosen: Optional[str] = None
    if leading:
        index = OPTION_LETTERS.index(leading.group(1).upper())
        if index < len(question.options):
            chosen = question.options[index]
    if chosen is None:
        text = (prediction or "").strip().rstrip(".").lower()
        matches = [o for o in question.options if o.strip().lower() == text]
        if len(matches) == 1:
            chosen = matches[0]
    if chosen is None:
        return 0, "NoOptionDetected"
    return (1 if chosen == question.answer else 0), None


class Evaluator:
    def __init__(self, gateway: Gateway, judge_gateway: Optional[Gateway] = None) -> None:
        self.gateway = gateway
        self.judge = judge_gateway or gateway

    # -- judge calls ------------------------------------------------------

    def _judge(self, prompt_id: str, slots: dict) -> int:
        for _ in range(2):  # one retry on an ambiguous verdict
            raw = self.judge.chat(ChatRequest(prompt_id=prompt_id, slots=slots))
            try:
                return 1 if parse_judge_verdict(raw) else 0
            except AmbiguousVerdict:
                continue
        return 0  # ambiguous after retry counts as a miss

    def score_free_text(self, prediction: str, ideal: str) -> int:
        return self._judge(
            "judge_free_text",
            {"ideal_answer": ideal, "predicted_answer": prediction},
        )

    def score_key_point(self, prediction: str, point: str) -> int:
        return self._judge(
            "judge_key_point",
            {"key_point": point, "predicted_answer": prediction},
        )

    # -- run --------------------------------------------------------------

    def run(self, spec: RunSpec, dataset: Optional[Dataset] = None) -> MetricsReport:
        dataset = dataset or load_dataset(spec.dataset_root)
        report = MetricsReport(
            system=spec.system, split=spec.split, answer_format=spec.answer_format
        )
        questions = dataset.questions(spec.split)

        if spec.system == "baseline":
            history_text = _render_full_history(dataset)
            answer = lambda q: self._baseline_answer(dataset, history_text, q, spec)
        else:
            base = self._ingest_all(dataset, spec.config)
            answer = lambda q: self._engine_answer(dataset, base, q, spec)

        def evaluate(question: EvalQuestion) -> Verdict:
            verdict = Verdict(question_id=question.id, difficulty=question.difficulty)
            try:
                prediction = answer(question)
                verdict.prediction = prediction
                self._score(verdict, prediction, question, spec)
            except DuomemError as exc:
                verdict.error = f"{type(exc).__name__}: {exc}"
                if spec.answer_format == "choice":
                    verdict.choice_correct = 0
                else:
                    verdict.free_correct = 0
                    verdict.key_point_hits = [(kp.tag, 0) for kp in question.key_points]
            return verdict

        if spec.workers > 1:
            with ThreadPoolExecutor(max_workers=spec.workers) as pool:
                report.verdicts = list(pool.map(evaluate, questions))
        else:
            report.verdicts = [evaluate(q) for q in questions]
        return report

    def _score(
        self, verdict: Verdict, prediction: str, question: EvalQuestion, spec: RunSpec
    ) -> None:
        if spec.answer_format == "choice":
            correct, reason = score_choice(prediction, question)
            verdict.choice_correct = correct
            if reason:
                verdict.error = reason
            return
        verdict.free_correct = self.score_free_text(prediction, question.ideal_answer)
        verdict.key_point_hits = [
            (kp.tag, self.score_key_point(prediction, kp.text))
            for kp in question.key_points
        ]

    # -- engine path ------------------------------------------------------

    def _ingest_all(self, dataset: Dataset, config: PipelineConfig) -> str:
        session = Session(self.gateway, config, session_id="eval-ingest")
        turn_id = 0
        for concept_id in sorted(dataset.histories):
            history = dataset.histories[concept_id]
            for turn in history.turns:
                turn_id += 1
                image = (
                    image_path(dataset.root, turn.image_id) if turn.image_id else None
                )
                session.ingest_turn(
                    DialogueTurn(
                        user_text=turn.user_input,
                        assistant_text=turn.assistant_response,
                        image=image,
                        turn_id=turn_id,
                        concept_id=concept_id,
                    )
                )
        return snapshot(session.memory)

    def _engine_answer(
        self, dataset: Dataset, base_snapshot: str, question: EvalQuestion, spec: RunSpec
    ) -> str:
        session = Session(self.gateway, spec.config, session_id=f"eval-{question.id}")
        session.memory = restore(base_snapshot)
        query = Query(
            text=_question_text(question, spec),
            image=(
                image_path(dataset.root, question.image_id)
                if question.image_id
                else None
            ),
        )
        answer_text, _ = session.run_query(query)
        return answer_text

    # -- baseline path ----------------------------------------------------

    def _baseline_answer(
        self, dataset: Dataset, history_text: str, question: EvalQuestion, spec: RunSpec
    ) -> str:
        image = (
            image_path(dataset.root, question.image_id) if question.image_id else None
        )
        return self.gateway.chat(
            ChatRequest(
                prompt_id="answer_full_context",
                slots={
                    "history": history_text,
                    "question": _question_text(question, spec),
                    "image_status": (
                        "Image provided: Yes" if image else "Image provided: No"
                    ),
                },
                images=[image] if image else [],
            )
        )


def _question_text(question: EvalQuestion, spec: RunSpec) -> str:
    if spec.answer_format != "choice":
        return question.question
    lines = [question.question, "", "Choose exactly one option and reply with its letter:"]
    for letter, option in zip(OPTION_LETTERS, question.options):
        lines.append(f"{letter}. {option}")
    return "\n".join(lines)


def _render_full_history(dataset: Dataset) -> str:
    blocks = []
    for concept_id in sorted(dataset.histories):
        history = dataset.histories[concept_id]
        lines = [f"## Dialogue about {concept_id}"]
        for turn in history.turns:
            lines.append(f"User: {turn.user_input}")
            lines.append(f"Assistant: {turn.assistant_response}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)
