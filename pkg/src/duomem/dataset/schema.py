"""Benchmark dataset schema: concepts, dialogue histories, eval questions.

On-disk layout (all documents YAML, images PNG):

  root/
    concepts/<concept_id>.yaml
    histories/<concept_id>.yaml
    questions/easy.yaml
    questions/hard.yaml
    images/<image_id>.png
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from duomem.errors import SchemaError

CATEGORIES = ("pet", "object", "person")
LOG_TYPES = ("knowledge", "event")
DIFFICULTIES = ("easy", "hard")
KEY_POINT_TAGS = ("long", "short")


def _require(doc: dict, key: str, ctx: str) -> Any:
    if key not in doc or doc[key] is None:
        raise SchemaError(f"{ctx}: missing field {key!r}")
    return doc[key]


def _str_list(value: Any, ctx: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(f"{ctx}: expected a list of strings")
    return value


@dataclass
class ConceptProfile:
    concept_id: str
    category: str
    raw_image: str  # image id of the original concept photo
    long_term_attrs: list[str]
    short_term_attrs: list[str]

    def validate(self, ctx: str = "") -> None:
        ctx = ctx or f"concept {self.concept_id!r}"
        if self.category not in CATEGORIES:
            raise SchemaError(f"{ctx}: category {self.category!r} not in {CATEGORIES}")
        if not self.long_term_attrs:
            raise SchemaError(f"{ctx}: long_term_attrs must be non-empty")
        if not self.short_term_attrs:
            raise SchemaError(f"{ctx}: short_term_attrs must be non-empty")

    @classmethod
    def from_doc(cls, doc: Any, ctx: str) -> "ConceptProfile":
        if not isinstance(doc, dict):
            raise SchemaError(f"{ctx}: concept document is not a mapping")
        profile = cls(
            concept_id=str(_require(doc, "concept_id", ctx)),
            category=str(_require(doc, "category", ctx)),
            raw_image=str(_require(doc, "raw_image", ctx)),
            long_term_attrs=_str_list(_require(doc, "long_term_attrs", ctx), ctx),
            short_term_attrs=_str_list(_require(doc, "short_term_attrs", ctx), ctx),
        )
        profile.validate(ctx)
        return profile

    def to_doc(self) -> dict:
        return {
            "concept_id": self.concept_id,
            "category": self.category,
            "raw_image": self.raw_image,
            "long_term_attrs": self.long_term_attrs,
            "short_term_attrs": self.short_term_attrs,
        }


@dataclass
class HistTurn:
    turn: int
    log_type: str
    user_input: str
    assistant_response: str
    image_prompt: Optional[str] = None
    image_id: Optional[str] = None

    @classmethod
    def from_doc(cls, doc: Any, ctx: str) -> "HistTurn":
        if not isinstance(doc, dict):
            raise SchemaError(f"{ctx}: turn entry is not a mapping")
        turn = cls(
            turn=int(_require(doc, "turn", ctx)),
            log_type=str(_require(doc, "log_type", ctx)),
            user_input=str(_require(doc, "user_input", ctx)),
            assistant_response=str(_require(doc, "assistant_response", ctx)),
            image_prompt=doc.get("image_prompt"),
            image_id=doc.get("image_id"),
        )
        if turn.log_type not in LOG_TYPES:
            raise SchemaError(f"{ctx}: log_type {turn.log_type!r} not in {LOG_TYPES}")
        return turn

    def to_doc(self) -> dict:
        doc: dict = {
            "turn": self.turn,
            "log_type": self.log_type,
            "user_input": self.user_input,
            "assistant_response": self.assistant_response,
        }
        if self.image_prompt is not None:
            doc["image_prompt"] = self.image_prompt
        if self.image_id is not None:
            doc["image_id"] = self.image_id
        return doc


@dataclass
class DialogueHistory:
    concept_id: str
    turns: list[HistTurn]

    def validate(self, ctx: str = "") -> list[str]:
        """Returns warnings; raises SchemaError on hard violations."""
        ctx = ctx or f"history {self.concept_id!r}"
        warnings: list[str] = []
        for pos, turn in enumerate(self.turns, start=1):
            if turn.turn != pos:
                raise SchemaError(
                    f"{ctx}: turn numbers must be contiguous from 1 "
                    f"(got {turn.turn} at position {pos})"
                )
        image_ids = [t.image_id for t in self.turns if t.image_id]
        if len(image_ids) != len(set(image_ids)):
            raise SchemaError(f"{ctx}: duplicate image_id within history")
        if self.turns and len(image_ids) * 2 < len(self.turns):
            warnings.append(f"{ctx}: fewer than half of the turns carry images")
        return warnings

    @classmethod
    def from_doc(cls, concept_id: str, doc: Any, ctx: str) -> "DialogueHistory":
        if not isinstance(doc, list):
            raise SchemaError(f"{ctx}: history document is not a list")
        history = cls(
            concept_id=concept_id,
            turns=[HistTurn.from_doc(t, f"{ctx} turn#{i}") for i, t in enumerate(doc, 1)],
        )
        history.validate(ctx)
        return history

    def to_doc(self) -> list[dict]:
        return [t.to_doc() for t in self.turns]


@dataclass
class KeyPoint:
    text: str
    tag: Optional[str] = None  # "long" | "short" | None (easy questions)

    @classmethod
    def from_doc(cls, doc: Any, ctx: str) -> "KeyPoint":
        if isinstance(doc, str):
            return cls(text=doc)
        if isinstance(doc, dict):
            text = doc.get("point") or doc.get("text")
            if not isinstance(text, str):
                raise SchemaError(f"{ctx}: key point missing text")
            tag = doc.get("type") or doc.get("tag")
            if tag is not None and tag not in KEY_POINT_TAGS:
                raise SchemaError(f"{ctx}: key point tag {tag!r} not in {KEY_POINT_TAGS}")
            return cls(text=text, tag=tag)
        raise SchemaError(f"{ctx}: key point must be text or mapping")

    def to_doc(self) -> Any:
        if self.tag is None:
            return self.text
        return {"point": self.text, "type": self.tag}


@dataclass
class EvalQuestion:
    id: str
    concept_id: str
    difficulty: str
    question: str
    ideal_answer: str
    key_points: list[KeyPoint]
    options: list[str]
    answer: str
    image_id: Optional[str] = None
    image_prompt: Optional[str] = None

    def validate(self, ctx: str = "") -> None:
        ctx = ctx or f"question {self.id!r}"
        if self.difficulty not in DIFFICULTIES:
            raise SchemaError(f"{ctx}: difficulty {self.difficulty!r}")
        if len(self.options) != 4:
            raise SchemaError(f"{ctx}: exactly 4 options required, got {len(self.options)}")
        if self.answer not in self.options:
            raise SchemaError(f"{ctx}: answer is not one of the options")
        if not self.key_points:
            raise SchemaError(f"{ctx}: at least one key point required")
        if self.difficulty == "hard":
            tags = {kp.tag for kp in self.key_points}
            if "long" not in tags or "short" not in tags:
                raise SchemaError(
                    f"{ctx}: hard questions need both long- and short-tagged key points"
                )

    @classmethod
    def from_doc(cls, doc: Any, difficulty: str, ctx: str) -> "EvalQuestion":
        if not isinstance(doc, dict):
            raise SchemaError(f"{ctx}: question entry is not a mapping")
        criteria = doc.get("evaluation_criteria") or {}
        ideal = doc.get("ideal_answer") or criteria.get("ideal_answer")
        raw_points = doc.get("key_points") or criteria.get("key_points") or []
        if ideal is None:
            raise SchemaError(f"{ctx}: missing ideal_answer")
        question = cls(
            id=str(_require(doc, "id", ctx)),
            concept_id=str(_require(doc, "concept_id", ctx)),
            difficulty=difficulty,
            question=str(_require(doc, "question", ctx)),
            ideal_answer=str(ideal),
            key_points=[
                KeyPoint.from_doc(kp, f"{ctx} kp#{i}")
                for i, kp in enumerate(raw_points, 1)
            ],
            options=_str_list(_require(doc, "options", ctx), ctx),
            answer=str(_require(doc, "answer", ctx)),
            image_id=doc.get("image_id"),
            image_prompt=doc.get("image_prompt"),
        )
        question.validate(ctx)
        return question

    def to_doc(self) -> dict:
        doc: dict = {
            "id": self.id,
            "concept_id": self.concept_id,
            "question": self.question,
            "ideal_answer": self.ideal_answer,
            "key_points": [kp.to_doc() for kp in self.key_points],
            "options": self.options,
            "answer": self.answer,
        }
        if self.image_id is not None:
            doc["image_id"] = self.image_id
        if self.image_prompt is not None:
            doc["image_prompt"] = self.image_prompt
        return doc


@dataclass
class Dataset:
    root: str
    concepts: dict[str, ConceptProfile] = field(default_factory=dict)
    histories: dict[str, DialogueHistory] = field(default_factory=dict)
    easy: list[EvalQuestion] = field(default_factory=list)
    hard: list[EvalQuestion] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def questions(self, split: str) -> list[EvalQuestion]:
        if split == "easy":
            return list(self.easy)
        if split == "hard":
            return list(self.hard)
        if split == "both":
            return list(self.easy) + list(self.hard)
        raise ValueError(f"unknown split {split!r}")

    def counts(self) -> dict[str, int]:
        return {
            "concepts": len(self.concepts),
            "dialogues": sum(len(h.turns) for h in self.histories.values()),
            "easy": len(self.easy),
            "hard": len(self.hard),
        }
