"""Automatic dataset construction driven by the model gateway.

Each build step renders its construction template, parses the fenced YAML
from the model reply, and validates through the same schema code the loader
uses (so the loader's validator is the oracle for generated content). Image
synthesis is delegated to an image-generation endpoint when configured;
otherwise every image id is materialized as a deterministic placeholder.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import yaml

from duomem.errors import MalformedOp, NoStructuredBlock, SchemaError
from duomem.dataset.loader import save_dataset, write_placeholder_images
from duomem.dataset.schema import (
    ConceptProfile,
    Dataset,
    DialogueHistory,
    EvalQuestion,
)
from duomem.gateway.core import Gateway
from duomem.gateway.parsers import extract_fenced_block
from duomem.gateway.types import ChatRequest, ImageRef

# Temperature used for all construction-time generation calls.
CONSTRUCTION_TEMPERATURE = 0.8

PROFILE_TEMPLATE = """\
concept_id: <id>
category: <pet|object|person>
long_term_attrs:
  - <stable trait>
short_term_attrs:
  - <recent, transient state>
"""


def _parse_yaml_block(raw: str):
    block = extract_fenced_block(raw)
    try:
        return yaml.safe_load(block)
    except Exception as exc:
        raise NoStructuredBlock(f"unparseable construction output: {exc}") from exc


@dataclass
class BuilderParams:
    n_dialogues: int = 14
    n_easy: int = 8
    n_hard: int = 6


class DatasetBuilder:
    def __init__(
        self,
        gateway: Gateway,
        params: Optional[BuilderParams] = None,
        image_generator: Optional[Callable[[str, str], bytes]] = None,
    ) -> None:
        self.gateway = gateway
        self.params = params or BuilderParams()
        self.image_generator = image_generator

    def _chat_yaml(self, prompt_id: str, slots: dict, images=None, convert=None):
        """Chat, parse the fenced YAML, optionally convert/validate.

        One automatic retry covers the whole parse-and-validate path, so a
        reply that is syntactically YAML but schema-invalid is re-asked too.
        """
        last: Optional[Exception] = None
        for _ in range(2):
            raw = self.gateway.chat(
                ChatRequest(
                    prompt_id=prompt_id,
                    slots=slots,
                    images=images or [],
                    temperature=CONSTRUCTION_TEMPERATURE,
                )
            )
            try:
                doc = _parse_yaml_block(raw)
                return convert(doc) if convert is not None else doc
            except (NoStructuredBlock, MalformedOp, SchemaError) as exc:
                last = exc
        raise last  # type: ignore[misc]

    def build_concept(
        self, raw_image: ImageRef, concept_id: str, category: str
    ) -> ConceptProfile:
        slots = {
            "category": category,
            "concept_id": concept_id,
            "profile_template": PROFILE_TEMPLATE,
        }
        def convert(doc):
            if isinstance(doc, dict):
                doc.setdefault("concept_id", concept_id)
                doc.setdefault("category", category)
                doc.setdefault("raw_image", f"{concept_id}_raw")
            return ConceptProfile.from_doc(doc, f"generated concept {concept_id}")

        return self._chat_yaml("concept_profile", slots, images=[raw_image], convert=convert)

    def build_dialogues(self, profile: ConceptProfile) -> DialogueHistory:
        slots = {"profile": yaml.safe_dump(profile.to_doc(), sort_keys=False)}
        return self._chat_yaml(
            "dialogue_history",
            slots,
            convert=lambda doc: DialogueHistory.from_doc(
                profile.concept_id, doc, f"generated history {profile.concept_id}"
            ),
        )

    def build_questions(
        self, profile: ConceptProfile, history: DialogueHistory
    ) -> tuple[list[EvalQuestion], list[EvalQuestion]]:
        profile_text = yaml.safe_dump(profile.to_doc(), sort_keys=False)
        history_text = yaml.safe_dump(history.to_doc(), sort_keys=False)
        out: dict[str, list[EvalQuestion]] = {}
        for split, prompt_id in (("easy", "easy_questions"), ("hard", "hard_questions")):

            def convert(doc, split=split):
                if not isinstance(doc, list):
                    raise SchemaError(f"generated {split} questions are not a list")
                questions = []
                for i, entry in enumerate(doc, 1):
                    if isinstance(entry, dict):
                        entry.setdefault("concept_id", profile.concept_id)
                    questions.append(
                        EvalQuestion.from_doc(
                            entry, split, f"generated {split} q#{i} ({profile.concept_id})"
                        )
                    )
                return questions

            out[split] = self._chat_yaml(
                prompt_id,
                {"profile": profile_text, "history": history_text},
                convert=convert,
            )
        return out["easy"], out["hard"]

    def build(
        self,
        raw_images: list[tuple[ImageRef, str, str]],  # (image, concept_id, category)
        root: str,
    ) -> Dataset:
        dataset = Dataset(root=root)
        for raw_image, concept_id, category in raw_images:
            profile = self.build_concept(raw_image, concept_id, category)
            history = self.build_dialogues(profile)
            easy, hard = self.build_questions(profile, history)
            dataset.concepts[profile.concept_id] = profile
            dataset.histories[profile.concept_id] = history
            dataset.easy.extend(easy)
            dataset.hard.extend(hard)
        save_dataset(dataset, root)
        self._materialize_images(dataset, root)
        return dataset

    def _materialize_images(self, dataset: Dataset, root: str) -> None:
        if self.image_generator is None:
            write_placeholder_images(dataset, root)
            return
        from duomem.dataset.loader import image_path
        import os

        os.makedirs(os.path.join(root, "images"), exist_ok=True)
        for history in dataset.histories.values():
            for turn in history.turns:
                if turn.image_id and turn.image_prompt:
                    path = image_path(root, turn.image_id)
                    if not os.path.isfile(path):
                        with open(path, "wb") as fh:
                            fh.write(self.image_generator(turn.image_prompt, turn.image_id))
        write_placeholder_images(dataset, root)
