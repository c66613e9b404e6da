"""Dataset loader, validator, and serializer (round-trip safe)."""

from __future__ import annotations

import os
from typing import Any, Optional

import yaml

from duomem.errors import DanglingImageRef, SchemaError
from duomem.dataset.schema import (
    ConceptProfile,
    Dataset,
    DialogueHistory,
    EvalQuestion,
)
from duomem.images import placeholder_png


def _read_yaml(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise SchemaError(f"{path}: invalid YAML: {exc}") from exc


def image_path(root: str, image_id: str) -> str:
    return os.path.join(root, "images", f"{image_id}.png")


def load_dataset(root: str, allow_missing_images: bool = False) -> Dataset:
    """Load and validate the full dataset; empty root yields an empty dataset."""
    dataset = Dataset(root=root)
    concepts_dir = os.path.join(root, "concepts")
    if os.path.isdir(concepts_dir):
        for name in sorted(os.listdir(concepts_dir)):
            if not name.endswith((".yaml", ".yml")):
                continue
            path = os.path.join(concepts_dir, name)
            profile = ConceptProfile.from_doc(_read_yaml(path), path)
            dataset.concepts[profile.concept_id] = profile

    histories_dir = os.path.join(root, "histories")
    if os.path.isdir(histories_dir):
        for name in sorted(os.listdir(histories_dir)):
            if not name.endswith((".yaml", ".yml")):
                continue
            path = os.path.join(histories_dir, name)
            concept_id = os.path.splitext(name)[0]
            history = DialogueHistory.from_doc(concept_id, _read_yaml(path), path)
            dataset.warnings.extend(history.validate(path))
            dataset.histories[concept_id] = history

    for split in ("easy", "hard"):
        path = os.path.join(root, "questions", f"{split}.yaml")
        if not os.path.isfile(path):
            continue
        doc = _read_yaml(path)
        if doc is None:
            continue
        if not isinstance(doc, list):
            raise SchemaError(f"{path}: questions document is not a list")
        questions = [
            EvalQuestion.from_doc(entry, split, f"{path} q#{i}")
            for i, entry in enumerate(doc, 1)
        ]
        if split == "easy":
            dataset.easy = questions
        else:
            dataset.hard = questions

    _check_references(dataset, allow_missing_images)
    return dataset


def _check_references(dataset: Dataset, allow_missing_images: bool) -> None:
    for history in dataset.histories.values():
        if history.concept_id not in dataset.concepts:
            raise SchemaError(
                f"history {history.concept_id!r} has no matching concept"
            )
    for question in dataset.easy + dataset.hard:
        if question.concept_id not in dataset.concepts:
            raise SchemaError(
                f"question {question.id!r} references unknown concept "
                f"{question.concept_id!r}"
            )
    if allow_missing_images:
        return
    for image_id, owner in _referenced_images(dataset):
        if not os.path.isfile(image_path(dataset.root, image_id)):
            raise DanglingImageRef(f"{owner} references missing image {image_id!r}")


def _referenced_images(dataset: Dataset):
    for profile in dataset.concepts.values():
        yield profile.raw_image, f"concept {profile.concept_id!r}"
    for history in dataset.histories.values():
        for turn in history.turns:
            if turn.image_id:
                yield turn.image_id, f"history {history.concept_id!r} turn {turn.turn}"
    for question in dataset.easy + dataset.hard:
        if question.image_id:
            yield question.image_id, f"question {question.id!r}"


def save_dataset(dataset: Dataset, root: Optional[str] = None) -> str:
    """Write the dataset back to disk in the canonical layout."""
    root = root or dataset.root
    for sub in ("concepts", "histories", "questions", "images"):
        os.makedirs(os.path.join(root, sub), exist_ok=True)
    for profile in dataset.concepts.values():
        _write_yaml(
            os.path.join(root, "concepts", f"{profile.concept_id}.yaml"),
            profile.to_doc(),
        )
    for history in dataset.histories.values():
        _write_yaml(
            os.path.join(root, "histories", f"{history.concept_id}.yaml"),
            history.to_doc(),
        )
    _write_yaml(
        os.path.join(root, "questions", "easy.yaml"),
        [q.to_doc() for q in dataset.easy],
    )
    _write_yaml(
        os.path.join(root, "questions", "hard.yaml"),
        [q.to_doc() for q in dataset.hard],
    )
    return root


def write_placeholder_images(dataset: Dataset, root: Optional[str] = None) -> int:
    """Materialize deterministic placeholder PNGs for unreferenced image ids."""
    root = root or dataset.root
    os.makedirs(os.path.join(root, "images"), exist_ok=True)
    written = 0
    for image_id, _ in _referenced_images(dataset):
        path = image_path(root, image_id)
        if not os.path.isfile(path):
            with open(path, "wb") as fh:
                fh.write(placeholder_png(image_id))
            written += 1
    return written


def _write_yaml(path: str, doc: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, allow_unicode=True)
