"""Shared fixtures: mock-backed gateways and a small on-disk dataset."""

from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from duomem.dataset.loader import image_path, save_dataset, write_placeholder_images
from duomem.dataset.schema import (
    ConceptProfile,
    Dataset,
    DialogueHistory,
    EvalQuestion,
    HistTurn,
    KeyPoint,
)
from duomem.gateway.core import Gateway, GatewayConfig
from duomem.gateway.mock import MockBackend


def make_gateway(**mock_kwargs) -> Gateway:
    config = GatewayConfig(backoff_base=0.0)
    return Gateway(MockBackend(**mock_kwargs), config=config)


@pytest.fixture
def gateway() -> Gateway:
    return make_gateway()


def _q(idx, concept_id, difficulty, question, answer, wrong, key_points=()):
    options = [answer] + list(wrong)
    options = sorted(options)  # stable layout independent of correctness
    return EvalQuestion(
        id=f"q{idx}",
        concept_id=concept_id,
        difficulty=difficulty,
        question=question,
        ideal_answer=answer,
        key_points=[KeyPoint(text=t, tag=tag) for t, tag in key_points],
        options=options,
        answer=answer,
    )


def make_mini_dataset(root: str) -> Dataset:
    """Three concepts, short histories, six questions; images materialized."""
    ds = Dataset(root=root)
    ds.concepts["mochi"] = ConceptProfile(
        concept_id="mochi",
        category="pet",
        raw_image="mochi_raw",
        long_term_attrs=["Mochi is a grey shorthair cat", "Mochi fears thunder"],
        short_term_attrs=["Mochi is wearing a red collar today"],
    )
    ds.concepts["mug01"] = ConceptProfile(
        concept_id="mug01",
        category="object",
        raw_image="mug01_raw",
        long_term_attrs=["The mug is blue ceramic with a chipped handle"],
        short_term_attrs=["The mug currently sits on the desk"],
    )
    ds.concepts["alex"] = ConceptProfile(
        concept_id="alex",
        category="person",
        raw_image="alex_raw",
        long_term_attrs=["Alex is the user's climbing partner"],
        short_term_attrs=["Alex sprained a wrist last week"],
    )

    def turns(concept_id, rows):
        out = []
        for i, (user, assistant, image_id) in enumerate(rows, 1):
            out.append(
                HistTurn(
                    turn=i,
                    log_type="event",
                    user_input=user,
                    assistant_response=assistant,
                    image_id=image_id,
                    image_prompt=f"photo for {image_id}" if image_id else None,
                )
            )
        return DialogueHistory(concept_id=concept_id, turns=out)

    ds.histories["mochi"] = turns(
        "mochi",
        [
            ("This is my cat Mochi.", "Noted, Mochi looks lovely.", "mochi_1"),
            ("Mochi is scared of thunder.", "I'll remember that.", None),
            ("Mochi got a red collar today.", "A red collar, got it.", "mochi_2"),
        ],
    )
    ds.histories["mug01"] = turns(
        "mug01",
        [
            ("Here is my favourite mug.", "A blue ceramic mug, noted.", "mug01_1"),
            ("The handle chipped this morning.", "Sorry to hear, noted.", None),
        ],
    )
    ds.histories["alex"] = turns(
        "alex",
        [
            ("This is Alex, my climbing partner.", "Nice to meet Alex.", "alex_1"),
            ("Alex sprained a wrist last week.", "I hope it heals fast.", None),
        ],
    )

    ds.easy = [
        _q(1, "mochi", "easy", "What color is Mochi's collar?", "Red",
           ["Blue", "Green", "Black"], [("The collar is red", None)]),
        _q(2, "mug01", "easy", "What is the mug made of?", "Ceramic",
           ["Glass", "Steel", "Wood"], [("The mug is ceramic", None)]),
        _q(3, "alex", "easy", "What did Alex injure?", "A wrist",
           ["An ankle", "A knee", "A shoulder"], [("Alex hurt a wrist", None)]),
    ]
    ds.hard = [
        _q(4, "mochi", "hard", "Describe Mochi and Mochi's current accessory.",
           "A grey cat wearing a red collar",
           ["A black cat with a bell", "A grey cat with a blue bow",
            "A white cat wearing a red collar"],
           [("Mochi is a grey cat", "long"), ("Mochi wears a red collar", "short")]),
        _q(5, "mug01", "hard", "Describe the mug and its latest damage.",
           "A blue ceramic mug with a chipped handle",
           ["A red mug with a cracked rim", "A blue mug in perfect shape",
            "A green mug with a chipped handle"],
           [("The mug is blue ceramic", "long"), ("The handle is chipped", "short")]),
        _q(6, "alex", "hard", "Who is Alex and what happened recently?",
           "The user's climbing partner who sprained a wrist",
           ["A coworker who broke a leg", "A neighbour who sprained a wrist",
            "The user's climbing partner who caught a cold"],
           [("Alex climbs with the user", "long"), ("Alex sprained a wrist", "short")]),
    ]

    save_dataset(ds, root)
    write_placeholder_images(ds, root)
    return ds


@pytest.fixture
def mini_dataset(tmp_path):
    root = str(tmp_path / "dataset")
    return make_mini_dataset(root)
