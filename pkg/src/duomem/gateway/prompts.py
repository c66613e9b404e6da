"""Prompt template registry: one file per prompt id, ${name} slots."""

from __future__ import annotations

import re
from importlib import resources
from string import Template

from duomem.errors import BadRequest

_SLOT_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


class PromptRegistry:
    def __init__(self) -> None:
        self._templates: dict[str, str] = {}
        root = resources.files("duomem.gateway").joinpath("templates")
        for entry in root.iterdir():
            if entry.name.endswith(".txt"):
                self._templates[entry.name[: -len(".txt")]] = entry.read_text()

    @property
    def prompt_ids(self) -> list[str]:
        return sorted(self._templates)

    def required_slots(self, prompt_id: str) -> set[str]:
        return set(_SLOT_RE.findall(self.raw(prompt_id)))

    def raw(self, prompt_id: str) -> str:
        try:
            return self._templates[prompt_id]
        except KeyError:
            raise BadRequest(f"unknown prompt_id {prompt_id!r}") from None

    def render(self, prompt_id: str, slots: dict[str, str]) -> str:
        required = self.required_slots(prompt_id)
        missing = required - set(slots)
        if missing:
            raise BadRequest(
                f"prompt {prompt_id!r} missing slots: {', '.join(sorted(missing))}"
            )
        return Template(self.raw(prompt_id)).safe_substitute(
            {k: str(v) for k, v in slots.items()}
        )


_default: PromptRegistry | None = None


def default_registry() -> PromptRegistry:
    global _default
    if _default is None:
        _default = PromptRegistry()
    return _default
