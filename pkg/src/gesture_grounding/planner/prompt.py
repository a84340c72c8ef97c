"""Prompt assembly: API documentation, few-shot examples, session history, instruction."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Sequence

from .catalog import BASE_CATALOG, Catalog
from .dsl import parse_policy, validate_policy

DEFAULT_STOP = ("\n# Instruction",)
DEFAULT_MAX_TOKENS = 256


def digest_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Prompt:
    preamble: str
    instruction_block: str
    stop: tuple[str, ...] = DEFAULT_STOP
    temperature: float = 0.0
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self):
        if self.temperature != 0:
            raise ValueError("prompts are always sent at temperature 0")
        object.__setattr__(self, "stop", tuple(self.stop))

    @classmethod
    def raw(cls, text: str, max_tokens: int = DEFAULT_MAX_TOKENS) -> "Prompt":
        """A free-form prompt with no instruction block (used by auxiliary queries)."""
        return cls(text, "", (), 0.0, max_tokens)

    @property
    def text(self) -> str:
        if not self.instruction_block:
            return self.preamble
        return self.preamble + self.instruction_block + "\n"

    @property
    def digest(self) -> str:
        return digest_text(self.text)

    def request_body(self) -> dict:
        return {"prompt": self.text, "temperature": 0, "max_tokens": self.max_tokens, "stop": list(self.stop)}


@dataclass(frozen=True)
class PromptContext:
    header: str
    examples: tuple[str, ...]
    catalog: Catalog = field(default=BASE_CATALOG)

    def __post_init__(self):
        object.__setattr__(self, "examples", tuple(self.examples))
        if not self.examples:
            raise ValueError("a prompt context needs at least one few-shot example")

    def with_catalog(self, catalog: Catalog) -> "PromptContext":
        return PromptContext(self.header, self.examples, catalog)

    def check_examples(self) -> list[str]:
        """Problems with the shipped examples against the catalog (empty if none)."""
        problems = []
        for k, ex in enumerate(self.examples):
            for v in validate_policy(parse_policy(ex), self.catalog):
                problems.append(f"example {k}: {v.message}")
        return problems


def load_context(path=None, catalog: Catalog = BASE_CATALOG) -> PromptContext:
    """Read a prompt context file; ``None`` loads the packaged default."""
    if path is None:
        text = resources.files("gesture_grounding").joinpath("data/prompt_context.json").read_text()
    else:
        text = Path(path).read_text()
    d = json.loads(text)
    if d.get("format_version") != 1:
        raise ValueError("prompt context: expected format_version 1")
    return PromptContext(d["header"], tuple(d["examples"]), catalog)


def api_docs(catalog: Catalog) -> str:
    lines = ["# Perception API:"]
    lines += [f"#   {s.signature()}  -- {s.doc}" for s in catalog.perception]
    lines += ["# Action API:"]
    lines += [f"#   {s.signature()}  -- {s.doc}" for s in catalog.actions]
    return "\n".join(lines)


def assemble_prompt(context: PromptContext, instruction_lines: str, *, history: Sequence[str] = (),
                    situation: str | None = None, max_tokens: int = DEFAULT_MAX_TOKENS) -> Prompt:
    """Concatenate header, API docs, examples, earlier turns and the new instruction.

    ``history`` holds earlier instruction blocks of this session, each
    followed by the code that was generated for it. ``situation`` adds a
    ``# Context:`` line describing the robot's state.
    """
    parts = [context.header.rstrip("\n"), api_docs(context.catalog)]
    parts += [ex.strip("\n") for ex in context.examples]
    preamble = "\n\n".join(parts) + "\n\n"
    if history:
        preamble += "\n\n".join(h.strip("\n") for h in history) + "\n\n"
    if situation:
        preamble += f"# Context: {' '.join(situation.split())}\n"
    block = instruction_lines.strip("\n")
    if len(block.split("\n")) != 2:
        raise ValueError("the instruction block must be exactly two lines")
    return Prompt(preamble, block, DEFAULT_STOP, 0.0, max_tokens)
