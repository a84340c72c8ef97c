"""Timestamped speech plus an optional gesture, and its two-line comment form."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Sequence

import numpy as np

from ..gesture.keypoints import (Description, GestureClass, GestureObservation, GestureRepresentation, Label,
                                 Numeric)

GESTURE_TIME_SLACK = 2.0
NO_GESTURE = "none detected"
NO_SPEECH = "none detected"


@dataclass(frozen=True)
class Instruction:
    speech_text: str
    word_timings: tuple[tuple[str, float, float], ...] = ()
    gesture: GestureRepresentation | None = None
    gesture_time: float | None = None

    def __post_init__(self):
        timings = tuple((str(w), float(s), float(e)) for w, s, e in self.word_timings)
        object.__setattr__(self, "word_timings", timings)
        for (_, s0, e0), (_, s1, _) in zip(timings, timings[1:]):
            if s1 < s0:
                raise ValueError("word timings must be ordered by start time")
        if any(e < s for _, s, e in timings):
            raise ValueError("a word cannot end before it starts")
        if self.gesture_time is not None and timings:
            lo, hi = timings[0][1] - GESTURE_TIME_SLACK, timings[-1][2] + GESTURE_TIME_SLACK
            if not lo <= self.gesture_time <= hi:
                raise ValueError("gesture_time must lie within the utterance span +/- 2 s")

    @classmethod
    def from_text(cls, text: str, *, start: float = 0.0, word_duration: float = 0.3,
                  gesture: GestureRepresentation | None = None, gesture_time: float | None = None) -> "Instruction":
        """Evenly spaced word timings, for synthetic scripts."""
        words = text.split()
        timings = tuple((w, start + k * word_duration, start + (k + 1) * word_duration) for k, w in enumerate(words))
        return cls(text, timings, gesture, gesture_time)

    @property
    def span(self) -> tuple[float, float] | None:
        if not self.word_timings:
            return None
        return self.word_timings[0][1], self.word_timings[-1][2]


@lru_cache(maxsize=1)
def gesture_descriptions() -> dict[str, str]:
    """Plain-language hand shape/motion description for each gesture class."""
    text = resources.files("gesture_grounding").joinpath("data/gesture_descriptions.json").read_text()
    return json.loads(text)["descriptions"]


def describe(cls: GestureClass) -> str:
    return gesture_descriptions().get(GestureClass(cls).value, GestureClass(cls).label)


def _numeric_text(obs: GestureObservation) -> str:
    w = np.round(obs.frame.world_coords, 3)
    pts = ", ".join(f"[{x:.3f}, {y:.3f}, {z:.3f}]" for x, y, z in w)
    return f"keypoints (m) at t={obs.gesture_time:.2f}s: [{pts}]"


def gesture_text(g: GestureRepresentation | None) -> str:
    if g is None:
        return NO_GESTURE
    if isinstance(g, Label):
        name = g.name.label if isinstance(g.name, GestureClass) else str(g.name)
        return name.replace("_", " ")
    if isinstance(g, Description):
        return g.text
    if isinstance(g, Numeric):
        return _numeric_text(g.observation)
    raise TypeError(f"not a gesture representation: {g!r}")


def textualize_instruction(i: Instruction, index: int = 0) -> str:
    """The two comment lines handed to the planner."""
    speech = " ".join(i.speech_text.split()) or NO_SPEECH
    return f"# Instruction {index}: {speech}\n# Gesture: {gesture_text(i.gesture)}"


def representation_for(obs: GestureObservation | None, fidelity: str) -> GestureRepresentation | None:
    """Wrap a classifier result at the requested fidelity (label, description or numeric)."""
    if obs is None or obs.gesture_class is GestureClass.UNKNOWN:
        return None
    if fidelity == "label":
        return Label(obs.gesture_class.label)
    if fidelity == "description":
        return Description(describe(obs.gesture_class))
    if fidelity == "numeric":
        return Numeric(obs)
    raise ValueError(f"unknown fidelity {fidelity!r}")


def split_block(lines: Sequence[str]) -> tuple[int, str, str]:
    """Inverse of :func:`textualize_instruction` on its two lines: (index, speech, gesture)."""
    head, gest = lines
    if not head.startswith("# Instruction ") or ":" not in head or not gest.startswith("# Gesture:"):
        raise ValueError("not an instruction block")
    num, speech = head[len("# Instruction "):].split(":", 1)
    return int(num), speech.strip(), gest[len("# Gesture:"):].strip()
