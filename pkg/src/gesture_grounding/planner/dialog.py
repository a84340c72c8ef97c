"""Confirmation dialog around one instruction.

    Idle -> Confirming -> Planning -> Indicating -> AwaitingYesNo -> Executing -> Done
                              |                          |               |
                              +-> Errored                +-> Aborted     +-> Errored
    Aborted | Errored --retry--> Idle (next trial), or Done(failure) after the last trial

Effects that touch the world (``Execute``) are only ever emitted on the
transition into Executing; ``Indicate`` only moves the gripper to point.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Union

import numpy as np

from ..errors import IllegalTransition
from .instruction import Instruction

MAX_TRIALS = 3
APOLOGY = "Sorry, I will not continue with that."
ASK_CONFIRM = "Is this the one you meant?"


class Phase(str, enum.Enum):
    IDLE = "Idle"
    CONFIRMING = "Confirming"
    PLANNING = "Planning"
    INDICATING = "Indicating"
    AWAITING_YES_NO = "AwaitingYesNo"
    EXECUTING = "Executing"
    DONE = "Done"
    ABORTED = "Aborted"
    ERRORED = "Errored"


@dataclass(frozen=True)
class DialogState:
    phase: Phase = Phase.IDLE
    instruction: Instruction | None = None
    target: tuple[float, float, float] | None = None
    reason: str | None = None
    trial: int = 1
    success: bool | None = None

    def __post_init__(self):
        if not 1 <= self.trial <= MAX_TRIALS:
            raise ValueError(f"trial must lie in 1..{MAX_TRIALS}")

    @property
    def terminal(self) -> bool:
        return self.phase is Phase.DONE


# --- events ---------------------------------------------------------------------

@dataclass(frozen=True)
class Heard:
    instruction: Instruction


@dataclass(frozen=True)
class Acknowledge:
    """The robot finished speaking or moving and moves on."""


@dataclass(frozen=True)
class PlanReady:
    target: tuple[float, float, float] | None = None


@dataclass(frozen=True)
class PlanFailed:
    reason: str


@dataclass(frozen=True)
class Answer:
    yes: bool


@dataclass(frozen=True)
class ExecutionFinished:
    ok: bool
    reason: str | None = None


@dataclass(frozen=True)
class Retry:
    pass


Event = Union[Heard, Acknowledge, PlanReady, PlanFailed, Answer, ExecutionFinished, Retry]


# --- effects ----------------------------------------------------------------------

@dataclass(frozen=True)
class Say:
    text: str


@dataclass(frozen=True)
class Indicate:
    target: tuple[float, float, float] | None


@dataclass(frozen=True)
class Execute:
    pass


Effect = Union[Say, Indicate, Execute]


def _point(p) -> tuple[float, float, float] | None:
    if p is None:
        return None
    x, y, z = (float(v) for v in np.asarray(p, dtype=float).reshape(3))
    return (x, y, z)


def dialog_step(state: DialogState, event: Event) -> tuple[DialogState, tuple[Effect, ...]]:
    """Advance the dialog by one event; raises IllegalTransition for events the phase does not accept."""
    ph = state.phase
    if ph is Phase.IDLE and isinstance(event, Heard):
        speech = event.instruction.speech_text
        return replace(state, phase=Phase.CONFIRMING, instruction=event.instruction, target=None,
                       reason=None), (Say(speech),)
    if ph is Phase.CONFIRMING and isinstance(event, Acknowledge):
        return replace(state, phase=Phase.PLANNING), ()
    if ph is Phase.PLANNING and isinstance(event, PlanReady):
        target = _point(event.target)
        return replace(state, phase=Phase.INDICATING, target=target), (Indicate(target),)
    if ph is Phase.PLANNING and isinstance(event, PlanFailed):
        return (replace(state, phase=Phase.ERRORED, reason=event.reason),
                (Say(f"Sorry, I could not make a plan: {event.reason}"),))
    if ph is Phase.INDICATING and isinstance(event, Acknowledge):
        return replace(state, phase=Phase.AWAITING_YES_NO), (Say(ASK_CONFIRM),)
    if ph is Phase.AWAITING_YES_NO and isinstance(event, Answer):
        if event.yes:
            return replace(state, phase=Phase.EXECUTING), (Execute(),)
        return replace(state, phase=Phase.ABORTED, reason="user rejected the indicated target"), (Say(APOLOGY),)
    if ph is Phase.EXECUTING and isinstance(event, ExecutionFinished):
        if event.ok:
            return replace(state, phase=Phase.DONE, success=True), ()
        reason = event.reason or "execution failed"
        return replace(state, phase=Phase.ERRORED, reason=reason), (Say(f"Sorry, something went wrong: {reason}"),)
    if ph in (Phase.ABORTED, Phase.ERRORED) and isinstance(event, Retry):
        if state.trial >= MAX_TRIALS:
            return replace(state, phase=Phase.DONE, success=False), ()
        return DialogState(Phase.IDLE, trial=state.trial + 1), ()
    raise IllegalTransition(f"{type(event).__name__} is not accepted in phase {ph.value}")
