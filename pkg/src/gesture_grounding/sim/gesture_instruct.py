"""Speech-gesture instruction cases scored by the primitive a planner calls."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

from ..errors import GroundingError, InvariantViolation, ParseError
from ..planner.backends import complete
from ..planner.catalog import ARGUMENT_KIND, EXTENDED_CATALOG, Catalog
from ..planner.dsl import argument_kinds, call_target, parse_policy, validate_policy
from ..planner.instruction import Instruction, textualize_instruction
from ..gesture.keypoints import Description, Label
from ..planner.prompt import assemble_prompt, load_context

GESTURE_TYPES = ("Symbolic", "Semaphoric", "Iconic", "Deictic")
HARNESS_FIDELITIES = ("label", "description")
ARG_KINDS = frozenset(ARGUMENT_KIND.values()) | {"string", "literal"}


@dataclass(frozen=True)
class Expected:
    primitive: str
    argument_kind: str | None = None
    target: str | None = None


@dataclass(frozen=True)
class GestureInstructCase:
    id: str
    gesture_type: str
    gesture_label: str
    gesture_description: str
    language_instruction: str | None
    context: str | None
    intent: str
    expected: Expected

    def __post_init__(self):
        if self.gesture_type not in GESTURE_TYPES:
            raise InvariantViolation(f"{self.id}.gesture_type", f"must be one of {GESTURE_TYPES}")
        if self.gesture_type == "Symbolic" and self.language_instruction:
            raise InvariantViolation(f"{self.id}.language_instruction", "symbolic cases carry no speech")

    def instruction(self, fidelity: str) -> Instruction:
        if fidelity == "label":
            g = Label(self.gesture_label)
        elif fidelity == "description":
            g = Description(self.gesture_description)
        else:
            raise ValueError(f"cases provide label and description fidelity only, not {fidelity!r}")
        return Instruction(self.language_instruction or "", (), g)


def _case(d, k: int, catalog: Catalog) -> GestureInstructCase:
    path = f"cases[{k}]"
    if not isinstance(d, dict):
        raise InvariantViolation(path, "expected an object")
    for key in ("id", "gesture_type", "gesture_label", "gesture_description", "intent", "expected"):
        if not isinstance(d.get(key), (str, dict)) or d.get(key) in ("", {}):
            raise InvariantViolation(f"{path}.{key}", "missing or empty")
    e = d["expected"]
    if not isinstance(e, dict) or not isinstance(e.get("primitive"), str):
        raise InvariantViolation(f"{path}.expected.primitive", "missing")
    spec = catalog.functions.get(e["primitive"])
    if spec is None or spec.perception:
        raise InvariantViolation(f"{path}.expected.primitive", f"{e['primitive']!r} is not a catalog action")
    kind = e.get("argument_kind")
    if (kind is None) != (spec.arity == 0):
        raise InvariantViolation(f"{path}.expected.argument_kind", "must be given exactly when the primitive takes arguments")
    if kind is not None and kind not in ARG_KINDS:
        raise InvariantViolation(f"{path}.expected.argument_kind", f"unknown kind {kind!r}")
    for opt in ("language_instruction", "context"):
        if d.get(opt) is not None and not isinstance(d[opt], str):
            raise InvariantViolation(f"{path}.{opt}", "expected a string or null")
    return GestureInstructCase(d["id"], d["gesture_type"], d["gesture_label"], d["gesture_description"],
                               d.get("language_instruction"), d.get("context"), d["intent"],
                               Expected(e["primitive"], kind, e.get("target")))


def loads_cases(text: str, catalog: Catalog = EXTENDED_CATALOG) -> list[GestureInstructCase]:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    if not isinstance(d, dict) or d.get("format_version") != 1:
        raise InvariantViolation("format_version", "expected 1")
    if not isinstance(d.get("cases"), list):
        raise InvariantViolation("cases", "expected a list")
    cases = [_case(c, k, catalog) for k, c in enumerate(d["cases"])]
    ids = [c.id for c in cases]
    if len(set(ids)) != len(ids):
        raise InvariantViolation("cases", "duplicate case ids")
    return cases


def load_cases(path=None, catalog: Catalog = EXTENDED_CATALOG) -> list[GestureInstructCase]:
    """Read a case file; ``None`` loads the packaged 36 cases."""
    if path is None:
        text = resources.files("gesture_grounding").joinpath("data/gesture_instruct.json").read_text()
    else:
        text = Path(path).read_text()
    return loads_cases(text, catalog)


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    gesture_type: str
    fidelity: str
    success: bool
    code: str | None
    reason: str

    def to_dict(self) -> dict:
        return {"id": self.case_id, "gesture_type": self.gesture_type, "fidelity": self.fidelity,
                "success": self.success, "reason": self.reason, "code": self.code}


def score_program(code: str, expected: Expected, catalog: Catalog = EXTENDED_CATALOG) -> tuple[bool, str]:
    """Does ``code`` call the expected primitive with an argument of the expected kind?"""
    try:
        p = parse_policy(code)
    except ParseError as e:
        return False, f"parse error: {e}"
    problems = validate_policy(p, catalog)
    if problems:
        return False, f"invalid: {problems[0].message}"
    calls = [c for _, c in p.calls() if c.name == expected.primitive]
    if not calls:
        return False, f"no call to {expected.primitive}"
    for c in calls:
        kinds = argument_kinds(p, c)
        if expected.argument_kind is not None and (not kinds or kinds[0] != expected.argument_kind):
            continue
        if expected.target is not None:
            t = call_target(p, c)
            if t is None or t.strip().lower() != expected.target.lower():
                continue
        return True, "ok"
    return False, f"{expected.primitive} called with the wrong argument"


def run_gesture_instruct(cases: Sequence[GestureInstructCase], backend,
                         fidelities: Sequence[str] = HARNESS_FIDELITIES, *, context=None) -> "InstructReport":
    context = load_context(None, EXTENDED_CATALOG) if context is None else context.with_catalog(EXTENDED_CATALOG)
    results = []
    for fid in fidelities:
        for case in cases:
            block = textualize_instruction(case.instruction(fid), 0)
            prompt = assemble_prompt(context, block, situation=case.context)
            try:
                code = complete(backend, prompt)
            except GroundingError as e:
                results.append(CaseResult(case.id, case.gesture_type, fid, False, None, f"{e.code}: {e}"))
                continue
            ok, why = score_program(code, case.expected)
            results.append(CaseResult(case.id, case.gesture_type, fid, ok, code, why))
    return InstructReport(tuple(fidelities), tuple(results))


@dataclass(frozen=True)
class InstructReport:
    fidelities: tuple[str, ...]
    results: tuple[CaseResult, ...]

    def counts(self) -> dict[str, dict[str, tuple[int, int]]]:
        """gesture type (and "Overall") -> fidelity -> (successes, cases)."""
        out: dict[str, dict[str, tuple[int, int]]] = {}
        for t in GESTURE_TYPES + ("Overall",):
            out[t] = {}
            for f in self.fidelities:
                rs = [r for r in self.results if r.fidelity == f and (t == "Overall" or r.gesture_type == t)]
                out[t][f] = (sum(r.success for r in rs), len(rs))
        return out

    def table(self) -> str:
        counts = self.counts()
        head = f"{'gesture type':<12}" + "".join(f"{f:>20}" for f in self.fidelities)
        lines = [head, "-" * len(head)]
        for t, row in counts.items():
            cells = "".join(f"{f'{k}/{n} ({100 * k / n:.1f}%)' if n else '-':>20}" for k, n in row.values())
            lines.append(f"{t:<12}{cells}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"fidelities": list(self.fidelities),
                "counts": {t: {f: list(v) for f, v in row.items()} for t, row in self.counts().items()},
                "results": [r.to_dict() for r in self.results]}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"
