"""Exception hierarchy shared by every module.

Each error carries a stable machine-readable ``code`` so the CLI and the
HTTP service can report failures without string matching.
"""
from __future__ import annotations


class GroundingError(Exception):
    code = "GROUNDING_ERROR"


# geometry
class NonPositiveDepth(GroundingError, ValueError):
    code = "NON_POSITIVE_DEPTH"


class BehindCamera(GroundingError, ValueError):
    code = "BEHIND_CAMERA"


class DegenerateFinger(GroundingError, ValueError):
    code = "DEGENERATE_FINGER"


# gesture
class ShapeMismatch(GroundingError, ValueError):
    code = "SHAPE_MISMATCH"


class EmptyDataset(GroundingError, ValueError):
    code = "EMPTY_DATASET"


class EmptySequence(GroundingError, ValueError):
    code = "EMPTY_SEQUENCE"


# scene / files
class InvalidSpec(GroundingError, ValueError):
    code = "INVALID_SPEC"


class ParseError(GroundingError, ValueError):
    """Malformed input text. ``line``/``column`` are 1-based when known."""

    code = "PARSE_ERROR"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class InvariantViolation(GroundingError, ValueError):
    code = "INVARIANT_VIOLATION"

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# referent
class NoCandidates(GroundingError, LookupError):
    code = "NO_CANDIDATES"


class EmptyCloud(GroundingError, LookupError):
    code = "EMPTY_CLOUD"


class SemanticFilterRejected(GroundingError):
    code = "SEMANTIC_FILTER_REJECTED"


# planner
class BackendUnreachable(GroundingError, ConnectionError):
    code = "BACKEND_UNREACHABLE"


class BackendTimeout(GroundingError, TimeoutError):
    code = "TIMEOUT"


class TranscriptMiss(GroundingError, KeyError):
    code = "TRANSCRIPT_MISS"

    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else "transcript miss"


class IllegalTransition(GroundingError):
    code = "ILLEGAL_TRANSITION"


# sim
class PrimitiveFailure(GroundingError):
    code = "PRIMITIVE_FAILURE"

    def __init__(self, message: str, trace=None, world=None):
        super().__init__(message)
        self.trace = trace
        self.world = world


class GraspFailure(PrimitiveFailure):
    code = "GRASP_FAILURE"


class NoDrawerAtPos(PrimitiveFailure):
    code = "NO_DRAWER_AT_POS"


class NothingHeld(PrimitiveFailure):
    code = "NOTHING_HELD"


class UnknownFunction(PrimitiveFailure):
    code = "UNKNOWN_FUNCTION"


class ArityError(PrimitiveFailure):
    code = "ARITY_ERROR"


class MissingGesture(PrimitiveFailure):
    code = "MISSING_GESTURE"
