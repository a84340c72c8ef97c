"""Hand keypoint files: a versioned JSON list of frames."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

from ..errors import InvariantViolation, ParseError
from .keypoints import HandKeypoints

FORMAT_VERSION = 1


def dumps_hand(frames: Sequence[HandKeypoints]) -> str:
    return json.dumps({"format_version": FORMAT_VERSION, "frames": [f.to_dict() for f in frames]},
                      sort_keys=True) + "\n"


def save_hand(frames: Sequence[HandKeypoints], path) -> None:
    Path(path).write_text(dumps_hand(frames))


def hand_from_dict(d) -> list[HandKeypoints]:
    if not isinstance(d, dict) or d.get("format_version") != FORMAT_VERSION:
        raise InvariantViolation("format_version", f"expected {FORMAT_VERSION}")
    raw = d.get("frames")
    if not isinstance(raw, list) or not raw:
        raise InvariantViolation("frames", "expected a non-empty list")
    frames = []
    for k, f in enumerate(raw):
        try:
            frames.append(HandKeypoints.from_dict(f))
        except (KeyError, TypeError, ValueError) as e:
            raise InvariantViolation(f"frames[{k}]", str(e)) from None
    return frames


def loads_hand(text: str) -> list[HandKeypoints]:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    return hand_from_dict(d)


def load_hand(path) -> list[HandKeypoints]:
    return loads_hand(Path(path).read_text())
