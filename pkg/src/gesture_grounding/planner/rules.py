"""A deterministic keyword/gesture decision table standing in for a hosted model."""
from __future__ import annotations

import re

from ..gesture.keypoints import Description, GestureClass, GestureObservation, Label, Numeric
from .instruction import NO_GESTURE, NO_SPEECH, Instruction, gesture_descriptions, gesture_text

NOT_UNDERSTOOD = "say('I did not understand')\n"
NUDGE_DISTANCE = 0.1

_DETERMINERS = {"that", "this", "the", "those", "these"}
_PHRASE_STOP = _DETERMINERS | {"over", "here", "there", "to", "into", "onto", "on", "in", "for", "please",
                               "and", "with", "from", "at", "me", "it", "a", "an", "up", "down"}

# extra names seen in labels; everything else resolves through the class descriptions
_SYNONYMS = {
    "stop": "open_palm_out",
    "handover": "open_palm_up",
    "drawing": "pointing",
    "touching an object": "touching",
    "touching": "touching",
    "pick up": "pick_up_motion",
    "release": "release_motion",
    "circling horizontally": "circling_horizontal",
    "circling vertically": "circling_vertical",
}

# substring fallbacks, most specific first
_KEYWORDS = (
    ("hand is on an object", "touching"),
    ("circular motion horizontally", "circling_horizontal"),
    ("circular motion vertically", "circling_vertical"),
    ("pointing", "pointing"),
    ("index finger extends out while others curl inward", "pointing"),
    ("open palm faces upward", "open_palm_up"),
    ("open palm faces outward", "open_palm_out"),
    ("thumbs up", "thumbs_up"),
    ("thumbs down", "thumbs_down"),
)


def gesture_concept(text: str) -> str | None:
    """Map a gesture line (label or description) to a canonical gesture name."""
    t = " ".join(text.lower().replace("_", " ").split())
    if not t or t == NO_GESTURE:
        return None
    for cls in GestureClass:
        if t == cls.label:
            return None if cls is GestureClass.UNKNOWN else cls.value
    for cls_value, desc in gesture_descriptions().items():
        if t == desc.lower():
            return cls_value
    if t in _SYNONYMS:
        return _SYNONYMS[t]
    if t.startswith("keypoints"):
        return None
    for key, concept in _KEYWORDS:
        if key in t:
            return concept
    return None


def _words(speech: str) -> list[str]:
    return re.findall(r"[a-z']+", speech.lower())


def object_phrase(speech: str) -> str:
    """Noun phrase after the first determiner, e.g. 'pick up this water jug' -> 'water jug'."""
    words = _words(speech)
    for k, w in enumerate(words):
        if w in _DETERMINERS:
            phrase = []
            for nxt in words[k + 1:]:
                if nxt in _PHRASE_STOP:
                    break
                phrase.append(nxt)
            if phrase:
                return " ".join(phrase)
    return "object"


def _var(phrase: str) -> str:
    name = re.sub(r"[^a-z0-9]+", "_", phrase.lower()).strip("_") or "object"
    if name[0].isdigit():
        name = "obj_" + name
    return f"{name}_pos"


def _lit(s: str) -> str:
    return "'" + s.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _lines(*stmts: str) -> str:
    return "\n".join(stmts) + "\n"


def _handover_object(noun: str) -> str:
    v = _var(noun)
    return _lines(f"{v} = detect_referred_obj_pos({_lit(noun)})", "hand_pos = detect_hand_center_pos()",
                  f"pick_up_obj_at_pos({v})", "move_gripper_to_pos(hand_pos)", "open_gripper()")


_HAND_CENTER_MOVE = _lines("target_pos = detect_hand_center_pos()", "move_gripper_to_pos(target_pos)")
_HANDOVER_HERE = _lines("target_pos = detect_hand_center_pos()", "move_gripper_to_pos(target_pos)", "open_gripper()")


def _pointing(words: set[str], speech: str, n_this: int) -> str | None:
    noun = object_phrase(speech)
    if "draw" in words:
        return _lines("path = detect_hand_trajectory()", "draw_trajectory(path)")
    if words & {"give", "hand", "fetch", "bring"}:
        return _handover_object(noun)
    if "open" in words and ("drawer" in words or noun == "drawer"):
        return _lines("drawer_pos = detect_referred_obj_pos('drawer')", "open_drawer_at_pos(drawer_pos)")
    if "throw" in words:
        out = []
        for k in range(max(1, n_this)):
            v = _var(noun) if n_this <= 1 else f"{_var(noun)[:-4]}_{k + 1}_pos"
            out += [f"{v} = detect_referred_obj_pos({_lit(noun)})", f"pick_up_obj_at_pos({v})",
                    "trash_can_pos = detect_obj_pos('trash can')", "place_obj_at_pos(trash_can_pos)"]
        return _lines(*out)
    if words & {"pick", "grab", "take", "grasp", "get"}:
        v = _var(noun)
        return _lines(f"{v} = detect_referred_obj_pos({_lit(noun)})", f"pick_up_obj_at_pos({v})")
    if words & {"put", "place", "drop", "set"}:
        return _lines("target_pos = detect_referred_location()", "place_obj_at_pos(target_pos)")
    if "move" in words and words & {"way", "direction"}:
        return _lines("direction = detect_referred_direction()",
                      f"move_gripper_in_direction(direction, {NUDGE_DISTANCE!r})")
    if words & {"move", "go", "come"} and words & {"here", "there"}:
        return _lines("target_pos = detect_referred_location()", "move_gripper_to_pos(target_pos)")
    return None


def rule_plan_text(speech: str, gesture_line: str) -> str:
    """Policy code for one instruction given its speech and gesture lines."""
    speech = "" if speech.strip() == NO_SPEECH else speech
    words = set(_words(speech))
    n_this = sum(1 for w in _words(speech) if w in ("this", "that"))
    concept = gesture_concept(gesture_line)
    plan = None
    if concept == "pointing":
        plan = _pointing(words, speech, n_this)
    elif concept == "open_palm_up":
        if not words or words & {"here", "me", "hand", "give", "place", "put"}:
            plan = _HANDOVER_HERE
    elif concept == "touching":
        if words & {"pick", "grab", "take", "grasp", "get"}:
            plan = _lines("target_pos = detect_hand_center_pos()", "pick_up_obj_at_pos(target_pos)")
    elif concept in ("fist", "beckoning"):
        if not words or words & {"come", "move", "here"}:
            plan = _HAND_CENTER_MOVE
    elif concept in ("thumbs_up", "ok", "pick_up_motion"):
        if not words or words & {"grasp", "grab", "pick"}:
            plan = _lines("close_gripper()")
    elif concept == "release_motion":
        if not words or words & {"drop", "release", "let"}:
            plan = _lines("open_gripper()")
    elif concept == "thumbs_down":
        if not words:
            plan = _lines("say('Sorry. How should I correct it?')")
    elif concept == "open_palm_out":
        if not words or "stop" in words:
            plan = _lines("stop_motion()")
    elif concept == "circling_horizontal":
        if "turn" in words:
            plan = _lines("turn_around()")
    return plan or NOT_UNDERSTOOD


def rule_plan(i: Instruction, gesture=None) -> str:
    """Plan from an instruction; ``gesture`` overrides ``i.gesture`` when given.

    ``gesture`` may be an observation, a representation, a class or its text.
    """
    g = i.gesture if gesture is None else gesture
    if isinstance(g, GestureObservation):
        line = NO_GESTURE if g.gesture_class is GestureClass.UNKNOWN else g.gesture_class.label
    elif isinstance(g, GestureClass):
        line = g.label
    elif isinstance(g, (Label, Description, Numeric)) or g is None:
        line = gesture_text(g)
    else:
        line = str(g)
    return rule_plan_text(i.speech_text, line)
