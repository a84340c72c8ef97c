from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gesture_grounding.errors import ParseError
from gesture_grounding.planner.catalog import BASE_CATALOG, EXTENDED_CATALOG
from gesture_grounding.planner.dsl import (ArgumentKindViolation, ArityViolation, Assign, Call, Comment,
                                           ExprStatement, Identifier, NumberLit, PolicyProgram, StringLit,
                                           UnknownName, UseBeforeBind, VoidAssignment, argument_kinds, call_target,
                                           parse_policy, pretty_print, validate_policy)

WATER_JUG = """\
# Instruction 0: pick up the water jug
# Gesture: index finger extends out while others curl inward
water_jug_pos = detect_referred_obj_pos('water jug')
pick_up_obj_at_pos(water_jug_pos)

# Instruction 1: hand it to me
# Gesture: an open palm faces upward
target_pos = detect_hand_center_pos()
move_gripper_to_pos(target_pos)
open_gripper()
"""

FIST = """\
# Instruction 0: move over here
# Gesture: fist
target_pos = detect_hand_center_pos()
move_gripper_to_pos(target_pos)
"""


class TestListings:
    @pytest.mark.parametrize("text", [WATER_JUG, FIST])
    def test_parse_validate_round_trip(self, text):
        p = parse_policy(text)
        assert validate_policy(p) == []
        assert pretty_print(p) == text
        assert parse_policy(pretty_print(p)) == p

    def test_water_jug_tree(self):
        p = parse_policy(WATER_JUG)
        assert p.statements[2] == Assign("water_jug_pos", Call("detect_referred_obj_pos", (StringLit("water jug"),)))
        assert p.statements[3] == ExprStatement(Call("pick_up_obj_at_pos", (Identifier("water_jug_pos"),)))
        assert [c.name for _, c in p.calls()] == ["detect_referred_obj_pos", "pick_up_obj_at_pos",
                                                 "detect_hand_center_pos", "move_gripper_to_pos", "open_gripper"]
        assert p.line_of(6) == 8

    def test_extra_position_argument(self):
        bad = "drawer_pos = detect_referred_obj_pos('drawer')\nopen_drawer_at_pos(drawer_pos, drawer_pos)\n"
        vs = validate_policy(parse_policy(bad))
        assert len(vs) == 1
        assert isinstance(vs[0], ArityViolation) and vs[0].code == "ARITY" and vs[0].line == 2


class TestValidation:
    def test_use_before_bind(self):
        vs = validate_policy(parse_policy("move_gripper_to_pos(p)\np = detect_hand_center_pos()\n"))
        assert [type(v) for v in vs] == [UseBeforeBind]
        assert vs[0].line == 1

    def test_void_assignment(self):
        vs = validate_policy(parse_policy("x = open_gripper()\n"))
        assert [type(v) for v in vs] == [VoidAssignment]

    def test_unknown_function(self):
        vs = validate_policy(parse_policy("fly_away()\n"))
        assert [type(v) for v in vs] == [UnknownName]

    def test_argument_kind(self):
        vs = validate_policy(parse_policy("d = detect_referred_direction()\nmove_gripper_to_pos(d)\n"))
        assert [type(v) for v in vs] == [ArgumentKindViolation]
        assert validate_policy(parse_policy("say(3)\n"))[0].code == "ARGUMENT_KIND"

    def test_extended_catalog(self):
        p = parse_policy("stop_motion()\n")
        assert validate_policy(p, EXTENDED_CATALOG) == []
        assert [v.code for v in validate_policy(p, BASE_CATALOG)] == ["UNKNOWN_FUNCTION"]

    def test_scoring_helpers(self):
        p = parse_policy(WATER_JUG)
        pick = p.statements[3].call
        assert argument_kinds(p, pick) == ["referred_object"]
        assert call_target(p, pick) == "water jug"


class TestSyntaxErrors:
    def test_unclosed_call(self):
        with pytest.raises(ParseError) as e:
            parse_policy("pick_up(")
        assert (e.value.line, e.value.column) == (1, 8)

    @pytest.mark.parametrize("text,line,col", [
        ("x = 'abc\n", 1, 5),
        ("ok()\n= 3\n", 2, 1),
        ("a = b c\n", 1, 7),
        ("f(1,)\n", 1, 5),
        ("say('a\\q')\n", 1, 7),
    ])
    def test_positions(self, text, line, col):
        with pytest.raises(ParseError) as e:
            parse_policy(text)
        assert (e.value.line, e.value.column) == (line, col)

    def test_trailing_comment_dropped(self):
        assert parse_policy("open_gripper()  # now\n") == parse_policy("open_gripper()\n")

    def test_empty_program(self):
        assert parse_policy("") == PolicyProgram(())
        assert pretty_print(PolicyProgram(())) == ""


# --- random programs ---------------------------------------------------------------

_idents = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True)
_text = st.text(st.characters(blacklist_categories=("Cc", "Cs", "Zl", "Zp")), max_size=12)
_numbers = st.one_of(st.integers(-10**6, 10**6), st.floats(allow_nan=False, allow_infinity=False))
_leaves = st.one_of(_text.map(StringLit), _numbers.map(NumberLit), _idents.map(Identifier))
_exprs = st.recursive(_leaves, lambda inner: st.builds(Call, _idents, st.lists(inner, max_size=3).map(tuple)),
                      max_leaves=6)
_calls = st.builds(Call, _idents, st.lists(_exprs, max_size=3).map(tuple))
_statements = st.one_of(
    _text.map(lambda s: Comment(" ".join(s.split()))),
    st.builds(Assign, _idents, _exprs),
    _calls.map(ExprStatement),
)


@given(st.lists(_statements, max_size=8).map(lambda xs: PolicyProgram(tuple(xs))))
def test_pretty_print_round_trip(p):
    text = pretty_print(p)
    assert parse_policy(text) == p
    assert pretty_print(parse_policy(text)) == text
