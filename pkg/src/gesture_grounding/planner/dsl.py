"""The policy language: one statement per line, calls, assignments, comments.

    program   := (comment | assign | call-stmt | blank)*
    assign    := IDENT "=" expr
    call-stmt := call
    expr      := STRING | NUMBER | IDENT | call
    call      := IDENT "(" [expr ("," expr)*] ")"

A ``#`` outside a string starts a comment. Whole-line comments are kept in
the tree; trailing comments after a statement are dropped.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from ..errors import ParseError
from .catalog import ARGUMENT_KIND, BASE_CATALOG, Catalog, Kind

# --- syntax tree ----------------------------------------------------------------


@dataclass(frozen=True)
class StringLit:
    value: str


@dataclass(frozen=True)
class NumberLit:
    value: float | int


@dataclass(frozen=True)
class Identifier:
    name: str


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...] = ()


Expr = Union[StringLit, NumberLit, Identifier, Call]


@dataclass(frozen=True)
class Comment:
    text: str


@dataclass(frozen=True)
class Assign:
    name: str
    value: Expr


@dataclass(frozen=True)
class ExprStatement:
    call: Call


Statement = Union[Comment, Assign, ExprStatement]


@dataclass(frozen=True)
class PolicyProgram:
    statements: tuple[Statement, ...]
    lines: tuple[int, ...] = ()  # source line of each statement; not part of equality

    def __eq__(self, other):
        if not isinstance(other, PolicyProgram):
            return NotImplemented
        return self.statements == other.statements

    def __hash__(self):
        return hash(self.statements)

    def line_of(self, index: int) -> int:
        return self.lines[index] if index < len(self.lines) else index + 1

    def calls(self) -> Iterator[tuple[int, Call]]:
        """Every call in execution order (arguments before the call that uses them)."""
        for idx, st in enumerate(self.statements):
            if isinstance(st, Assign):
                yield from ((idx, c) for c in _walk_calls(st.value))
            elif isinstance(st, ExprStatement):
                yield from ((idx, c) for c in _walk_calls(st.call))


def _walk_calls(e: Expr) -> Iterator[Call]:
    if isinstance(e, Call):
        for a in e.args:
            yield from _walk_calls(a)
        yield e


# --- lexer --------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<number>-?(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>'(?:[^'\\\n]|\\.)*'|"(?:[^"\\\n]|\\.)*")
  | (?P<punct>[()=,])
  | (?P<comment>\#.*)
""", re.VERBOSE)

_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", "'": "'", '"': '"'}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    col: int  # 1-based


def _unquote(s: str, line: int, col: int) -> str:
    out = []
    i = 1
    while i < len(s) - 1:
        ch = s[i]
        if ch == "\\":
            nxt = s[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError(f"unknown escape \\{nxt}", line, col + i)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _lex(text: str, line: int) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            ch = text[pos]
            what = "unterminated string" if ch in "'\"" else f"unexpected character {ch!r}"
            raise ParseError(what, line, pos + 1)
        kind = m.lastgroup
        if kind == "comment":
            break
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), pos + 1))
        pos = m.end()
    return toks


# --- parser ------------------------------------------------------------------


class _LineParser:
    def __init__(self, toks: list[_Tok], line: int, end_col: int):
        self.toks = toks
        self.i = 0
        self.line = line
        self.end_col = end_col

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> _Tok:
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of line", self.line, self.end_col)
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if t is None or t.text != text:
            col = t.col if t else self.end_col
            found = repr(t.text) if t else "end of line"
            raise ParseError(f"expected {text!r}, found {found}", self.line, col)
        self.i += 1
        return t

    def expr(self) -> Expr:
        t = self.take()
        if t.kind == "string":
            return StringLit(_unquote(t.text, self.line, t.col))
        if t.kind == "number":
            is_int = re.fullmatch(r"-?\d+", t.text) is not None
            return NumberLit(int(t.text) if is_int else float(t.text))
        if t.kind == "ident":
            nxt = self.peek()
            if nxt is not None and nxt.text == "(":
                return self.call_after(t)
            return Identifier(t.text)
        raise ParseError(f"expected an expression, found {t.text!r}", self.line, t.col)

    def call_after(self, name: _Tok) -> Call:
        opening = self.expect("(")
        args = []
        if self.peek() is not None and self.peek().text == ")":
            self.i += 1
            return Call(name.text, ())
        while True:
            if self.peek() is None:
                raise ParseError("unclosed '('", self.line, opening.col)
            args.append(self.expr())
            t = self.peek()
            if t is None:
                raise ParseError("unclosed '('", self.line, opening.col)
            if t.text == ")":
                self.i += 1
                return Call(name.text, tuple(args))
            if t.text != ",":
                raise ParseError(f"expected ',' or ')', found {t.text!r}", self.line, t.col)
            self.i += 1

    def statement(self) -> Statement:
        first = self.take()
        if first.kind != "ident":
            raise ParseError(f"a statement must start with a name, found {first.text!r}", self.line, first.col)
        nxt = self.peek()
        if nxt is not None and nxt.text == "=":
            self.i += 1
            st: Statement = Assign(first.text, self.expr())
        elif nxt is not None and nxt.text == "(":
            st = ExprStatement(self.call_after(first))
        else:
            col = nxt.col if nxt else self.end_col
            raise ParseError("expected '=' or '(' after a name", self.line, col)
        extra = self.peek()
        if extra is not None:
            raise ParseError(f"unexpected {extra.text!r} after statement", self.line, extra.col)
        return st


def parse_policy(text: str) -> PolicyProgram:
    statements: list[Statement] = []
    lines: list[int] = []
    for n, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            statements.append(Comment(stripped[1:].strip()))
            lines.append(n)
            continue
        toks = _lex(raw, n)
        if not toks:
            continue  # whitespace followed by a trailing comment only
        statements.append(_LineParser(toks, n, len(raw.rstrip()) + 1).statement())
        lines.append(n)
    return PolicyProgram(tuple(statements), tuple(lines))


# --- pretty printer -------------------------------------------------------------


def _quote(s: str) -> str:
    body = s.replace("\\", "\\\\").replace("'", "\\'").replace("\n", "\\n").replace("\t", "\\t")
    return f"'{body}'"


def format_expr(e: Expr) -> str:
    if isinstance(e, StringLit):
        return _quote(e.value)
    if isinstance(e, NumberLit):
        return repr(e.value)
    if isinstance(e, Identifier):
        return e.name
    return f"{e.name}({', '.join(format_expr(a) for a in e.args)})"


def format_statement(st: Statement) -> str:
    if isinstance(st, Comment):
        return f"# {st.text}" if st.text else "#"
    if isinstance(st, Assign):
        return f"{st.name} = {format_expr(st.value)}"
    return format_expr(st.call)


def pretty_print(p: PolicyProgram) -> str:
    """Canonical text; a blank line separates consecutive instruction blocks."""
    out: list[str] = []
    for st in p.statements:
        if out and isinstance(st, Comment) and st.text.startswith("Instruction "):
            out.append("")
        out.append(format_statement(st))
    return "\n".join(out) + ("\n" if out else "")


# --- validation -------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    line: int
    message: str
    code = "VIOLATION"


@dataclass(frozen=True)
class UnknownName(Violation):
    code = "UNKNOWN_FUNCTION"


@dataclass(frozen=True)
class ArityViolation(Violation):
    code = "ARITY"


@dataclass(frozen=True)
class UseBeforeBind(Violation):
    code = "USE_BEFORE_BIND"


@dataclass(frozen=True)
class VoidAssignment(Violation):
    code = "VOID_ASSIGNMENT"


@dataclass(frozen=True)
class ArgumentKindViolation(Violation):
    code = "ARGUMENT_KIND"


def _literal_kind(e: Expr) -> Kind | None:
    if isinstance(e, StringLit):
        return Kind.STRING
    if isinstance(e, NumberLit):
        return Kind.SCALAR
    return None


def validate_policy(p: PolicyProgram, catalog: Catalog = BASE_CATALOG) -> list[Violation]:
    """All violations in ``p``; an empty list means the program is accepted."""
    violations: list[Violation] = []
    bound: dict[str, Kind | None] = {}

    def check(e: Expr, line: int) -> Kind | None:
        if isinstance(e, Identifier):
            if e.name not in bound:
                violations.append(UseBeforeBind(line, f"{e.name!r} is used before it is assigned"))
                return None
            return bound[e.name]
        if not isinstance(e, Call):
            return _literal_kind(e)
        arg_kinds = [check(a, line) for a in e.args]
        spec = catalog.functions.get(e.name)
        if spec is None:
            violations.append(UnknownName(line, f"{e.name!r} is not a known function"))
            return None
        if len(e.args) != spec.arity:
            violations.append(ArityViolation(
                line, f"{e.name} takes {spec.arity} argument(s) but {len(e.args)} were given"))
            return spec.returns
        for (pname, want), got in zip(spec.params, arg_kinds):
            if got is not None and got is not want:
                violations.append(ArgumentKindViolation(
                    line, f"{e.name}: argument {pname!r} expects a {want.value}, got a {got.value}"))
        return spec.returns

    for idx, st in enumerate(p.statements):
        line = p.line_of(idx)
        if isinstance(st, Comment):
            continue
        if isinstance(st, Assign):
            kind = check(st.value, line)
            if isinstance(st.value, Call) and st.value.name in catalog and catalog[st.value.name].returns is None:
                violations.append(VoidAssignment(line, f"{st.value.name} returns nothing; cannot assign it"))
            bound[st.name] = kind
        else:
            check(st.call, line)
    return violations


# --- scoring helpers ---------------------------------------------------------------


def argument_kinds(p: PolicyProgram, call: Call) -> list[str]:
    """Describe each argument of ``call`` by where its value came from."""
    origin: dict[str, Expr] = {}
    for st in p.statements:
        if isinstance(st, Assign):
            origin[st.name] = st.value

    def describe(e: Expr, depth: int = 0) -> str:
        if isinstance(e, Identifier) and e.name in origin and depth < 32:
            return describe(origin[e.name], depth + 1)
        if isinstance(e, Call):
            return ARGUMENT_KIND.get(e.name, f"call:{e.name}")
        if isinstance(e, StringLit):
            return "string"
        if isinstance(e, NumberLit):
            return "literal"
        return "unbound"

    return [describe(a) for a in call.args]


def call_target(p: PolicyProgram, call: Call) -> str | None:
    """The label string fed to the object detector behind ``call``'s first argument."""
    origin = {st.name: st.value for st in p.statements if isinstance(st, Assign)}
    e = call.args[0] if call.args else None
    for _ in range(32):
        if isinstance(e, Identifier) and e.name in origin:
            e = origin[e.name]
        else:
            break
    if isinstance(e, Call) and e.args and isinstance(e.args[0], StringLit):
        return e.args[0].value
    return None
