"""Scalar-field expression language used by scene files.

Grammar (lowest to highest binding)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' integer)*
    atom   := number | name | name '(' expr ')' | '(' expr ')'

``^`` takes an integer exponent (optionally signed or parenthesised).
Names resolve to coordinates, then parameters, then the constant ``pi``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")
CONSTANTS = {"pi": math.pi}


class ExprError(ValueError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int, src: str = ""):
        self.offset = offset
        self.src = src
        super().__init__(f"{message} at offset {offset}")


class UnknownIdentifierError(ExprError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at offset {offset}")


class ArityError(ExprError):
    def __init__(self, name: str, got: int, offset: int):
        self.name = name
        self.got = got
        self.offset = offset
        super().__init__(f"{name}() takes 1 argument, got {got} (offset {offset})")


class ExprDomainError(ExprError):
    def __init__(self, message: str, subexpr: str):
        self.subexpr = subexpr
        super().__init__(f"{message} in {subexpr!r}")


# ---------- AST ----------

@dataclass(frozen=True)
class Node:
    span: tuple = field(compare=False)


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Coord(Node):
    name: str
    index: int


@dataclass(frozen=True)
class Param(Node):
    name: str


@dataclass(frozen=True)
class Neg(Node):
    arg: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: int


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node


@dataclass(frozen=True)
class Expr:
    """A parsed expression together with its source and symbol tables."""

    src: str
    root: Node
    coords: tuple
    params: tuple

    def text(self, node: Node) -> str:
        return self.src[node.span[0]:node.span[1]]

    def __str__(self) -> str:
        return self.src

    @property
    def is_constant(self) -> bool:
        return not _uses_coords(self.root)


def _uses_coords(node: Node) -> bool:
    if isinstance(node, Coord):
        return True
    if isinstance(node, (Neg,)):
        return _uses_coords(node.arg)
    if isinstance(node, BinOp):
        return _uses_coords(node.left) or _uses_coords(node.right)
    if isinstance(node, Pow):
        return _uses_coords(node.base)
    if isinstance(node, Call):
        return _uses_coords(node.arg)
    return False


# ---------- tokenizer ----------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


@dataclass
class _Tok:
    kind: str
    text: str
    start: int
    end: int


def tokenize(src: str) -> list:
    toks = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            bad = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[bad]!r}", bad, src)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), m.start(kind), m.end(kind)))
        pos = m.end()
    toks.append(_Tok("end", "", len(src), len(src)))
    return toks


class _Parser:
    def __init__(self, src: str, coords: Sequence[str], params: Sequence[str]):
        self.src = src
        self.toks = tokenize(src)
        self.i = 0
        self.coords = {c: k for k, c in enumerate(coords)}
        self.params = set(params)

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Tok:
        if self.tok.text != text or self.tok.kind != "op":
            self.fail(f"expected {text!r}")
        return self.advance()

    def fail(self, message: str):
        t = self.tok
        if t.kind == "end":
            raise ExprSyntaxError("unexpected end of input", t.start, self.src)
        raise ExprSyntaxError(f"{message}, found {t.text!r}", t.start, self.src)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            self.fail("unexpected token")
        return node

    def expr(self) -> Node:
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            right = self.term()
            left = BinOp((left.span[0], right.span[1]), op, left, right)
        return left

    def term(self) -> Node:
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            right = self.unary()
            left = BinOp((left.span[0], right.span[1]), op, left, right)
        return left

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text in "+-":
            t = self.advance()
            arg = self.unary()
            if t.text == "+":
                return arg
            return Neg((t.start, arg.span[1]), arg)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        while self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            k, end = self.integer()
            base = Pow((base.span[0], end), base, k)
        return base

    def integer(self) -> tuple:
        sign = 1
        t = self.tok
        if t.kind == "op" and t.text == "(":
            self.advance()
            k, _ = self.integer()
            close = self.expect(")")
            return k, close.end
        if t.kind == "op" and t.text in "+-":
            sign = -1 if t.text == "-" else 1
            self.advance()
            t = self.tok
        if t.kind != "num":
            self.fail("exponent must be an integer literal")
        value = float(t.text)
        if not value.is_integer():
            raise ExprSyntaxError("exponent must be an integer literal", t.start, self.src)
        self.advance()
        return sign * int(value), t.end

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num((t.start, t.end), float(t.text))
        if t.kind == "name":
            self.advance()
            if self.tok.kind == "op" and self.tok.text == "(":
                return self.call(t)
            if t.text in FUNCTIONS:
                raise ExprSyntaxError(f"function {t.text!r} needs an argument list", t.end, self.src)
            if t.text in self.coords:
                return Coord((t.start, t.end), t.text, self.coords[t.text])
            if t.text in self.params:
                return Param((t.start, t.end), t.text)
            if t.text in CONSTANTS:
                return Num((t.start, t.end), CONSTANTS[t.text])
            raise UnknownIdentifierError(t.text, t.start)
        if t.kind == "op" and t.text == "(":
            self.advance()
            inner = self.expr()
            close = self.expect(")")
            # keep the parenthesised span so error messages quote what the user wrote
            return _respan(inner, (t.start, close.end))
        self.fail("expected a number, name or '('")

    def call(self, name: _Tok) -> Node:
        if name.text not in FUNCTIONS:
            raise UnknownIdentifierError(name.text, name.start)
        self.expect("(")
        if self.tok.kind == "op" and self.tok.text == ")":
            raise ArityError(name.text, 0, name.start)
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        close = self.expect(")")
        if len(args) != 1:
            raise ArityError(name.text, len(args), name.start)
        return Call((name.start, close.end), name.text, args[0])


def _respan(node: Node, span: tuple) -> Node:
    return type(node)(span, *[getattr(node, f) for f in node.__dataclass_fields__ if f != "span"])


def parse(src: str, coords: Sequence[str] = (), params: Sequence[str] = ()) -> Expr:
    """Parse ``src`` against the given coordinate and parameter names."""
    if not isinstance(src, str):
        src = repr(src)
    if src.strip() == "":
        raise ExprSyntaxError("empty expression", 0, src)
    clash = set(coords) & set(params)
    if clash:
        raise ExprError(f"names used both as coordinate and parameter: {sorted(clash)}")
    root = _Parser(src, coords, params).parse()
    return Expr(src, root, tuple(coords), tuple(params))
