"""Smooth-expression DSL: lexer, recursive-descent parser, evaluators.

Grammar::

    expr  := term (('+'|'-') term)*
    term  := unary (('*'|'/') unary)*
    unary := '-' unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'

``^`` is right associative and binds tighter than unary minus, so ``-x^2`` is
``-(x^2)`` and ``2^3^2`` is ``2^(3^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Union

from .jets import Jet, JetDomainError, jet_elementary

__all__ = [
    "ExprError",
    "LexError",
    "ParseError",
    "EvalError",
    "Token",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "tokenize",
    "parse",
    "parse_text",
    "compile_expr",
    "pretty",
    "free_names",
    "eval_jet",
    "eval_scalar",
    "FUNCTIONS",
    "CONSTANTS",
]

FUNCTIONS = {"ln": 1, "exp": 1, "sqrt": 1, "sin": 1, "cos": 1, "tan": 1}
CONSTANTS = {"pi": math.pi, "e": math.e}
MAX_DEPTH = 100  # nesting of parentheses, unary minus and exponents
MAX_TREE_DEPTH = 400  # evaluation and printing recurse once per level


class ExprError(ValueError):
    """Any DSL failure; always carries the byte offset it refers to."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.message = message
        self.offset = offset


class LexError(ExprError):
    pass


class ParseError(ExprError):
    pass


class EvalError(ExprError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # number | identifier | operator | paren | comma
    lexeme: str
    offset: int


_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<identifier>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<operator>[-+*/^])"
    r"|(?P<paren>[()])"
    r"|(?P<comma>,)"
)


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"illegal character {source[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    return tokens


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    offset: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple
    offset: int = field(default=0, compare=False)


Node = Union[Const, Var, Neg, BinOp, Call]


class _Parser:
    def __init__(self, tokens: list[Token], source_len: int):
        self.tokens = tokens
        self.pos = 0
        self.depth = 0
        self.end = source_len if not tokens else max(source_len, tokens[-1].offset + len(tokens[-1].lexeme))

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def here(self) -> int:
        t = self.peek()
        return t.offset if t is not None else self.end

    def take(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def at(self, kind: str, lexeme: str | None = None) -> bool:
        t = self.peek()
        return t is not None and t.kind == kind and (lexeme is None or t.lexeme == lexeme)

    def expect_paren(self, lexeme: str, opened_at: int) -> None:
        if not self.at("paren", lexeme):
            t = self.peek()
            if t is None:
                raise ParseError(f"unbalanced parentheses: '(' at {opened_at} never closed", self.end)
            raise ParseError(f"expected {lexeme!r}, found {t.lexeme!r}", t.offset)
        self.take()

    def enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise ParseError("expression nested too deeply", self.here())

    def expr(self) -> Node:
        self.enter()
        node = self.term()
        while self.at("operator", "+") or self.at("operator", "-"):
            t = self.take()
            node = BinOp(t.lexeme, node, self.term(), t.offset)
        self.depth -= 1
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.at("operator", "*") or self.at("operator", "/"):
            t = self.take()
            node = BinOp(t.lexeme, node, self.unary(), t.offset)
        return node

    def unary(self) -> Node:
        if self.at("operator", "-"):
            t = self.take()
            self.enter()
            node = Neg(self.unary(), t.offset)
            self.depth -= 1
            return node
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.at("operator", "^"):
            t = self.take()
            self.enter()
            node = BinOp("^", base, self.unary(), t.offset)
            self.depth -= 1
            return node
        return base

    def atom(self) -> Node:
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of input", self.end)
        if t.kind == "number":
            self.take()
            return Const(float(t.lexeme), t.offset)
        if t.kind == "identifier":
            self.take()
            if self.at("paren", "("):
                return self.call(t)
            return Var(t.lexeme, t.offset)
        if t.kind == "paren" and t.lexeme == "(":
            self.take()
            inner = self.expr()
            self.expect_paren(")", t.offset)
            return inner
        if t.kind == "paren":
            raise ParseError("unbalanced parentheses: unexpected ')'", t.offset)
        raise ParseError(f"unexpected token {t.lexeme!r}", t.offset)

    def call(self, name: Token) -> Node:
        if name.lexeme not in FUNCTIONS:
            raise ParseError(f"unknown function {name.lexeme!r}", name.offset)
        opened = self.take().offset
        args: list[Node] = []
        if self.at("paren", ")"):
            self.take()
        else:
            args.append(self.expr())
            while self.at("comma"):
                self.take()
                args.append(self.expr())
            self.expect_paren(")", opened)
        want = FUNCTIONS[name.lexeme]
        if len(args) != want:
            raise ParseError(
                f"{name.lexeme} takes {want} argument(s), got {len(args)}", name.offset
            )
        return Call(name.lexeme, tuple(args), name.offset)


def parse(tokens: list[Token], source_len: int | None = None) -> Node:
    if source_len is None:
        source_len = tokens[-1].offset + len(tokens[-1].lexeme) if tokens else 0
    p = _Parser(list(tokens), source_len)
    node = p.expr()
    t = p.peek()
    if t is not None:
        if t.kind == "paren" and t.lexeme == ")":
            raise ParseError("unbalanced parentheses: unexpected ')'", t.offset)
        raise ParseError(f"unexpected token {t.lexeme!r}", t.offset)
    _check_tree_depth(node)
    return node


def _children(node: Node) -> tuple:
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Call):
        return node.args
    return ()


def _check_tree_depth(root: Node) -> None:
    stack = [(root, 1)]
    while stack:
        node, d = stack.pop()
        if d > MAX_TREE_DEPTH:
            raise ParseError(f"expression tree deeper than {MAX_TREE_DEPTH} levels", node.offset)
        stack.extend((c, d + 1) for c in _children(node))


def parse_text(source: str) -> Node:
    return parse(tokenize(source), len(source))


@lru_cache(maxsize=4096)
def compile_expr(source: str) -> Node:
    """Parse with memoisation; ASTs are immutable so sharing is safe."""
    return parse_text(source)


# ---------------------------------------------------------------------------
# printing and inspection
# ---------------------------------------------------------------------------


def pretty(node: Node) -> str:
    """Fully parenthesised rendering that re-parses to an identical tree."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{pretty(node.operand)})"
    if isinstance(node, BinOp):
        return f"({pretty(node.left)}{node.op}{pretty(node.right)})"
    if isinstance(node, Call):
        return f"{node.fn}(" + ",".join(pretty(a) for a in node.args) + ")"
    raise TypeError(f"not an AST node: {node!r}")


def free_names(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Const):
        return set()
    if isinstance(node, Neg):
        return free_names(node.operand)
    if isinstance(node, BinOp):
        return free_names(node.left) | free_names(node.right)
    return set().union(*(free_names(a) for a in node.args))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _lookup(node: Var, bindings: Mapping, params: Mapping):
    if node.name in bindings:
        return bindings[node.name]
    if params and node.name in params:
        return float(params[node.name])
    if node.name in CONSTANTS:
        return CONSTANTS[node.name]
    raise EvalError(f"unbound variable {node.name!r}", node.offset)


def _scalar_fn(fn: str, v: float, offset: int) -> float:
    if fn in ("ln", "sqrt") and not v > 0:
        raise EvalError(f"{fn}: argument {v!r} outside domain", offset)
    if fn == "tan" and abs(math.cos(v)) < 1e-15:
        raise EvalError(f"tan: argument {v!r} outside domain", offset)
    try:
        return {"ln": math.log, "exp": math.exp, "sqrt": math.sqrt,
                "sin": math.sin, "cos": math.cos, "tan": math.tan}[fn](v)
    except OverflowError:
        raise EvalError(f"{fn}: overflow at {v!r}", offset) from None


def _scalar_pow(a: float, b: float, offset: int) -> float:
    if float(b).is_integer():
        if a == 0 and b < 0:
            raise EvalError("division by zero in power", offset)
        try:
            return float(a) ** int(b)
        except OverflowError:
            raise EvalError("overflow in power", offset) from None
    if not a > 0:
        raise EvalError(f"power: base {a!r} must be positive for exponent {b!r}", offset)
    try:
        return math.exp(b * math.log(a))
    except OverflowError:
        raise EvalError("overflow in power", offset) from None


def _eval(node: Node, bindings: Mapping, params: Mapping):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return _lookup(node, bindings, params)
    if isinstance(node, Neg):
        return -_eval(node.operand, bindings, params)
    if isinstance(node, Call):
        arg = _eval(node.args[0], bindings, params)
        if isinstance(arg, Jet):
            try:
                return jet_elementary(node.fn, arg)
            except JetDomainError as exc:
                raise EvalError(f"{node.fn}: argument {exc.value!r} outside domain", node.offset) from None
        return _scalar_fn(node.fn, float(arg), node.offset)
    a = _eval(node.left, bindings, params)
    b = _eval(node.right, bindings, params)
    op = node.op
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        bv = b.value if jb else b
        if bv == 0:
            raise EvalError("division by zero", node.offset)
        return a / b
    # power
    try:
        if jb:
            if not (a.value if ja else a) > 0:
                raise EvalError("power with variable exponent needs a positive base", node.offset)
            base = a if ja else a + 0.0 * b
            return jet_elementary("exp", b * jet_elementary("ln", base))
        if ja:
            if float(b).is_integer():
                if int(b) < 0 and a.value == 0:
                    raise EvalError("division by zero in power", node.offset)
                return a ** int(b)
            return jet_elementary("pow_real", a, float(b))
        return _scalar_pow(float(a), float(b), node.offset)
    except JetDomainError as exc:
        raise EvalError(f"power: base {exc.value!r} outside domain", node.offset) from None


def eval_jet(ast: Node, bindings: Mapping[str, Jet], params: Mapping[str, float] | None = None) -> Jet:
    """Evaluate ``ast`` with jet-valued coordinates; constant results are lifted."""
    jets = [v for v in bindings.values() if isinstance(v, Jet)]
    out = _eval(ast, bindings, params or {})
    if isinstance(out, Jet):
        return out
    if not jets:
        raise EvalError("eval_jet needs at least one jet binding", 0)
    ref = jets[0]
    return Jet.constant(float(out), ref.nvars, ref.order)


def eval_scalar(ast: Node, values: Mapping[str, float], params: Mapping[str, float] | None = None) -> float:
    return float(_eval(ast, {k: float(v) for k, v in values.items()}, params or {}))
