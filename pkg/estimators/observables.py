"""
Observables
A small recursive descent parser for phase space symbols a(q, p) and the
evaluator for the resulting expression trees
"""
import math
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from phasespace.errors import ObservableDimensionError, ObservableSyntaxError

FUNCTIONS = ("sin", "cos", "exp")
_VARIABLE = re.compile(r"^([qp])(?:_?(\d+))?$")


class Token:
    """Lexical token with its source offset"""

    NUMBER = "number"
    NAME = "name"
    OP = "op"
    LPAREN = "("
    RPAREN = ")"
    COMMA = ","
    EOF = "eof"

    def __init__(self, typ: str, text: str, pos: int):
        self.typ = typ
        self.text = text
        self.pos = pos

    def __repr__(self):
        return f"({self.typ}, {self.text!r}, {self.pos})"


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^])|(?P<lparen>\()|(?P<rparen>\))|(?P<comma>,))"
)


def tokenize(src: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(src, pos)
        if not m or m.end() == pos:
            offset = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ObservableSyntaxError(f"unexpected character {src[offset]!r}", offset)
        start = m.start(m.lastgroup)
        kind = m.lastgroup
        text = m.group(kind)
        if kind == "number":
            tokens.append(Token(Token.NUMBER, text, start))
        elif kind == "name":
            tokens.append(Token(Token.NAME, text, start))
        elif kind == "op":
            tokens.append(Token(Token.OP, "^" if text == "**" else text, start))
        elif kind == "lparen":
            tokens.append(Token(Token.LPAREN, text, start))
        elif kind == "rparen":
            tokens.append(Token(Token.RPAREN, text, start))
        else:
            tokens.append(Token(Token.COMMA, text, start))
        pos = m.end()
    tokens.append(Token(Token.EOF, "", len(src)))
    return tokens


# ---------------------------------------------------------------------------
# Expression tree


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # "q" or "p"
    axis: int  # 0-based


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Pow, Func]

_FOLD_OPS = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
}


def _fold(node: Node, pos: Optional[int] = None) -> Node:
    """Constant folding on a freshly built node; pos locates the operator in errors"""
    try:
        folded = _fold_constants(node)
    except OverflowError:
        folded = Const(math.inf)
    if isinstance(folded, Const) and not math.isfinite(folded.value):
        raise ObservableSyntaxError("constant overflows double precision", pos)
    return folded


def _fold_constants(node: Node) -> Node:
    if isinstance(node, Neg) and isinstance(node.operand, Const):
        return Const(-node.operand.value)
    if isinstance(node, BinOp) and isinstance(node.left, Const) and isinstance(node.right, Const):
        if node.op == "/" and node.right.value == 0:
            return node
        return Const(_FOLD_OPS[node.op](node.left.value, node.right.value))
    if isinstance(node, Pow) and isinstance(node.base, Const):
        if node.base.value == 0 and node.exponent < 0:
            return node
        return Const(node.base.value ** node.exponent)
    if isinstance(node, Func) and isinstance(node.arg, Const):
        try:
            return Const(getattr(math, node.name)(node.arg.value))
        except OverflowError:
            return node
    return node


class Parser:
    """
    Recursive descent parser

    expr  := term (('+'|'-') term)*
    term  := unary (('*'|'/') unary)*
    unary := ('-'|'+') unary | power
    power := atom ('^' unary)?
    atom  := number | variable | function '(' expr ')' | '(' expr ')'
    """

    def __init__(self, src: str, dim: int):
        self.src = src
        self.dim = dim
        self.tokens = tokenize(src)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _advance(self) -> Token:
        tok = self.tok
        self.i += 1
        return tok

    def _expect(self, typ: str) -> Token:
        if self.tok.typ != typ:
            self._fail(f"expected {typ!r}")
        return self._advance()

    def _fail(self, what: str):
        tok = self.tok
        found = "end of input" if tok.typ == Token.EOF else repr(tok.text)
        raise ObservableSyntaxError(f"{what}, found {found}", tok.pos)

    def parse(self) -> Node:
        if self.tok.typ == Token.EOF:
            raise ObservableSyntaxError("empty expression", 0)
        node = self.expr()
        if self.tok.typ != Token.EOF:
            self._fail("unexpected token")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.typ == Token.OP and self.tok.text in "+-":
            tok = self._advance()
            node = _fold(BinOp(tok.text, node, self.term()), tok.pos)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok.typ == Token.OP and self.tok.text in "*/":
            tok = self._advance()
            node = _fold(BinOp(tok.text, node, self.unary()), tok.pos)
        return node

    def unary(self) -> Node:
        if self.tok.typ == Token.OP and self.tok.text in "+-":
            op = self._advance().text
            operand = self.unary()
            return operand if op == "+" else _fold(Neg(operand))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.tok.typ == Token.OP and self.tok.text == "^":
            pos = self._advance().pos
            exponent = self.unary()
            if not isinstance(exponent, Const) or not float(exponent.value).is_integer():
                raise ObservableSyntaxError("exponent must be an integer constant", pos + 1)
            return _fold(Pow(base, int(exponent.value)), pos)
        return base

    def atom(self) -> Node:
        tok = self.tok
        if tok.typ == Token.NUMBER:
            self._advance()
            return _fold(Const(float(tok.text)), tok.pos)
        if tok.typ == Token.LPAREN:
            self._advance()
            node = self.expr()
            self._expect(Token.RPAREN)
            return node
        if tok.typ == Token.NAME:
            self._advance()
            if tok.text in FUNCTIONS:
                self._expect(Token.LPAREN)
                arg = self.expr()
                if self.tok.typ == Token.COMMA:
                    raise ObservableSyntaxError(f"{tok.text} takes exactly one argument", self.tok.pos)
                self._expect(Token.RPAREN)
                return _fold(Func(tok.text, arg))
            return self._variable(tok)
        self._fail("expected a number, variable, function or '('")

    def _variable(self, tok: Token) -> Var:
        m = _VARIABLE.match(tok.text)
        if not m:
            raise ObservableSyntaxError(f"unknown identifier {tok.text!r}", tok.pos)
        kind, index = m.group(1), m.group(2)
        if index is None:
            if self.dim != 1:
                raise ObservableDimensionError(f"bare {kind!r} needs an index when d = {self.dim}")
            return Var(kind, 0)
        axis = int(index) - 1
        if not 0 <= axis < self.dim:
            raise ObservableDimensionError(f"{tok.text!r} refers to axis {axis + 1}, but d = {self.dim}")
        return Var(kind, axis)


# ---------------------------------------------------------------------------
# Observable


def _degree(node: Node) -> Optional[int]:
    if isinstance(node, Const):
        return 0
    if isinstance(node, Var):
        return 1
    if isinstance(node, Neg):
        return _degree(node.operand)
    if isinstance(node, Pow):
        inner = _degree(node.base)
        if inner is None or node.exponent < 0:
            return None
        return inner * node.exponent
    if isinstance(node, BinOp):
        left, right = _degree(node.left), _degree(node.right)
        if left is None or right is None:
            return None
        if node.op in "+-":
            return max(left, right)
        if node.op == "*":
            return left + right
        return left if right == 0 else None
    return None


def _source(node: Node, dim: int) -> str:
    if isinstance(node, Const):
        text = repr(float(node.value))
        return f"({text})" if node.value < 0 else text
    if isinstance(node, Var):
        return node.kind if dim == 1 else f"{node.kind}{node.axis + 1}"
    if isinstance(node, Neg):
        return f"(-{_source(node.operand, dim)})"
    if isinstance(node, Pow):
        return f"({_source(node.base, dim)})^{node.exponent}"
    if isinstance(node, BinOp):
        return f"({_source(node.left, dim)} {node.op} {_source(node.right, dim)})"
    return f"{node.name}({_source(node.arg, dim)})"


def _evaluate(node: Node, env: Dict[Tuple[str, int], object], lib):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return env[(node.kind, node.axis)]
    if isinstance(node, Neg):
        return -_evaluate(node.operand, env, lib)
    if isinstance(node, Pow):
        return _evaluate(node.base, env, lib) ** node.exponent
    if isinstance(node, BinOp):
        return _FOLD_OPS[node.op](_evaluate(node.left, env, lib), _evaluate(node.right, env, lib))
    return getattr(lib, node.name)(_evaluate(node.arg, env, lib))


def _variables(node: Node, found: set) -> set:
    if isinstance(node, Var):
        found.add((node.kind, node.axis))
    for child in ("operand", "left", "right", "base", "arg"):
        sub = getattr(node, child, None)
        if sub is not None:
            _variables(sub, found)
    return found


Polynomial = Dict[Tuple[int, ...], float]


def _poly_mul(a: Polynomial, b: Polynomial) -> Polynomial:
    out: Polynomial = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0.0) + ca * cb
    return out


def _polynomial(node: Node, dim: int) -> Optional[Polynomial]:
    zero = (0,) * (2 * dim)
    if isinstance(node, Const):
        return {zero: node.value}
    if isinstance(node, Var):
        e = [0] * (2 * dim)
        e[node.axis + (dim if node.kind == "p" else 0)] = 1
        return {tuple(e): 1.0}
    if isinstance(node, Neg):
        inner = _polynomial(node.operand, dim)
        return None if inner is None else {e: -c for e, c in inner.items()}
    if isinstance(node, Pow):
        base = _polynomial(node.base, dim)
        if base is None or node.exponent < 0:
            return None
        out = {zero: 1.0}
        for _ in range(node.exponent):
            out = _poly_mul(out, base)
        return out
    if isinstance(node, BinOp):
        left, right = _polynomial(node.left, dim), _polynomial(node.right, dim)
        if left is None or right is None:
            return None
        if node.op in "+-":
            sign = 1.0 if node.op == "+" else -1.0
            out = dict(left)
            for e, c in right.items():
                out[e] = out.get(e, 0.0) + sign * c
            return out
        if node.op == "*":
            return _poly_mul(left, right)
        if set(right) == {zero}:
            return {e: c / right[zero] for e, c in left.items()}
        return None
    return None


class Observable:
    """
    Parsed phase space symbol a(q, p)

    Variables are q, p for d = 1 and q1..qd, p1..pd (or q_1, ...) otherwise.
    """

    def __init__(self, tree: Node, dim: int, source: str = ""):
        self.tree = tree
        self.dim = dim
        self.source = source or _source(tree, dim)

    def __repr__(self):
        return f"Observable({self.to_source()!r}, d={self.dim})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Observable) and self.tree == other.tree and self.dim == other.dim

    def __hash__(self) -> int:
        return hash((self.tree, self.dim))

    def degree(self) -> Optional[int]:
        """Polynomial degree, or None for non-polynomial symbols"""
        return _degree(self.tree)

    def is_polynomial(self) -> bool:
        return self.degree() is not None

    def to_source(self) -> str:
        return _source(self.tree, self.dim)

    def variables(self) -> List[Tuple[str, int]]:
        return sorted(_variables(self.tree, set()))

    def polynomial(self) -> Optional[Polynomial]:
        """Monomial exponents over (q_1..q_d, p_1..p_d) -> coefficient"""
        return _polynomial(self.tree, self.dim)

    def __call__(self, z) -> np.ndarray:
        return self.evaluate(z)

    def evaluate(self, z) -> np.ndarray:
        """
        Evaluate on phase points

        Args:
            z: Array of shape (..., 2d)

        Returns:
            Real array of shape (...) (a float for one point)
        """
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != 2 * self.dim:
            raise ObservableDimensionError(f"points have {z.shape[-1]} coordinates, expected {2 * self.dim}")
        env = {("q", j): z[..., j] for j in range(self.dim)}
        env.update({("p", j): z[..., self.dim + j] for j in range(self.dim)})
        with np.errstate(all="ignore"):
            out = np.asarray(_evaluate(self.tree, env, np), dtype=float) * np.ones(z.shape[:-1])
        return out if out.ndim else float(out)

    def evaluate_with(self, coords: Dict[Tuple[str, int], object], lib):
        """Evaluate with scalar coordinates and a math library (numpy, math or mpmath)"""
        return _evaluate(self.tree, coords, lib)


def parse_observable(src: str, d: int = 1) -> Observable:
    """
    Parse an observable

    Args:
        src: Expression such as "q^4 + 1" or "exp(sin(q))"
        d: Configuration space dimension

    Returns:
        Observable with a constant-folded expression tree
    """
    if d < 1:
        raise ObservableDimensionError(f"dimension must be positive, got {d}")
    if src is None or not src.strip():
        raise ObservableSyntaxError("empty expression", 0)
    return Observable(Parser(src, d).parse(), d, src)
