"""Scalar expressions over chart coordinates ``x1 .. xn``.

Grammar (EBNF, whitespace insignificant)::

    expr    = term , { ("+" | "-") , term } ;
    term    = unary , { ("*" | "/") , unary } ;
    unary   = "-" , unary | power ;
    power   = atom , [ "^" , unary ] ;          (* right associative *)
    atom    = number | coord | const | call | "(" , expr , ")" ;
    number  = digits , [ "." , digits ] , [ ("e" | "E") , [ "+" | "-" ] , digits ]
            | "." , digits , [ exponent ] ;
    coord   = "x" , digits ;                    (* 1-based, <= dim *)
    const   = "pi" | "e" ;
    call    = func , "(" , expr , ")" ;
    func    = "sin" | "cos" | "tan" | "exp" | "log" | "sqrt"
            | "sinh" | "cosh" | "tanh" | "atan" ;

``^`` binds tighter than unary minus, so ``-x1^2`` is ``-(x1^2)`` while the
exponent itself may carry a sign (``x1^-2``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import jet as _jet
from .errors import EvalDomainError, ExprSyntaxError

__all__ = [
    "Node",
    "Const",
    "Coord",
    "Neg",
    "BinOp",
    "Call",
    "FUNCTIONS",
    "Jet2",
    "parse",
    "format_expr",
    "sexpr",
    "evaluate",
    "eval_jet",
    "eval_jet2",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "atan")
CONSTANTS = {"pi": math.pi, "e": math.e}


class Node:
    """Base class of the immutable expression tree."""

    pos: int

    def __str__(self):
        return format_expr(self)


@dataclass(frozen=True)
class Const(Node):
    value: float
    pos: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Coord(Node):
    index: int  # 1-based
    pos: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Neg(Node):
    operand: Node
    pos: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node
    pos: int = field(default=0, compare=False, repr=False)


@dataclass(frozen=True)
class Call(Node):
    name: str
    arg: Node
    pos: int = field(default=0, compare=False, repr=False)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[i]!r}", i)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), i))
        i = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dim: int):
        self.text = text
        self.dim = dim
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            _, op, pos = self.take()
            node = BinOp(op, node, self.term(), pos=pos)
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            _, op, pos = self.take()
            node = BinOp(op, node, self.unary(), pos=pos)
        return node

    def unary(self) -> Node:
        if self.peek()[1] == "-":
            _, _, pos = self.take()
            return Neg(self.unary(), pos=pos)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[1] == "^":
            _, _, pos = self.take()
            return BinOp("^", base, self.unary(), pos=pos)
        return base

    def atom(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text), pos=pos)
        if kind == "name":
            if re.fullmatch(r"x\d+", text):
                idx = int(text[1:])
                if not 1 <= idx <= self.dim:
                    raise ExprSyntaxError(
                        f"coordinate {text} out of range for dimension {self.dim}", pos
                    )
                return Coord(idx, pos=pos)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg, pos=pos)
            if text in CONSTANTS:
                return Const(CONSTANTS[text], pos=pos)
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", pos)


def parse(text: str, dim: int) -> Node:
    """Parse ``text`` into an expression tree over coordinates ``x1..x{dim}``."""
    if dim < 1:
        raise ValueError("dimension must be positive")
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, dim).parse()


# ------------------------------------------------------------- formatting

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_const(v: float) -> str:
    if v == math.pi:
        return "pi"
    if v == math.e:
        return "e"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _fmt(node: Node) -> tuple[str, int]:
    if isinstance(node, Const):
        return _fmt_const(node.value), 5
    if isinstance(node, Coord):
        return f"x{node.index}", 5
    if isinstance(node, Call):
        return f"{node.name}({_fmt(node.arg)[0]})", 5
    if isinstance(node, Neg):
        s, p = _fmt(node.operand)
        if p < _PREC["neg"]:
            s = f"({s})"
        return "-" + s, _PREC["neg"]
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        ls, lp = _fmt(node.left)
        rs, rp = _fmt(node.right)
        if node.op == "^":
            # base must be atomic; exponent may be a (signed) power chain
            if lp <= p:
                ls = f"({ls})"
            if rp < _PREC["neg"]:
                rs = f"({rs})"
            return f"{ls}^{rs}", p
        if lp < p:
            ls = f"({ls})"
        if rp <= p:
            rs = f"({rs})"
        return f"{ls} {node.op} {rs}", p
    raise TypeError(f"not an expression node: {node!r}")


def format_expr(node: Node) -> str:
    """Render with the minimal parentheses that reproduce the same tree."""
    return _fmt(node)[0]


def sexpr(node: Node) -> str:
    """Fully parenthesised prefix form, handy for comparing tree shapes."""
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Coord):
        return f"x{node.index}"
    if isinstance(node, Neg):
        return f"(neg {sexpr(node.operand)})"
    if isinstance(node, BinOp):
        return f"({node.op} {sexpr(node.left)} {sexpr(node.right)})"
    if isinstance(node, Call):
        return f"({node.name} {sexpr(node.arg)})"
    raise TypeError(node)


def max_coord(node: Node) -> int:
    if isinstance(node, Coord):
        return node.index
    if isinstance(node, Const):
        return 0
    if isinstance(node, Neg):
        return max_coord(node.operand)
    if isinstance(node, Call):
        return max_coord(node.arg)
    return max(max_coord(node.left), max_coord(node.right))


def _integer_exponent(node: Node):
    """Integer value of a coordinate-free exponent, else ``None``."""
    if max_coord(node) != 0:
        return None
    v = _eval_values(node, np.zeros((1, 0)))[0]
    if float(v).is_integer() and abs(v) <= 1 << 30:
        return int(v)
    return None


# ------------------------------------------------------------- evaluation

def _fn_derivs(name, u, order, node):
    """f(u), f'(u), f''(u) for the closed function set (lower orders may be None)."""
    bad = None
    if name in ("log",):
        bad = u <= 0
    elif name == "sqrt":
        bad = u < 0 if order == 0 else u <= 0
    elif name == "tan":
        bad = np.cos(u) == 0
    if bad is not None and np.any(bad):
        at = float(np.asarray(u)[bad].ravel()[0])
        raise EvalDomainError(f"{name} undefined at argument {at!r}", node)

    if name == "sin":
        f0, f1, f2 = np.sin(u), np.cos(u), -np.sin(u)
    elif name == "cos":
        f0, f1, f2 = np.cos(u), -np.sin(u), -np.cos(u)
    elif name == "tan":
        t = np.tan(u)
        f0, f1, f2 = t, 1 + t * t, 2 * t * (1 + t * t)
    elif name == "exp":
        f0 = np.exp(u)
        f1 = f2 = f0
    elif name == "log":
        f0, f1, f2 = np.log(u), 1 / u, -1 / (u * u)
    elif name == "sqrt":
        f0 = np.sqrt(u)
        f1 = 0.5 / f0 if order >= 1 else None
        f2 = -0.25 / (f0 * u) if order >= 2 else None
    elif name == "sinh":
        f0, f1, f2 = np.sinh(u), np.cosh(u), np.sinh(u)
    elif name == "cosh":
        f0, f1, f2 = np.cosh(u), np.sinh(u), np.cosh(u)
    elif name == "tanh":
        t = np.tanh(u)
        f0, f1, f2 = t, 1 - t * t, -2 * t * (1 - t * t)
    elif name == "atan":
        f0 = np.arctan(u)
        f1 = 1 / (1 + u * u)
        f2 = -2 * u * f1 * f1
    else:  # pragma: no cover - parser guarantees the closed set
        raise EvalDomainError(f"unknown function {name}", node)
    return f0, f1, f2


def _check_div(den, node):
    if np.any(den == 0):
        raise EvalDomainError("division by zero", node)


def _eval_values(node: Node, pts: np.ndarray) -> np.ndarray:
    m = pts.shape[0]
    if isinstance(node, Const):
        return np.full(m, node.value)
    if isinstance(node, Coord):
        return pts[:, node.index - 1].astype(float)
    if isinstance(node, Neg):
        return -_eval_values(node.operand, pts)
    if isinstance(node, Call):
        u = _eval_values(node.arg, pts)
        return _fn_derivs(node.name, u, 0, node)[0]
    a = _eval_values(node.left, pts)
    if node.op == "^":
        k = _integer_exponent(node.right)
        if k is not None:
            if k < 0:
                _check_div(a, node)
            return _ipow_values(a, k)
        b = _eval_values(node.right, pts)
        if np.any(a <= 0):
            raise EvalDomainError("non-integer power of a non-positive base", node)
        return np.exp(b * np.log(a))
    b = _eval_values(node.right, pts)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    _check_div(b, node)
    return a / b


def _ipow_values(a, k):
    if k < 0:
        return 1.0 / _ipow_values(a, -k)
    result = np.ones_like(a)
    base = a
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def _eval_jet(node: Node, var: _jet.Jet, order: int) -> _jet.Jet:
    n = var.grad.shape[-1] if var.grad is not None else None
    if isinstance(node, Const):
        return _jet.constant(np.full(var.val.shape[0], node.value), n, order)
    if isinstance(node, Coord):
        return var[:, node.index - 1]
    if isinstance(node, Neg):
        return -_eval_jet(node.operand, var, order)
    if isinstance(node, Call):
        u = _eval_jet(node.arg, var, order)
        f0, f1, f2 = _fn_derivs(node.name, u.val, order, node)
        if order == 0:
            return _jet.Jet(f0)
        return _jet.apply(u, f0, f1, f2)
    a = _eval_jet(node.left, var, order)
    if node.op == "^":
        k = _integer_exponent(node.right)
        if k is not None:
            if k < 0:
                _check_div(a.val, node)
            if k == 0:
                return _jet.constant(np.ones_like(a.val), n, order)
            return a.ipow(k)
        if np.any(a.val <= 0):
            raise EvalDomainError("non-integer power of a non-positive base", node)
        b = _eval_jet(node.right, var, order)
        la = _jet.apply(a, np.log(a.val), 1 / a.val, -1 / a.val**2) if order else _jet.Jet(np.log(a.val))
        e = b * la
        ev = np.exp(e.val)
        return _jet.apply(e, ev, ev, ev) if order else _jet.Jet(ev)
    b = _eval_jet(node.right, var, order)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    _check_div(b.val, node)
    return a / b


def _as_points(p, dim=None):
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    if single:
        pts = pts[None, :]
    if pts.ndim != 2:
        raise ValueError("points must have shape (n,) or (m, n)")
    if dim is not None and pts.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {pts.shape[1]}")
    return pts, single


def evaluate(ast: Node, p) -> np.ndarray | float:
    """Value of ``ast`` at one point ``(n,)`` or a batch ``(m, n)``."""
    pts, single = _as_points(p)
    if max_coord(ast) > pts.shape[1]:
        raise ValueError("point has fewer coordinates than the expression uses")
    out = _eval_values(ast, pts)
    return float(out[0]) if single else out


def eval_jet(ast: Node, points: np.ndarray, order: int = 2) -> _jet.Jet:
    """Batched jet of ``ast`` at ``points`` of shape (m, n)."""
    pts = np.asarray(points, dtype=float)
    if max_coord(ast) > pts.shape[1]:
        raise ValueError("point has fewer coordinates than the expression uses")
    if order == 0:
        return _jet.Jet(_eval_values(ast, pts))
    return _eval_jet(ast, _jet.variables(pts, order), order)


@dataclass(frozen=True)
class Jet2:
    """Value, gradient and Hessian of an expression at a single point."""

    value: float
    gradient: np.ndarray
    hessian: np.ndarray


def eval_jet2(ast: Node, p) -> Jet2:
    pts, single = _as_points(p)
    if not single:
        raise ValueError("eval_jet2 takes a single point; use eval_jet for batches")
    j = eval_jet(ast, pts, order=2)
    return Jet2(float(j.val[0]), j.grad[0].copy(), j.hess[0].copy())
