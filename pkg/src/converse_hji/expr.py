"""Polynomial/rational expressions over state variables ``x1..xn``.

Expressions are immutable trees. They can be parsed from text, printed back,
evaluated exactly (tree walk) or through a compiled closure, and
differentiated symbolically. The grammar is::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := number | 'x' index | '(' expr ')'

Exponents must reduce to non-negative integer constants.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence, Union

Number = Union[int, float]


class ExprError(Exception):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class EvaluationError(ExprError):
    """Raised on division by zero; ``subexpr`` is the offending divisor node."""

    def __init__(self, message: str, subexpr: "Expr"):
        super().__init__(f"{message}: {to_string(subexpr)}")
        self.subexpr = subexpr


class Expr:
    __slots__ = ()

    # Operator overloads make building expressions in code pleasant. They do
    # not simplify; call ``simplify`` explicitly.
    def __add__(self, other):
        return BinOp("+", self, as_expr(other))

    def __radd__(self, other):
        return BinOp("+", as_expr(other), self)

    def __sub__(self, other):
        return BinOp("-", self, as_expr(other))

    def __rsub__(self, other):
        return BinOp("-", as_expr(other), self)

    def __mul__(self, other):
        return BinOp("*", self, as_expr(other))

    def __rmul__(self, other):
        return BinOp("*", as_expr(other), self)

    def __truediv__(self, other):
        return BinOp("/", self, as_expr(other))

    def __rtruediv__(self, other):
        return BinOp("/", as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __pow__(self, k: int):
        return Pow(self, k)

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, eq=True, repr=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True, eq=True, repr=True)
class Var(Expr):
    index: int  # 1-based

    def __post_init__(self):
        if self.index < 1:
            raise ExprError(f"variable index must be >= 1, got {self.index}")


@dataclass(frozen=True, eq=True, repr=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True, repr=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in "+-*/" or len(self.op) != 1:
            raise ExprError(f"unknown operator {self.op!r}")


@dataclass(frozen=True, eq=True, repr=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def __post_init__(self):
        if isinstance(self.exponent, bool) or int(self.exponent) != self.exponent:
            raise ExprError(f"exponent must be an integer, got {self.exponent!r}")
        if self.exponent < 0:
            raise ExprError(f"exponent must be non-negative, got {self.exponent}")
        object.__setattr__(self, "exponent", int(self.exponent))


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value: Union[Expr, Number]) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float)):
        return Const(value)
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def var(i: int) -> Var:
    return Var(i)


# ----------------------------------------------------------------------------
# Parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<var>x(?P<idx>\d+))|(?P<op>[-+*/^()]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    source = source.rstrip()
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None or m.end() == pos:
            # skip whitespace to report the real offending column
            while pos < len(source) and source[pos].isspace():
                pos += 1
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        start = m.start(m.lastgroup) if m.lastgroup else pos
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), start))
        elif m.group("var") is not None:
            tokens.append(("var", m.group("idx"), m.start("var")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, dimension: int):
        self.tokens = _tokenize(source)
        self.i = 0
        self.dimension = dimension

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.advance()
        if kind != "op" or text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected token {text!r}", pos)
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.advance()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.advance()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            # a literal directly after '-' is a negative constant, unless it
            # is the base of a power (precedence of ^ over unary minus)
            nkind, ntext, _ = self.peek()
            nxt = self.tokens[self.i + 1]
            if nkind == "num" and not (nxt[0] == "op" and nxt[1] == "^"):
                self.advance()
                return Const(-float(ntext))
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            exp_pos = self.peek()[2]
            exponent = simplify(self.unary())
            if not isinstance(exponent, Const):
                raise ExprSyntaxError("exponent must be a constant", exp_pos)
            k = exponent.value
            if k < 0 or k != int(k):
                raise ExprSyntaxError(
                    f"exponent must be a non-negative integer, got {k:g}", exp_pos
                )
            return Pow(base, int(k))
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.advance()
        if kind == "num":
            return Const(float(text))
        if kind == "var":
            idx = int(text)
            if not 1 <= idx <= self.dimension:
                raise ExprSyntaxError(
                    f"variable x{idx} out of range for dimension {self.dimension}", pos
                )
            return Var(idx)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", pos)


def parse(source: str, dimension: int) -> Expr:
    """Parse ``source`` into an expression over ``x1..x{dimension}``."""
    if not isinstance(source, str):
        raise TypeError("expression source must be a string")
    return _Parser(source, dimension).parse()


# ----------------------------------------------------------------------------
# Printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_UNARY_PREC = 3
_POW_PREC = 4


def _prec(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return _UNARY_PREC
    if isinstance(e, Pow):
        return _POW_PREC
    if isinstance(e, Const) and math.copysign(1.0, e.value) < 0:
        return _UNARY_PREC
    return 5


def to_string(e: Expr) -> str:
    """Print ``e`` so that ``parse(to_string(e))`` rebuilds the same tree."""
    if isinstance(e, Const):
        if not math.isfinite(e.value):
            raise ExprError(f"cannot print non-finite constant {e.value}")
        s = repr(e.value)
        return f"({s})" if s.startswith("-") else s
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        # parenthesise literals too, otherwise '-2.0' reparses as Const(-2.0)
        if _prec(e.arg) < _UNARY_PREC or isinstance(e.arg, Const):
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(e, Pow):
        base = to_string(e.base)
        # negative constants already print wrapped in parentheses
        if not isinstance(e.base, (Var, Const)):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    if isinstance(e, BinOp):
        p = _PREC[e.op]
        left = to_string(e.left)
        right = to_string(e.right)
        if _prec(e.left) < p:
            left = f"({left})"
        if _prec(e.right) <= p:
            right = f"({right})"
        return f"{left} {e.op} {right}"
    raise TypeError(f"not an expression: {e!r}")


# ----------------------------------------------------------------------------
# Evaluation


def evaluate(e: Expr, x: Sequence[float]) -> float:
    """Evaluate ``e`` at state ``x`` (``x[0]`` is ``x1``)."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        if e.index > len(x):
            raise ExprError(f"x{e.index} not available in state of length {len(x)}")
        return float(x[e.index - 1])
    if isinstance(e, Neg):
        return -evaluate(e.arg, x)
    if isinstance(e, Pow):
        return evaluate(e.base, x) ** e.exponent
    if isinstance(e, BinOp):
        a = evaluate(e.left, x)
        b = evaluate(e.right, x)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if b == 0.0:
            raise EvaluationError("division by zero", e.right)
        return a / b
    raise TypeError(f"not an expression: {e!r}")


def _codegen(e: Expr) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Neg):
        return f"(-{_codegen(e.arg)})"
    if isinstance(e, Pow):
        if e.exponent == 0:
            return "1.0"
        if e.exponent == 1:
            return _codegen(e.base)
        if e.exponent == 2:
            b = _codegen(e.base)
            if isinstance(e.base, (Var, Const)):
                return f"({b}*{b})"
        return f"({_codegen(e.base)}**{e.exponent})"
    if isinstance(e, BinOp):
        return f"({_codegen(e.left)}{e.op}{_codegen(e.right)})"
    raise TypeError(f"not an expression: {e!r}")


def lambdify(exprs: Sequence[Expr], dimension: int) -> Callable[[Sequence[float]], tuple]:
    """Compile a sequence of expressions into one fast callable.

    The callable takes a state sequence of length ``dimension`` and returns a
    tuple of floats. Division by zero raises ``ZeroDivisionError``; use
    ``evaluate`` when the offending subexpression is needed.
    """
    names = ", ".join(f"x{i}" for i in range(1, dimension + 1))
    body = ", ".join(_codegen(e) for e in exprs)
    src = f"def _compiled(x):\n    {names}{',' if dimension == 1 else ''} = x\n    return ({body}{',' if len(exprs) == 1 else ''})\n"
    if dimension == 0:
        src = f"def _compiled(x):\n    return ({body}{',' if len(exprs) == 1 else ''})\n"
    namespace: dict = {}
    exec(compile(src, "<lambdify>", "exec"), namespace)
    return namespace["_compiled"]


# ----------------------------------------------------------------------------
# Simplification and differentiation


def _is(e: Expr, value: float) -> bool:
    return isinstance(e, Const) and e.value == value


def simplify(e: Expr) -> Expr:
    """Fold constants and drop 0/1 identities (best effort, bottom-up)."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Neg):
        a = simplify(e.arg)
        if isinstance(a, Const):
            return Const(-a.value) if a.value != 0 else ZERO
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(e, Pow):
        b = simplify(e.base)
        if e.exponent == 0:
            return ONE
        if e.exponent == 1:
            return b
        if isinstance(b, Const):
            return Const(b.value ** e.exponent)
        if isinstance(b, Pow):
            return Pow(b.base, b.exponent * e.exponent)
        return Pow(b, e.exponent)
    if isinstance(e, BinOp):
        a = simplify(e.left)
        b = simplify(e.right)
        op = e.op
        if isinstance(a, Const) and isinstance(b, Const):
            if op == "+":
                return Const(a.value + b.value)
            if op == "-":
                return Const(a.value - b.value)
            if op == "*":
                return Const(a.value * b.value)
            if b.value != 0.0:
                return Const(a.value / b.value)
            return BinOp(op, a, b)
        if op == "+":
            if _is(a, 0.0):
                return b
            if _is(b, 0.0):
                return a
            if isinstance(b, Neg):
                return BinOp("-", a, b.arg)
        elif op == "-":
            if _is(b, 0.0):
                return a
            if _is(a, 0.0):
                return simplify(Neg(b))
            if isinstance(b, Neg):
                return BinOp("+", a, b.arg)
        elif op == "*":
            if _is(a, 0.0) or _is(b, 0.0):
                return ZERO
            if _is(a, 1.0):
                return b
            if _is(b, 1.0):
                return a
            if _is(a, -1.0):
                return simplify(Neg(b))
            if _is(b, -1.0):
                return simplify(Neg(a))
            if isinstance(b, Const) and not isinstance(a, Const):
                a, b = b, a
            if isinstance(a, Const) and isinstance(b, BinOp) and b.op == "*" and isinstance(b.left, Const):
                return simplify(BinOp("*", Const(a.value * b.left.value), b.right))
        elif op == "/":
            if _is(a, 0.0) and not _is(b, 0.0):
                return ZERO
            if _is(b, 1.0):
                return a
        return BinOp(op, a, b)
    raise TypeError(f"not an expression: {e!r}")


def _diff(e: Expr, i: int) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if isinstance(e, Neg):
        return Neg(_diff(e.arg, i))
    if isinstance(e, Pow):
        k = e.exponent
        if k == 0:
            return ZERO
        return BinOp("*", BinOp("*", Const(k), Pow(e.base, k - 1)), _diff(e.base, i))
    if isinstance(e, BinOp):
        a, b = e.left, e.right
        da, db = _diff(a, i), _diff(b, i)
        if e.op in "+-":
            return BinOp(e.op, da, db)
        if e.op == "*":
            return BinOp("+", BinOp("*", da, b), BinOp("*", a, db))
        return BinOp(
            "/",
            BinOp("-", BinOp("*", da, b), BinOp("*", a, db)),
            Pow(b, 2),
        )
    raise TypeError(f"not an expression: {e!r}")


def diff(e: Expr, i: int) -> Expr:
    """Partial derivative of ``e`` with respect to ``x{i}``, simplified."""
    if i < 1:
        raise ExprError(f"variable index must be >= 1, got {i}")
    return simplify(_diff(simplify(e), i))


def gradient(V: Expr, n: int) -> tuple[Expr, ...]:
    return tuple(diff(V, i) for i in range(1, n + 1))


# ----------------------------------------------------------------------------
# Structural queries


def variables(e: Expr) -> set[int]:
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Neg):
        return variables(e.arg)
    if isinstance(e, Pow):
        return variables(e.base)
    return variables(e.left) | variables(e.right)


def is_constant(e: Expr) -> bool:
    return not variables(e)


def max_index(e: Expr) -> int:
    return max(variables(e), default=0)


def to_polynomial(e: Expr, n: int) -> dict[tuple[int, ...], float] | None:
    """Expand ``e`` into ``{exponent tuple: coefficient}``.

    Returns ``None`` when ``e`` divides by a non-constant expression.
    """
    def mul(p, q):
        out: dict = {}
        for ka, ca in p.items():
            for kb, cb in q.items():
                k = tuple(x + y for x, y in zip(ka, kb))
                out[k] = out.get(k, 0.0) + ca * cb
        return out

    def rec(node):
        if isinstance(node, Const):
            return {(0,) * n: node.value}
        if isinstance(node, Var):
            k = [0] * n
            k[node.index - 1] = 1
            return {tuple(k): 1.0}
        if isinstance(node, Neg):
            p = rec(node.arg)
            return None if p is None else {k: -c for k, c in p.items()}
        if isinstance(node, Pow):
            p = rec(node.base)
            if p is None:
                return None
            out = {(0,) * n: 1.0}
            for _ in range(node.exponent):
                out = mul(out, p)
            return out
        a, b = rec(node.left), rec(node.right)
        if a is None or b is None:
            return None
        if node.op in "+-":
            sign = 1.0 if node.op == "+" else -1.0
            out = dict(a)
            for k, c in b.items():
                out[k] = out.get(k, 0.0) + sign * c
            return out
        if node.op == "*":
            return mul(a, b)
        # division only by a non-zero constant polynomial
        consts = [k for k, c in b.items() if c != 0.0]
        if consts != [(0,) * n]:
            return None
        d = b[(0,) * n]
        return {k: c / d for k, c in a.items()}

    poly = rec(e)
    if poly is None:
        return None
    return {k: c for k, c in poly.items() if c != 0.0}


# ----------------------------------------------------------------------------
# Small symbolic linear algebra. Vectors are tuples of Expr, matrices are
# tuples of rows.

Vector = tuple
Matrix = tuple


def _sum(terms: Iterable[Expr]) -> Expr:
    out: Expr | None = None
    for t in terms:
        out = t if out is None else BinOp("+", out, t)
    return ZERO if out is None else out


def dot(a: Sequence[Expr], b: Sequence[Expr]) -> Expr:
    return simplify(_sum(BinOp("*", x, y) for x, y in zip(a, b)))


def matvec(M: Sequence[Sequence[Expr]], v: Sequence[Expr]) -> Vector:
    return tuple(dot(row, v) for row in M)


def transpose(M: Sequence[Sequence[Expr]]) -> Matrix:
    return tuple(zip(*M)) if M else ()


def outer(a: Sequence[Expr], b: Sequence[Expr]) -> Matrix:
    return tuple(tuple(simplify(BinOp("*", x, y)) for y in b) for x in a)


def matmul(A: Sequence[Sequence[Expr]], B: Sequence[Sequence[Expr]]) -> Matrix:
    Bt = transpose(B)
    return tuple(tuple(dot(row, col) for col in Bt) for row in A)


def scale(c: Union[Expr, Number], v: Sequence[Expr]) -> Vector:
    c = as_expr(c)
    return tuple(simplify(BinOp("*", c, x)) for x in v)


def vadd(*vs: Sequence[Expr]) -> Vector:
    return tuple(simplify(_sum(parts)) for parts in zip(*vs))


def vneg(v: Sequence[Expr]) -> Vector:
    return tuple(simplify(Neg(x)) for x in v)


def madd(*Ms: Sequence[Sequence[Expr]]) -> Matrix:
    return tuple(vadd(*rows) for rows in zip(*Ms))


def mscale(c: Union[Expr, Number], M: Sequence[Sequence[Expr]]) -> Matrix:
    return tuple(scale(c, row) for row in M)


def identity(n: int, diag: Union[Expr, Number] = 1.0) -> Matrix:
    d = as_expr(diag)
    return tuple(tuple(d if i == j else ZERO for j in range(n)) for i in range(n))
