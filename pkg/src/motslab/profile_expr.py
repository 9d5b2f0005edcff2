r"""Closed-form radial profiles: parsing, evaluation and symbolic derivatives.

Profiles such as the radial metric factor F(r) or the components of k are
given as short arithmetic strings in the single variable ``r``. The grammar
is a small Pratt grammar:

    numbers, the variable ``r``, ``+ - * / ^``, parentheses and the
    functions ``sqrt, log, exp, sin, cos, abs``.

``^`` is right-associative and binds tighter than unary minus, so ``-r^2``
means ``-(r^2)``.

Evaluation works on floats and numpy arrays (IEEE double precision) and on
mpmath numbers (for high precision work near a horizon). Poles, logarithms
of non-positive numbers and square roots of negative numbers raise
ProfileDomainError carrying the offending subexpression instead of
silently producing NaN.

Trees are immutable, so parsed expressions can be shared between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
import re

import mpmath
import numpy as np


__all__ = [
    "ProfileExpr",
    "ProfileSyntaxError",
    "ProfileDomainError",
    "parse",
    "FUNCTIONS",
]


FUNCTIONS = ("sqrt", "log", "exp", "sin", "cos", "abs")


class ProfileSyntaxError(ValueError):
    """Malformed profile text; ``offset`` is the 0-based byte offset."""

    def __init__(self, message, offset, source):
        super().__init__(f"{message} at offset {offset} in {source!r}")
        self.offset = offset
        self.source = source


class ProfileDomainError(ArithmeticError):
    """Evaluation hit a pole, log of a non-positive or sqrt of a negative."""

    def __init__(self, message, subexpr):
        super().__init__(f"{message} in subexpression '{subexpr}'")
        self.subexpr = subexpr


# ---------------------------------------------------------------------------
# Expression nodes


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


Node = Num | Var | Neg | Call | BinOp


# ---------------------------------------------------------------------------
# Tokenizer and Pratt parser


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)

_INFIX_BP = {"+": (10, 11), "-": (10, 11), "*": (20, 21), "/": (20, 21), "^": (41, 40)}
_PREFIX_BP = 30


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ProfileSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos), text)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _byte_offset(text, pos)))
        pos = m.end()
    tokens.append(("end", "", _byte_offset(text, len(text))))
    return tokens


def _byte_offset(text, char_index):
    return len(text[:char_index].encode("utf-8"))


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok):
        raise ProfileSyntaxError(message, tok[2], self.text)

    def expect(self, value):
        tok = self.advance()
        if tok[1] != value:
            self.error(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)

    def parse(self):
        node = self.expr(0)
        tok = self.peek()
        if tok[0] != "end":
            self.error(f"unexpected token {tok[1]!r}", tok)
        return node

    def expr(self, min_bp):
        left = self.prefix()
        while True:
            tok = self.peek()
            if tok[0] != "op" or tok[1] not in _INFIX_BP:
                break
            lbp, rbp = _INFIX_BP[tok[1]]
            if lbp < min_bp:
                break
            self.advance()
            right = self.expr(rbp)
            left = BinOp(tok[1], left, right)
        return left

    def prefix(self):
        tok = self.advance()
        kind, value, _ = tok
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value == "r":
                return Var()
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr(0)
                self.expect(")")
                return Call(value, arg)
            self.error(f"unknown identifier {value!r}", tok)
        if kind == "op":
            if value == "(":
                node = self.expr(0)
                self.expect(")")
                return node
            if value == "-":
                return Neg(self.expr(_PREFIX_BP))
            if value == "+":
                return self.expr(_PREFIX_BP)
        self.error(f"unexpected token {value or 'end of input'!r}", tok)


# ---------------------------------------------------------------------------
# Printing


_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5
_OP_PREC = {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}


def _prec(node):
    if isinstance(node, BinOp):
        return _OP_PREC[node.op]
    if isinstance(node, Neg):
        return _PREC_NEG
    if isinstance(node, Num) and (node.value < 0 or str(node.value).startswith("-")):
        return _PREC_NEG
    return _PREC_ATOM


def _fmt_num(value):
    text = repr(float(value))
    if text.endswith(".0"):
        text = text[:-2]
    return text


def to_text(node):
    """Print a tree so that parsing the text rebuilds exactly the same tree."""
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return "r"
    if isinstance(node, Call):
        return f"{node.name}({to_text(node.arg)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.arg, _prec(node.arg) < _PREC_NEG)
    p = _OP_PREC[node.op]
    if node.op == "^":
        left = _wrap(node.left, _prec(node.left) <= p)
        right = _wrap(node.right, _prec(node.right) < p)
        return f"{left}^{right}"
    left = _wrap(node.left, _prec(node.left) < p)
    right = _wrap(node.right, _prec(node.right) <= p)
    return f"{left} {node.op} {right}" if p == _PREC_ADD else f"{left}*{right}" if node.op == "*" else f"{left}/{right}"


def _wrap(node, parens):
    text = to_text(node)
    return f"({text})" if parens else text


# ---------------------------------------------------------------------------
# Evaluation


class _NumpyOps:
    @staticmethod
    def prepare(r):
        return np.asarray(r, dtype=float)

    @staticmethod
    def any(mask):
        return bool(np.any(mask))

    sqrt = staticmethod(np.sqrt)
    log = staticmethod(np.log)
    exp = staticmethod(np.exp)
    sin = staticmethod(np.sin)
    cos = staticmethod(np.cos)
    abs = staticmethod(np.abs)

    @staticmethod
    def is_integer(x):
        return np.equal(np.mod(x, 1.0), 0.0)

    power = staticmethod(np.power)


class _MpOps:
    @staticmethod
    def prepare(r):
        return mpmath.mpf(r)

    @staticmethod
    def any(mask):
        return bool(mask)

    sqrt = staticmethod(mpmath.sqrt)
    log = staticmethod(mpmath.log)
    exp = staticmethod(mpmath.exp)
    sin = staticmethod(mpmath.sin)
    cos = staticmethod(mpmath.cos)
    abs = staticmethod(abs)

    @staticmethod
    def is_integer(x):
        return x == mpmath.floor(x)

    power = staticmethod(mpmath.power)


def _evaluate(node, r, ops):
    if isinstance(node, Num):
        return node.value if ops is _NumpyOps else mpmath.mpf(node.value)
    if isinstance(node, Var):
        return r
    if isinstance(node, Neg):
        return -_evaluate(node.arg, r, ops)
    if isinstance(node, Call):
        x = _evaluate(node.arg, r, ops)
        if node.name == "sqrt" and ops.any(x < 0):
            raise ProfileDomainError("sqrt of a negative number", to_text(node))
        if node.name == "log" and ops.any(x <= 0):
            raise ProfileDomainError("log of a non-positive number", to_text(node))
        return getattr(ops, node.name)(x)
    a = _evaluate(node.left, r, ops)
    b = _evaluate(node.right, r, ops)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if ops.any(b == 0):
            raise ProfileDomainError("division by zero", to_text(node))
        return a / b
    # node.op == "^"
    if ops.any((a == 0) & (b < 0)) if ops is _NumpyOps else (a == 0 and b < 0):
        raise ProfileDomainError("zero raised to a negative power", to_text(node))
    bad = (a < 0) & ~ops.is_integer(b) if ops is _NumpyOps else (a < 0 and not ops.is_integer(b))
    if ops.any(bad):
        raise ProfileDomainError("negative base with non-integer exponent", to_text(node))
    return ops.power(a, b)


# ---------------------------------------------------------------------------
# Symbolic differentiation (with trivial constant folding only)


def _add(a, b):
    if isinstance(a, Num) and a.value == 0:
        return b
    if isinstance(b, Num) and b.value == 0:
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if isinstance(b, Num) and b.value == 0:
        return a
    if isinstance(a, Num) and a.value == 0:
        return _neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    for x, y in ((a, b), (b, a)):
        if isinstance(x, Num) and x.value == 0:
            return Num(0.0)
        if isinstance(x, Num) and x.value == 1:
            return y
    return BinOp("*", a, b)


def _div(a, b):
    if isinstance(a, Num) and a.value == 0:
        return Num(0.0)
    if isinstance(b, Num) and b.value == 1:
        return a
    return BinOp("/", a, b)


def _neg(a):
    if isinstance(a, Num):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _depends_on_r(node):
    if isinstance(node, Var):
        return True
    if isinstance(node, Num):
        return False
    if isinstance(node, (Neg, Call)):
        return _depends_on_r(node.arg)
    return _depends_on_r(node.left) or _depends_on_r(node.right)


def _diff(node):
    if isinstance(node, Num):
        return Num(0.0)
    if isinstance(node, Var):
        return Num(1.0)
    if isinstance(node, Neg):
        return _neg(_diff(node.arg))
    if isinstance(node, Call):
        u, du = node.arg, _diff(node.arg)
        if isinstance(du, Num) and du.value == 0:
            return Num(0.0)
        outer = {
            "sqrt": lambda: _div(Num(1.0), _mul(Num(2.0), node)),
            "log": lambda: _div(Num(1.0), u),
            "exp": lambda: node,
            "sin": lambda: Call("cos", u),
            "cos": lambda: _neg(Call("sin", u)),
            "abs": lambda: _div(u, node),
        }[node.name]()
        return _mul(outer, du)
    a, b = node.left, node.right
    da, db = _diff(a), _diff(b)
    if node.op == "+":
        return _add(da, db)
    if node.op == "-":
        return _sub(da, db)
    if node.op == "*":
        return _add(_mul(da, b), _mul(a, db))
    if node.op == "/":
        return _div(_sub(_mul(da, b), _mul(a, db)), BinOp("^", b, Num(2.0)))
    # power rule
    if not _depends_on_r(b):
        exponent = Num(b.value - 1.0) if isinstance(b, Num) else BinOp("-", b, Num(1.0))
        return _mul(_mul(b, BinOp("^", a, exponent)), da)
    return _mul(node, _add(_mul(db, Call("log", a)), _div(_mul(b, da), a)))


# ---------------------------------------------------------------------------
# Public wrapper


@dataclass(frozen=True)
class ProfileExpr:
    """An immutable parsed radial profile ``root`` with its ``source`` text."""

    root: Node
    source: str

    def __call__(self, r):
        """Evaluate in double precision; arrays are evaluated elementwise."""
        ops = _NumpyOps
        x = ops.prepare(r)
        with np.errstate(all="ignore"):
            value = _evaluate(self.root, x, ops)
        value = np.broadcast_to(np.asarray(value, dtype=float), x.shape)
        if value.ndim == 0:
            return float(value)
        return np.array(value)

    eval = __call__

    def eval_mp(self, r):
        """Evaluate with mpmath at the current ``mpmath.mp`` precision."""
        return _evaluate(self.root, mpmath.mpf(r), _MpOps)

    def differentiate(self):
        """Exact symbolic derivative with respect to ``r``."""
        node = _diff(self.root)
        return ProfileExpr(node, to_text(node))

    def to_text(self):
        return to_text(self.root)

    def __str__(self):
        return self.to_text()

    @property
    def is_constant(self):
        return not _depends_on_r(self.root)


def parse(text):
    """Parse profile text into a ProfileExpr.

    Raises ProfileSyntaxError (with a 0-based byte offset) for malformed
    input and unknown identifiers.
    """
    if not isinstance(text, str):
        raise TypeError("profile source must be a string")
    return ProfileExpr(_Parser(text).parse(), text)
