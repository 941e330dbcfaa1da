"""One-variable analytic expressions: parsing, evaluation, derivatives.

The grammar accepts numeric literals, the variable ``t``, parentheses, the
binary operators ``+ - * / ^`` and the functions sin, cos, tan, exp, log,
sqrt, sinh, cosh, tanh.  ``^`` binds tightest, then unary minus, then
``* /``, then ``+ -``; ``^`` is right associative and its exponent must be
a constant (variable-free) subexpression.

Expression trees are immutable.  ``differentiate`` is exact and performs
only trivial constant folding; ``taylor`` evaluates in Taylor mode through
the series recurrences rather than by repeated symbolic differentiation.
"""

from __future__ import annotations

import math
import cmath
import re
from dataclasses import dataclass

from . import series as _series
from .errors import ParseError, EvalDomainError, ExprError
from .series import Series

__all__ = [
    "Expr", "Num", "Var", "Neg", "Add", "Sub", "Mul", "Div", "Pow", "Call",
    "parse", "render", "differentiate", "eval_real", "eval_complex",
    "taylor", "FUNCTIONS",
]


class Expr:
    """Base class for expression nodes."""

    __slots__ = ()

    def __repr__(self):
        return f"<{type(self).__name__} {render(self)!r}>"


@dataclass(frozen=True, repr=False)
class Num(Expr):
    value: float


@dataclass(frozen=True, repr=False)
class Var(Expr):
    pass


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, repr=False)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Pow(Expr):
    base: Expr
    exponent: Expr  # constant subtree, enforced at parse time


@dataclass(frozen=True, repr=False)
class Call(Expr):
    name: str
    arg: Expr


FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh")

_ATOM_EXPECTED = ("number", "'t'", "function name", "'('")


# -- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


class _Token:
    __slots__ = ("kind", "text", "line", "column")

    def __init__(self, kind, text, line, column):
        self.kind = kind
        self.text = text
        self.line = line
        self.column = column


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        m = _TOKEN_RE.match(text, i)
        if m is None:
            raise ParseError(f"unexpected character {ch!r}", line, col,
                             _ATOM_EXPECTED)
        kind = m.lastgroup
        tok = m.group()
        tokens.append(_Token(kind, tok, line, col))
        i = m.end()
        col += len(tok)
    tokens.append(_Token("eof", "", line, col))
    return tokens


# -- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message, expected):
        tok = self.peek()
        raise ParseError(message, tok.line, tok.column, expected)

    def additive(self):
        node = self.multiplicative()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            rhs = self.multiplicative()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def multiplicative(self):
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        if self.peek().kind == "op" and self.peek().text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            caret = self.advance()
            exponent = self.unary()  # right associative, allows t^-2
            if _contains_var(exponent):
                raise ParseError("exponent must be a constant expression",
                                 caret.line, caret.column,
                                 ("constant exponent",))
            return Pow(base, exponent)
        return base

    def atom(self):
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            if tok.text == "t":
                return Var()
            if tok.text in FUNCTIONS:
                opening = self.peek()
                if not (opening.kind == "op" and opening.text == "("):
                    self.fail(f"function {tok.text!r} requires an argument list",
                              ("'('",))
                self.advance()
                arg = self.additive()
                closing = self.peek()
                if not (closing.kind == "op" and closing.text == ")"):
                    self.fail("unbalanced parentheses", ("')'", "operator"))
                self.advance()
                return Call(tok.text, arg)
            raise ParseError(f"unknown identifier {tok.text!r}",
                             tok.line, tok.column, ("'t'", "function name"))
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.additive()
            closing = self.peek()
            if not (closing.kind == "op" and closing.text == ")"):
                self.fail("unbalanced parentheses", ("')'", "operator"))
            self.advance()
            return node
        self.fail("expected an expression", _ATOM_EXPECTED)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises
    ------
    ParseError
        With 1-based line/column and the set of acceptable tokens.
    """
    if not isinstance(text, str):
        raise ParseError("expression must be a string", 1, 1, _ATOM_EXPECTED)
    tokens = _tokenize(text)
    if tokens[0].kind == "eof":
        raise ParseError("empty expression", 1, 1, _ATOM_EXPECTED)
    p = _Parser(tokens)
    node = p.additive()
    if p.peek().kind != "eof":
        p.fail(f"unexpected token {p.peek().text!r}",
               ("operator", "end of input"))
    return node


def _contains_var(e: Expr) -> bool:
    if isinstance(e, Var):
        return True
    if isinstance(e, (Num,)):
        return False
    if isinstance(e, Neg):
        return _contains_var(e.arg)
    if isinstance(e, (Add, Sub, Mul, Div)):
        return _contains_var(e.left) or _contains_var(e.right)
    if isinstance(e, Pow):
        return _contains_var(e.base) or _contains_var(e.exponent)
    if isinstance(e, Call):
        return _contains_var(e.arg)
    raise ExprError(f"unknown node {type(e).__name__}")


# -- rendering -------------------------------------------------------------

# precedence levels: additive 1, multiplicative 2, unary 3, power 4, atom 5

def _render(e: Expr, prec: int) -> str:
    if isinstance(e, Num):
        v = e.value
        if v < 0 or (v == 0 and math.copysign(1.0, v) < 0):
            return _render(Neg(Num(-v)), prec)
        if float(v).is_integer() and abs(v) < 1e16:
            s = str(int(v))
        else:
            s = repr(float(v))
        return s
    if isinstance(e, Var):
        return "t"
    if isinstance(e, Neg):
        inner = "-" + _render(e.arg, 3)
        return f"({inner})" if prec > 3 else inner
    if isinstance(e, (Add, Sub)):
        op = " + " if isinstance(e, Add) else " - "
        inner = _render(e.left, 1) + op + _render(e.right, 2)
        return f"({inner})" if prec > 1 else inner
    if isinstance(e, (Mul, Div)):
        op = "*" if isinstance(e, Mul) else "/"
        inner = _render(e.left, 2) + op + _render(e.right, 3)
        return f"({inner})" if prec > 2 else inner
    if isinstance(e, Pow):
        inner = _render(e.base, 5) + "^" + _render(e.exponent, 4)
        return f"({inner})" if prec > 4 else inner
    if isinstance(e, Call):
        return f"{e.name}({_render(e.arg, 0)})"
    raise ExprError(f"unknown node {type(e).__name__}")


def render(e: Expr) -> str:
    """Serialize back into the surface grammar (reparseable)."""
    return _render(e, 0)


# -- differentiation -------------------------------------------------------

def _num(v) -> Num:
    return Num(float(v))


def _add(a, b):
    if isinstance(a, Num) and a.value == 0:
        return b
    if isinstance(b, Num) and b.value == 0:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value + b.value)
    return Add(a, b)


def _sub(a, b):
    if isinstance(b, Num) and b.value == 0:
        return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value - b.value)
    if isinstance(a, Num) and a.value == 0:
        return Neg(b)
    return Sub(a, b)


def _mul(a, b):
    if isinstance(a, Neg) and isinstance(a.arg, Num):
        a = _num(-a.arg.value)
    if isinstance(b, Neg) and isinstance(b.arg, Num):
        b = _num(-b.arg.value)
    if isinstance(a, Num):
        if a.value == 0:
            return _num(0)
        if a.value == 1:
            return b
    if isinstance(b, Num):
        if b.value == 0:
            return _num(0)
        if b.value == 1:
            return a
    if isinstance(a, Num) and isinstance(b, Num):
        return _num(a.value * b.value)
    return Mul(a, b)


def _pow(base, c: Num):
    if c.value == 1:
        return base
    if c.value == 0:
        return _num(1)
    return Pow(base, c)


def _div(a, b):
    if isinstance(a, Num) and a.value == 0:
        return _num(0)
    if isinstance(b, Num) and b.value == 1:
        return a
    return Div(a, b)


_CHAIN = {
    "sin": lambda u: Call("cos", u),
    "cos": lambda u: Neg(Call("sin", u)),
    "tan": lambda u: _add(_num(1), Pow(Call("tan", u), _num(2))),
    "exp": lambda u: Call("exp", u),
    "log": lambda u: _div(_num(1), u),
    "sqrt": lambda u: _div(_num(1), _mul(_num(2), Call("sqrt", u))),
    "sinh": lambda u: Call("cosh", u),
    "cosh": lambda u: Call("sinh", u),
    "tanh": lambda u: _sub(_num(1), Pow(Call("tanh", u), _num(2))),
}


def differentiate(e: Expr) -> Expr:
    """Exact symbolic derivative with respect to the variable."""
    if isinstance(e, Num):
        return _num(0)
    if isinstance(e, Var):
        return _num(1)
    if isinstance(e, Neg):
        d = differentiate(e.arg)
        return _num(0) if isinstance(d, Num) and d.value == 0 else Neg(d)
    if isinstance(e, Add):
        return _add(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Sub):
        return _sub(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Mul):
        return _add(_mul(differentiate(e.left), e.right),
                    _mul(e.left, differentiate(e.right)))
    if isinstance(e, Div):
        num = _sub(_mul(differentiate(e.left), e.right),
                   _mul(e.left, differentiate(e.right)))
        return _div(num, Pow(e.right, _num(2)))
    if isinstance(e, Pow):
        # exponent is constant: d a^c = c * a^(c-1) * a'
        c = e.exponent
        if isinstance(c, Num):
            term = _mul(c, _pow(e.base, _num(c.value - 1)))
        else:
            term = _mul(c, Pow(e.base, _sub(c, _num(1))))
        return _mul(term, differentiate(e.base))
    if isinstance(e, Call):
        return _mul(_CHAIN[e.name](e.arg), differentiate(e.arg))
    raise ExprError(f"unknown node {type(e).__name__}")


# -- evaluation ------------------------------------------------------------

_REAL_FN = {name: getattr(math, name) for name in FUNCTIONS}
_COMPLEX_FN = {name: getattr(cmath, name) for name in FUNCTIONS}


def _eval_real(e: Expr, t: float):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return t
    if isinstance(e, Neg):
        return -_eval_real(e.arg, t)
    if isinstance(e, Add):
        return _eval_real(e.left, t) + _eval_real(e.right, t)
    if isinstance(e, Sub):
        return _eval_real(e.left, t) - _eval_real(e.right, t)
    if isinstance(e, Mul):
        return _eval_real(e.left, t) * _eval_real(e.right, t)
    if isinstance(e, Div):
        den = _eval_real(e.right, t)
        if den == 0:
            raise EvalDomainError("division by zero")
        return _eval_real(e.left, t) / den
    if isinstance(e, Pow):
        base = _eval_real(e.base, t)
        c = _eval_real(e.exponent, t)
        if base == 0 and c < 0:
            raise EvalDomainError("zero raised to a negative power")
        if float(c).is_integer():
            return base ** int(c)
        if base < 0:
            raise EvalDomainError(
                f"negative base {base} with non-integer exponent {c}")
        return math.pow(base, c)
    if isinstance(e, Call):
        x = _eval_real(e.arg, t)
        if e.name == "log" and x <= 0:
            raise EvalDomainError(f"log of nonpositive real {x}")
        if e.name == "sqrt" and x < 0:
            raise EvalDomainError(f"sqrt of negative real {x}")
        return _REAL_FN[e.name](x)
    raise ExprError(f"unknown node {type(e).__name__}")


def eval_real(e: Expr, t) -> float:
    """Evaluate at a real point.  Domain violations raise EvalDomainError."""
    try:
        return float(_eval_real(e, float(t)))
    except OverflowError as exc:
        raise EvalDomainError(f"overflow during evaluation: {exc}") from None


def _eval_complex(e: Expr, z: complex):
    if isinstance(e, Num):
        return complex(e.value)
    if isinstance(e, Var):
        return z
    if isinstance(e, Neg):
        return -_eval_complex(e.arg, z)
    if isinstance(e, Add):
        return _eval_complex(e.left, z) + _eval_complex(e.right, z)
    if isinstance(e, Sub):
        return _eval_complex(e.left, z) - _eval_complex(e.right, z)
    if isinstance(e, Mul):
        return _eval_complex(e.left, z) * _eval_complex(e.right, z)
    if isinstance(e, Div):
        den = _eval_complex(e.right, z)
        if den == 0:
            raise EvalDomainError("division by zero")
        return _eval_complex(e.left, z) / den
    if isinstance(e, Pow):
        base = _eval_complex(e.base, z)
        c = _eval_real(e.exponent, 0.0)
        if base == 0 and c < 0:
            raise EvalDomainError("zero raised to a negative power")
        if float(c).is_integer():
            return base ** int(c)
        # principal branch
        return cmath.exp(c * cmath.log(base))
    if isinstance(e, Call):
        x = _eval_complex(e.arg, z)
        if e.name == "log" and x == 0:
            raise EvalDomainError("log of zero")
        return _COMPLEX_FN[e.name](x)
    raise ExprError(f"unknown node {type(e).__name__}")


def eval_complex(e: Expr, z) -> complex:
    """Evaluate at a complex point using principal branches."""
    try:
        return complex(_eval_complex(e, complex(z)))
    except (OverflowError, ValueError) as exc:
        raise EvalDomainError(f"evaluation failed: {exc}") from None


# -- Taylor mode -----------------------------------------------------------

def _taylor(e: Expr, t0: float, order: int):
    if isinstance(e, Num):
        return _series.constant(e.value, order, t0)
    if isinstance(e, Var):
        return _series.identity(order, t0)
    if isinstance(e, Neg):
        return -_taylor(e.arg, t0, order)
    if isinstance(e, Add):
        return _taylor(e.left, t0, order) + _taylor(e.right, t0, order)
    if isinstance(e, Sub):
        return _taylor(e.left, t0, order) - _taylor(e.right, t0, order)
    if isinstance(e, Mul):
        return _taylor(e.left, t0, order) * _taylor(e.right, t0, order)
    if isinstance(e, Div):
        return _taylor(e.left, t0, order) * _series.reciprocal(
            _taylor(e.right, t0, order))
    if isinstance(e, Pow):
        base = _taylor(e.base, t0, order)
        c = _eval_real(e.exponent, 0.0)
        if float(c).is_integer():
            return _series.powi(base, int(c))
        return _series.exp(_series.log(base) * c)
    if isinstance(e, Call):
        return getattr(_series, e.name)(_taylor(e.arg, t0, order))
    raise ExprError(f"unknown node {type(e).__name__}")


def taylor(e: Expr, t0: float, order: int) -> Series:
    """Taylor coefficients of ``e`` around ``t0`` up to ``order``.

    Computed by propagating series through the tree (one pass, exact
    recurrences), never by repeated symbolic differentiation.
    """
    if order < 0:
        raise ExprError("order must be nonnegative")
    try:
        return _taylor(e, float(t0), int(order))
    except OverflowError as exc:
        raise EvalDomainError(f"overflow during expansion: {exc}") from None
