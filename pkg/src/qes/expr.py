"""Small symbolic expression language over the reals.

Expressions are immutable trees built from constants, named variables,
the unary functions ``exp ln sin cos sqrt`` plus negation, the four binary
arithmetic operators and powers with integer exponents.  The module offers a
parser, a canonical printer (its output parses back), exact differentiation,
a light simplifier and evaluation on floats or numpy arrays.

    >>> e = parse("x^2/2", ["x"])
    >>> evaluate(differentiate(e, "x"), {"x": 3.0})
    3.0
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

__all__ = [
    "Expression", "Const", "Var", "Unary", "Binary", "Pow",
    "ExpressionError", "ParseError", "UnknownIdentifier", "DomainError", "UnboundVariable",
    "parse", "to_string", "evaluate", "differentiate", "simplify", "substitute",
    "free_variables", "as_polynomial", "as_rational", "polynomial", "const",
]

FUNCTIONS = ("exp", "ln", "sin", "cos", "sqrt")
NAMED_CONSTANTS = {"pi": math.pi}


class ExpressionError(ValueError):
    pass


class ParseError(ExpressionError):
    def __init__(self, message, position):
        super().__init__(f"{message} at offset {position}")
        self.message = message
        self.position = position


class UnknownIdentifier(ParseError):
    def __init__(self, name, position):
        super().__init__(f"unknown identifier {name!r}", position)
        self.name = name


class DomainError(ExpressionError, ArithmeticError):
    def __init__(self, message, subtree):
        super().__init__(f"{message} in {to_string(subtree)}")
        self.subtree = subtree


class UnboundVariable(ExpressionError, KeyError):
    def __init__(self, name):
        super().__init__(f"variable {name!r} has no value")
        self.name = name

    def __str__(self):
        return self.args[0]


# ---------------------------------------------------------------------------
# tree
# ---------------------------------------------------------------------------

class Expression:
    __slots__ = ()

    def __add__(self, other):
        return Binary("+", self, const(other))

    def __radd__(self, other):
        return Binary("+", const(other), self)

    def __sub__(self, other):
        return Binary("-", self, const(other))

    def __rsub__(self, other):
        return Binary("-", const(other), self)

    def __mul__(self, other):
        return Binary("*", self, const(other))

    def __rmul__(self, other):
        return Binary("*", const(other), self)

    def __truediv__(self, other):
        return Binary("/", self, const(other))

    def __rtruediv__(self, other):
        return Binary("/", const(other), self)

    def __neg__(self):
        return Unary("neg", self)

    def __pow__(self, k):
        if int(k) != k:
            raise ExpressionError("only integer powers are supported")
        return Pow(self, int(k))

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, repr=False)
class Const(Expression):
    value: float

    def __repr__(self):
        return f"Const({self.value!r})"


@dataclass(frozen=True, repr=False)
class Var(Expression):
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True, repr=False)
class Unary(Expression):
    op: str  # "neg" or one of FUNCTIONS
    arg: Expression

    def __repr__(self):
        return f"Unary({self.op!r}, {self.arg!r})"


@dataclass(frozen=True, repr=False)
class Binary(Expression):
    op: str  # + - * /
    left: Expression
    right: Expression

    def __repr__(self):
        return f"Binary({self.op!r}, {self.left!r}, {self.right!r})"


@dataclass(frozen=True, repr=False)
class Pow(Expression):
    base: Expression
    exponent: int

    def __repr__(self):
        return f"Pow({self.base!r}, {self.exponent})"


def const(value) -> Expression:
    if isinstance(value, Expression):
        return value
    return Const(float(value))


ZERO = Const(0.0)
ONE = Const(1.0)


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str):
    pos = 0
    tokens = []
    while True:
        while pos < len(source) and source[pos].isspace():
            pos += 1
        if pos >= len(source):
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, variables):
        self.tokens = _tokenize(source)
        self.i = 0
        self.variables = set(variables)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, value, pos = self.take()
        if value != text or kind != "op":
            raise ParseError(f"expected {text!r}" if kind != "end" else f"expected {text!r}, got end of input", pos)

    def parse(self):
        e = self.sum()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {value!r}", pos)
        return e

    def sum(self):
        e = self.product()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = Binary(op, e, self.product())
        return e

    def product(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = Binary(op, e, self.unary())
        return e

    def unary(self):
        kind, value, pos = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return Unary("neg", self.unary())
        if kind == "op" and value == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        kind, value, pos = self.peek()
        if kind == "op" and value == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self):
        kind, value, pos = self.peek()
        if kind == "op" and value == "(":
            self.take()
            k = self.exponent()
            self.expect(")")
            return k
        sign = 1
        if kind == "op" and value in ("-", "+"):
            self.take()
            sign = -1 if value == "-" else 1
            kind, value, pos = self.peek()
        if kind != "num":
            raise ParseError("expected integer exponent", pos)
        self.take()
        number = float(value)
        if not number.is_integer():
            raise ParseError("exponent must be an integer", pos)
        return sign * int(number)

    def primary(self):
        kind, value, pos = self.take()
        if kind == "num":
            return Const(float(value))
        if kind == "name":
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.sum()
                self.expect(")")
                return Unary(value, arg)
            if value in self.variables:
                return Var(value)
            if value in NAMED_CONSTANTS:
                return Const(NAMED_CONSTANTS[value])
            raise UnknownIdentifier(value, pos)
        if kind == "op" and value == "(":
            e = self.sum()
            self.expect(")")
            return e
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected {value!r}", pos)


def parse(source: str, variables: Sequence[str]) -> Expression:
    """Parse infix text into an Expression over the declared variables.

    ``^`` takes an integer exponent and implicit multiplication is rejected.
    """
    variables = list(variables)
    if not variables or len(set(variables)) != len(variables):
        raise ExpressionError("variables must be a nonempty list of distinct names")
    for name in variables:
        if name in FUNCTIONS or name in NAMED_CONSTANTS:
            raise ExpressionError(f"{name!r} is reserved")
    return _Parser(source, variables).parse()


# ---------------------------------------------------------------------------
# printing
# ---------------------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _format_number(value: float) -> str:
    if value.is_integer() and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def _prec(e: Expression) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return 3
    if isinstance(e, Const) and (e.value < 0 or math.copysign(1.0, e.value) < 0):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def _wrap(e: Expression, minimum: int) -> str:
    text = to_string(e)
    return f"({text})" if _prec(e) < minimum else text


def to_string(e: Expression) -> str:
    """Canonical text form; ``parse`` reads it back to an equal-valued tree."""
    if isinstance(e, Const):
        return _format_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _wrap(e.arg, 4)
        return f"{e.op}({to_string(e.arg)})"
    if isinstance(e, Pow):
        return f"{_wrap(e.base, 5)}^{e.exponent}"
    if isinstance(e, Binary):
        # right operands of equal precedence keep their parentheses so the
        # reparsed tree associates exactly like this one
        p = _PREC[e.op]
        left, right = _wrap(e.left, p), _wrap(e.right, p + 1)
        return f"{left} {e.op} {right}" if p == 1 else f"{left}{e.op}{right}"
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

_UNARY_FUNCS = {"exp": np.exp, "ln": np.log, "sin": np.sin, "cos": np.cos, "sqrt": np.sqrt}


def _eval(e, point, strict):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return point[e.name]
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Unary):
        a = _eval(e.arg, point, strict)
        if e.op == "neg":
            return -a
        if strict:
            if e.op == "ln" and np.any(a <= 0):
                raise DomainError("ln of non-positive value", e)
            if e.op == "sqrt" and np.any(a < 0):
                raise DomainError("sqrt of negative value", e)
        return _UNARY_FUNCS[e.op](a)
    if isinstance(e, Pow):
        a = _eval(e.base, point, strict)
        if e.exponent < 0:
            if strict and np.any(a == 0):
                raise DomainError("negative power of zero", e)
            return 1.0 / np.power(a, -e.exponent)
        return np.power(a, e.exponent)
    if isinstance(e, Binary):
        a = _eval(e.left, point, strict)
        b = _eval(e.right, point, strict)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if strict and np.any(b == 0):
            raise DomainError("division by zero", e)
        return np.true_divide(a, b)
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expression, point: Mapping[str, object], *, strict: bool = True):
    """Evaluate at a point whose values may be floats or broadcastable arrays.

    With ``strict`` (the default) division by zero, ``ln`` of a non-positive
    number and ``sqrt`` of a negative number raise DomainError naming the
    offending subtree; otherwise they produce inf/nan like numpy does.
    """
    with np.errstate(all="ignore"):
        value = _eval(e, point, strict)
    if np.ndim(value) == 0:
        return float(value)
    return value


# ---------------------------------------------------------------------------
# structure helpers
# ---------------------------------------------------------------------------

def free_variables(e: Expression) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Unary):
        return free_variables(e.arg)
    if isinstance(e, Pow):
        return free_variables(e.base)
    return free_variables(e.left) | free_variables(e.right)


def substitute(e: Expression, mapping: Mapping[str, Expression]) -> Expression:
    if isinstance(e, Var):
        return const(mapping[e.name]) if e.name in mapping else e
    if isinstance(e, Const):
        return e
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.arg, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exponent)
    return Binary(e.op, substitute(e.left, mapping), substitute(e.right, mapping))


# light constructors used while differentiating, so trees stay small

def _add(a, b):
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def _sub(a, b):
    if b == ZERO:
        return a
    if a == ZERO:
        return _neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def _neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def _mul(a, b):
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def _div(a, b):
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return Binary("/", a, b)


def differentiate(e: Expression, var: str) -> Expression:
    """Exact derivative with respect to ``var`` (lightly simplified)."""
    return simplify(_d(e, var))


def _d(e, var):
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Unary):
        u = e.arg
        du = _d(u, var)
        if du == ZERO:
            return ZERO
        if e.op == "neg":
            return _neg(du)
        if e.op == "exp":
            return _mul(e, du)
        if e.op == "ln":
            return _div(du, u)
        if e.op == "sin":
            return _mul(Unary("cos", u), du)
        if e.op == "cos":
            return _neg(_mul(Unary("sin", u), du))
        if e.op == "sqrt":
            return _div(du, _mul(Const(2.0), e))
    if isinstance(e, Pow):
        k = e.exponent
        du = _d(e.base, var)
        if k == 0 or du == ZERO:
            return ZERO
        inner = e.base if k == 2 else Pow(e.base, k - 1)
        if k == 1:
            inner = ONE
        return _mul(_mul(Const(float(k)), inner), du)
    if isinstance(e, Binary):
        a, b = e.left, e.right
        da, db = _d(a, var), _d(b, var)
        if e.op == "+":
            return _add(da, db)
        if e.op == "-":
            return _sub(da, db)
        if e.op == "*":
            return _add(_mul(da, b), _mul(a, db))
        if e.op == "/":
            if db == ZERO:
                return _div(da, b)
            return _div(_sub(_mul(da, b), _mul(a, db)), Pow(b, 2))
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# simplification
# ---------------------------------------------------------------------------

def _fold(e):
    try:
        value = evaluate(e, {})
    except (DomainError, UnboundVariable):
        return e
    if math.isfinite(value):
        return Const(value)
    return e


def _product_form(e):
    """Split e into (coefficient, [(base, exponent), ...])."""
    if isinstance(e, Const):
        return e.value, []
    if isinstance(e, Unary) and e.op == "neg":
        c, factors = _product_form(e.arg)
        return -c, factors
    if isinstance(e, Binary) and e.op == "*":
        c1, f1 = _product_form(e.left)
        c2, f2 = _product_form(e.right)
        return c1 * c2, _merge_factors(f1 + f2)
    if isinstance(e, Binary) and e.op == "/" and isinstance(e.right, Const) and e.right.value != 0:
        c, factors = _product_form(e.left)
        return c / e.right.value, factors
    if isinstance(e, Pow) and not isinstance(e.base, Const):
        return 1.0, [(e.base, e.exponent)]
    return 1.0, [(e, 1)]


def _merge_factors(factors):
    merged = {}
    order = []
    for base, k in factors:
        if base in merged:
            merged[base] += k
        else:
            merged[base] = k
            order.append(base)
    return [(b, merged[b]) for b in order if merged[b] != 0]


def _build_product(coef, factors):
    if coef == 0:
        return ZERO
    body = None
    for base, k in factors:
        term = base if k == 1 else Pow(base, k)
        body = term if body is None else Binary("*", body, term)
    if body is None:
        return Const(coef)
    if coef == 1:
        return body
    if coef == -1:
        return Unary("neg", body)
    return Binary("*", Const(coef), body)


def _sum_form(e, sign=1.0):
    if isinstance(e, Binary) and e.op in ("+", "-"):
        right_sign = sign if e.op == "+" else -sign
        return _sum_form(e.left, sign) + _sum_form(e.right, right_sign)
    if isinstance(e, Unary) and e.op == "neg":
        return _sum_form(e.arg, -sign)
    coef, factors = _product_form(e)
    if not factors:
        return [(sign * coef, None)]
    return [(sign * coef, _build_product(1.0, factors))]


def _build_sum(terms):
    merged = {}
    order = []
    constant = 0.0
    for coef, key in terms:
        if key is None:
            constant += coef
        elif key in merged:
            merged[key] += coef
        else:
            merged[key] = coef
            order.append(key)
    items = [(merged[k], k) for k in order if merged[k] != 0]
    if constant != 0:
        items.append((constant, None))
    if not items:
        return ZERO
    out = None
    for coef, key in items:
        if key is None:
            term, negative = Const(abs(coef)), coef < 0
        else:
            negative = coef < 0
            c, factors = _product_form(key)
            term = _build_product(abs(coef) * c, factors)
        if out is None:
            out = Unary("neg", term) if negative else term
            if negative and isinstance(term, Const):
                out = Const(-term.value)
        else:
            out = Binary("-" if negative else "+", out, term)
    return out


def simplify(e: Expression) -> Expression:
    """Constant folding, identity elimination and collection of like terms.

    The result evaluates to the same value wherever the input is defined; it
    is not a canonical form and quotients are never cancelled.
    """
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Unary):
        arg = simplify(e.arg)
        if isinstance(arg, Const):
            return _fold(Unary(e.op, arg))
        if e.op == "neg":
            return _build_sum(_sum_form(Unary("neg", arg)))
        return Unary(e.op, arg)
    if isinstance(e, Pow):
        base = simplify(e.base)
        if e.exponent == 0:
            return ONE
        if e.exponent == 1:
            return base
        if isinstance(base, Const):
            return _fold(Pow(base, e.exponent))
        if isinstance(base, Pow):
            return Pow(base.base, base.exponent * e.exponent)
        return Pow(base, e.exponent)
    left, right = simplify(e.left), simplify(e.right)
    if isinstance(left, Const) and isinstance(right, Const):
        return _fold(Binary(e.op, left, right))
    if e.op in ("+", "-"):
        return _build_sum(_sum_form(Binary(e.op, left, right)))
    if e.op == "*":
        coef, factors = _product_form(Binary("*", left, right))
        return _build_product(coef, factors)
    # division
    if right == ONE:
        return left
    if left == ZERO:
        return ZERO
    if isinstance(right, Const):
        coef, factors = _product_form(left)
        return _build_product(coef / right.value, factors)
    return Binary("/", left, right)


# ---------------------------------------------------------------------------
# polynomial views (used for root finding and closed-form antiderivatives)
# ---------------------------------------------------------------------------

def _trim(p):
    p = np.asarray(p, dtype=float)
    nz = np.nonzero(p)[0]
    return p[: nz[-1] + 1] if nz.size else np.zeros(1)


def as_polynomial(e: Expression, var: str) -> Optional[np.ndarray]:
    """Ascending coefficients if ``e`` is a polynomial in ``var``, else None."""
    r = as_rational(e, var)
    if r is None:
        return None
    num, den = r
    if len(den) != 1:
        return None
    return _trim(num / den[0])


def as_rational(e: Expression, var: str):
    """(numerator, denominator) ascending coefficient arrays, or None."""
    if isinstance(e, Const):
        return np.array([e.value]), np.array([1.0])
    if isinstance(e, Var):
        if e.name == var:
            return np.array([0.0, 1.0]), np.array([1.0])
        return None
    if isinstance(e, Unary):
        inner = as_rational(e.arg, var)
        if inner is None:
            return None
        num, den = inner
        if e.op == "neg":
            return -num, den
        if len(num) == 1 and len(den) == 1:
            try:
                return np.array([evaluate(Unary(e.op, Const(num[0] / den[0])), {})]), np.array([1.0])
            except DomainError:
                return None
        return None
    if isinstance(e, Pow):
        inner = as_rational(e.base, var)
        if inner is None:
            return None
        num, den = inner
        k = e.exponent
        if k < 0:
            if not np.any(num):
                return None
            num, den, k = den, num, -k
        pn, pd = np.array([1.0]), np.array([1.0])
        for _ in range(k):
            pn = np.convolve(pn, num)
            pd = np.convolve(pd, den)
        return _trim(pn), _trim(pd)
    if isinstance(e, Binary):
        a = as_rational(e.left, var)
        b = as_rational(e.right, var)
        if a is None or b is None:
            return None
        (n1, d1), (n2, d2) = a, b
        if e.op in ("+", "-"):
            s = 1.0 if e.op == "+" else -1.0
            if len(d1) == len(d2) and np.array_equal(d1, d2):
                return _trim(_padd(n1, s * n2)), d1
            return _trim(_padd(np.convolve(n1, d2), s * np.convolve(n2, d1))), _trim(np.convolve(d1, d2))
        if e.op == "*":
            return _trim(np.convolve(n1, n2)), _trim(np.convolve(d1, d2))
        if not np.any(n2):
            return None
        return _trim(np.convolve(n1, d2)), _trim(np.convolve(d1, n2))
    return None


def _padd(a, b):
    out = np.zeros(max(len(a), len(b)))
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def polynomial(coeffs: Iterable[float], var: str) -> Expression:
    """Expression for sum(c_j * var^j) with ascending coefficients."""
    x = Var(var)
    terms = []
    for j, c in enumerate(coeffs):
        if c == 0:
            continue
        mono = ONE if j == 0 else (x if j == 1 else Pow(x, j))
        terms.append((float(c), mono))
    if not terms:
        return ZERO
    out = None
    for c, mono in reversed(terms):
        term = Const(c) if mono == ONE else (mono if c == 1 else Binary("*", Const(c), mono))
        out = term if out is None else Binary("+", out, term)
    return simplify(out)
