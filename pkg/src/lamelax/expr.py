"""Small expression language with exact partial derivatives.

Every scalar is complex double precision.  Expressions are immutable trees
built through smart constructors that fold constants and drop trivial
terms (``0*x``, ``x+0``, ``1*x``), which keeps derivative trees small.
Evaluation is vectorised: variables may be bound to numpy arrays and the
whole tree is evaluated once over all points.

    >>> e = parse("sin(u1)^2 + 0.5*u2")
    >>> to_text(diff(e, "u2"))
    '0.5'
    >>> evaluate(parse("u1*u1"), {"u1": 3})
    (9+0j)
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DivisionByZero, ProblemFileError, UnboundVariable

__all__ = [
    "Expr", "Const", "Var", "Unary", "Binary", "Pow",
    "LAMBDA", "coord", "as_expr", "sqrt", "sin", "cos", "exp",
    "evaluate", "diff", "free_variables", "parse", "to_text",
    "principal_sqrt", "ExpressionParseError",
]

FUNCTIONS = ("sqrt", "sin", "cos", "exp")
VARIABLE_RE = re.compile(r"^(u[1-9]|lambda)$")


class ExpressionParseError(ProblemFileError):
    pass


class Expr:
    """Base class; arithmetic operators build new trees."""

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    def __pow__(self, exponent):
        return power(self, exponent)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, eq=True, repr=True)
class Const(Expr):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True, eq=True, repr=True)
class Var(Expr):
    name: str


@dataclass(frozen=True, eq=True, repr=True)
class Unary(Expr):
    op: str  # "neg" or one of FUNCTIONS
    arg: Expr


@dataclass(frozen=True, eq=True, repr=True)
class Binary(Expr):
    op: str  # "+", "-", "*", "/"
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True, repr=True)
class Pow(Expr):
    base: Expr
    exponent: Fraction


ZERO = Const(0)
ONE = Const(1)
LAMBDA = Var("lambda")


def coord(axis: int) -> Var:
    """Coordinate variable for a 0-based axis: ``coord(0)`` is ``u1``."""
    return Var(f"u{axis + 1}")


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, complex, np.number)):
        return Const(complex(x))
    raise TypeError(f"cannot convert {type(x).__name__} to an expression")


def _is(x: Expr, c) -> bool:
    return isinstance(x, Const) and x.value == c


# -- smart constructors ------------------------------------------------------

def add(a: Expr, b: Expr) -> Expr:
    if _is(a, 0):
        return b
    if _is(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is(b, 0):
        return a
    if _is(a, 0):
        return neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is(a, 0) or _is(b, 0):
        return ZERO
    if _is(a, 1):
        return b
    if _is(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is(b, 0):
        raise DivisionByZero("division by the constant 0")
    if _is(a, 0):
        return ZERO
    if _is(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value / b.value)
    return Binary("/", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def power(base: Expr, exponent) -> Expr:
    exponent = Fraction(exponent)
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        value = complex(_pow_values(np.complex128(base.value), exponent))
        if _stays_real(base, value):
            return Const(value)
    return Pow(base, exponent)


def _stays_real(arg: Const, value: complex) -> bool:
    # folding sqrt(-2) into a complex literal would leave no text form
    return value.imag == 0 or arg.value.imag != 0


def _func(op: str, a: Expr) -> Expr:
    if isinstance(a, Const):
        value = complex(_apply_unary(op, np.complex128(a.value)))
        if _stays_real(a, value):
            return Const(value)
    return Unary(op, a)


def sqrt(a) -> Expr:
    return _func("sqrt", as_expr(a))


def sin(a) -> Expr:
    return _func("sin", as_expr(a))


def cos(a) -> Expr:
    return _func("cos", as_expr(a))


def exp(a) -> Expr:
    return _func("exp", as_expr(a))


# -- numerics ----------------------------------------------------------------

def _from_above(z):
    # -0.0 imaginary parts would put negative reals below the cut
    z = np.asarray(z, dtype=complex)
    return np.where(z.imag == 0, z.real + 0j, z)


def principal_sqrt(z):
    """Principal square root, continuous from above on the negative axis."""
    out = np.sqrt(_from_above(z))
    return out if out.ndim else out[()]


def _apply_unary(op, x):
    if op == "neg":
        return -x
    if op == "sqrt":
        return principal_sqrt(x)
    if op == "sin":
        return np.sin(x)
    if op == "cos":
        return np.cos(x)
    if op == "exp":
        return np.exp(x)
    raise ValueError(op)


def _pow_values(x, exponent: Fraction):
    if exponent.denominator == 1:
        n = exponent.numerator
        if n < 0:
            if np.any(x == 0):
                raise DivisionByZero("negative power of zero")
            return 1.0 / x ** (-n)
        return x ** n
    if exponent < 0 and np.any(x == 0):
        raise DivisionByZero("negative power of zero")
    x = _from_above(x)
    with np.errstate(all="ignore"):
        out = np.power(x, float(exponent))
    out = np.where(x == 0, 0j, out)
    return out if out.ndim else out[()]


def evaluate(e: Expr, env):
    """Value of ``e`` with variables bound by ``env`` (scalars or arrays).

    Returns a Python complex when every bound value is scalar, otherwise a
    complex ndarray of the broadcast shape.
    """
    cache: dict[int, object] = {}

    def ev(node):
        key = id(node)
        hit = cache.get(key)
        if hit is not None:
            return hit
        if isinstance(node, Const):
            out = np.complex128(node.value)
        elif isinstance(node, Var):
            try:
                out = np.asarray(env[node.name], dtype=complex)
            except KeyError:
                raise UnboundVariable(node.name) from None
        elif isinstance(node, Unary):
            out = _apply_unary(node.op, ev(node.arg))
        elif isinstance(node, Pow):
            out = _pow_values(ev(node.base), node.exponent)
        else:
            left, right = ev(node.left), ev(node.right)
            if node.op == "+":
                out = left + right
            elif node.op == "-":
                out = left - right
            elif node.op == "*":
                out = left * right
            else:
                if np.any(right == 0):
                    raise DivisionByZero(f"division by zero in {to_text(node)}")
                out = left / right
        cache[key] = out
        return out

    out = ev(e)
    if np.ndim(out) == 0:
        return complex(out)
    return np.asarray(out, dtype=complex)


def diff(e: Expr, v) -> Expr:
    """Exact partial derivative of ``e`` with respect to variable ``v``."""
    name = v.name if isinstance(v, Var) else str(v)
    cache: dict[int, Expr] = {}

    def d(node):
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Const):
            out = ZERO
        elif isinstance(node, Var):
            out = ONE if node.name == name else ZERO
        elif isinstance(node, Unary):
            da = d(node.arg)
            if _is(da, 0):
                out = ZERO
            elif node.op == "neg":
                out = neg(da)
            elif node.op == "sqrt":
                out = div(da, mul(Const(2), node))
            elif node.op == "sin":
                out = mul(cos(node.arg), da)
            elif node.op == "cos":
                out = neg(mul(sin(node.arg), da))
            else:
                out = mul(node, da)
        elif isinstance(node, Pow):
            db = d(node.base)
            if _is(db, 0):
                out = ZERO
            else:
                n = node.exponent
                out = mul(mul(Const(complex(n)), power(node.base, n - 1)), db)
        else:
            a, b = node.left, node.right
            da, db = d(a), d(b)
            if node.op == "+":
                out = add(da, db)
            elif node.op == "-":
                out = sub(da, db)
            elif node.op == "*":
                out = add(mul(da, b), mul(a, db))
            else:
                out = sub(div(da, b), div(mul(a, db), mul(b, b)))
        cache[key] = out
        return out

    return d(e)


def free_variables(e: Expr) -> set[str]:
    seen: set[int] = set()
    names: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if id(node) in seen:
            continue
        seen.add(id(node))
        if isinstance(node, Var):
            names.add(node.name)
        elif isinstance(node, Unary):
            stack.append(node.arg)
        elif isinstance(node, Pow):
            stack.append(node.base)
        elif isinstance(node, Binary):
            stack.extend((node.left, node.right))
    return names


# -- text form ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Expr) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary) and node.op == "neg":
        return 3
    if isinstance(node, Pow):
        return 4
    return 5


def _number(x: float) -> str:
    if not np.isfinite(x):
        raise ValueError(f"non-finite constant {x!r}")
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _fraction(q: Fraction) -> str:
    if q.denominator == 1 and q >= 0:
        return str(q.numerator)
    if q.denominator == 1:
        return f"({q.numerator})"
    return f"({q.numerator}/{q.denominator})"


def to_text(e: Expr) -> str:
    """Render ``e`` in the problem-file grammar; ``parse`` inverts it exactly."""
    if isinstance(e, Const):
        if e.value.imag != 0:
            raise ValueError(f"complex constant {e.value} has no text form")
        x = e.value.real
        return f"({_number(x)})" if x < 0 else _number(x)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = to_text(e.arg)
            return f"-({inner})" if _prec(e.arg) < 4 else f"-{inner}"
        return f"{e.op}({to_text(e.arg)})"
    if isinstance(e, Pow):
        base = to_text(e.base)
        if _prec(e.base) <= 4:
            base = f"({base})"
        return f"{base}^{_fraction(e.exponent)}"
    p = _PREC[e.op]
    left, right = to_text(e.left), to_text(e.right)
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}"


def parse(text: str) -> Expr:
    """Parse the grammar: u1..u9, lambda, decimals, + - * / ^, sqrt/sin/cos/exp."""
    src = re.sub(r"\blambda\b", "_lambda", text.replace("^", "**"))
    try:
        tree = ast.parse(src.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionParseError(f"cannot parse expression {text!r}: {exc.msg}") from None

    def conv(node):
        if isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ExpressionParseError(f"bad literal {node.value!r} in {text!r}")
            return Const(node.value)
        if isinstance(node, ast.Name):
            name = "lambda" if node.id == "_lambda" else node.id
            if not VARIABLE_RE.match(name):
                raise ExpressionParseError(f"unknown identifier {name!r} in {text!r}")
            return Var(name)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            arg = conv(node.operand)
            return neg(arg) if isinstance(node.op, ast.USub) else arg
        if isinstance(node, ast.BinOp):
            left, right = conv(node.left), conv(node.right)
            if isinstance(node.op, ast.Add):
                return add(left, right)
            if isinstance(node.op, ast.Sub):
                return sub(left, right)
            if isinstance(node.op, ast.Mult):
                return mul(left, right)
            if isinstance(node.op, ast.Div):
                try:
                    return div(left, right)
                except DivisionByZero:
                    raise ExpressionParseError(f"division by literal zero in {text!r}") from None
            if isinstance(node.op, ast.Pow):
                return power(left, _exponent(right, text))
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in FUNCTIONS and len(node.args) == 1 and not node.keywords):
            return _func(node.func.id, conv(node.args[0]))
        raise ExpressionParseError(f"unsupported construct in {text!r}")

    return conv(tree.body)


def _exponent(e: Expr, text: str) -> Fraction:
    if not isinstance(e, Const) or e.value.imag != 0:
        raise ExpressionParseError(f"exponent must be a real constant in {text!r}")
    q = Fraction(e.value.real).limit_denominator(1000)
    if abs(float(q) - e.value.real) > 1e-12:
        raise ExpressionParseError(f"exponent must be rational in {text!r}")
    return q
