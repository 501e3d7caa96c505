"""Minimal expression language for scalar functions of up to four variables.

Supplies parsing, pretty-printing, pointwise evaluation, exact symbolic
differentiation and antidifferentiation (symbolic table with adaptive-Simpson
fallback) for the coefficient functions used throughout the package.

Grammar::

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := unary ('^' unary)?
    unary  := '-' unary | atom
    atom   := number | 'x1'|'x2'|'x3'|'x4' | func '(' expr ')' | '(' expr ')'
    func   in {sin, cos, exp, ln, sqrt, tanh}

Exponents must be constant (integer or real).  Expressions are immutable and
evaluation is pure, so parsed trees are safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

__all__ = [
    "Expr",
    "Const",
    "Var",
    "Unary",
    "Binary",
    "UnivariateFn",
    "AntiderivativeFn",
    "ExprError",
    "ExprSyntaxError",
    "ExprDomainError",
    "QuadratureError",
    "parse",
    "to_string",
    "evaluate",
    "eval_univariate",
    "differentiate",
    "antiderivative",
    "adaptive_simpson",
    "free_variables",
    "substitute",
]


class ExprError(Exception):
    """Base class for expression-language errors."""


class ExprSyntaxError(ExprError):
    """Raised on malformed input; carries the byte offset of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class ExprDomainError(ExprError):
    """Raised when evaluation hits a domain fault (ln of nonpositive, ...)."""

    def __init__(self, message: str, subexpr: "Expr", point):
        super().__init__(f"{message} in '{to_string(subexpr)}' at {point}")
        self.subexpr = subexpr
        self.point = point


class QuadratureError(ExprError):
    """Raised when adaptive quadrature fails to reach the requested tolerance."""

    def __init__(self, message: str, estimate: float):
        super().__init__(f"{message} (achieved error estimate {estimate:.3e})")
        self.estimate = estimate


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 1..4


@dataclass(frozen=True)
class Unary:
    op: str  # 'neg', 'sin', 'cos', 'exp', 'ln', 'sqrt', 'tanh'
    arg: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # '+', '-', '*', '/', '^'
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Var, Unary, Binary]

_FUNCS = ("sin", "cos", "exp", "ln", "sqrt", "tanh")
_VARS = ("x1", "x2", "x3", "x4")


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c in "+-*/^()":
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or c == ".":
            j = i
            while j < n and (text[j].isdigit() or text[j] == "."):
                j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            try:
                value = float(text[i:j])
            except ValueError:
                raise ExprSyntaxError(f"malformed number '{text[i:j]}'", i)
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha():
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("name", text[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(f"unexpected character '{c}'", i)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.take()
        if tok[0] != kind:
            raise ExprSyntaxError(f"expected '{kind}', got '{tok[1]}'", tok[2])
        return tok

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while self.peek()[0] in ("+", "-"):
            op = self.take()[0]
            node = Binary(op, node, self.parse_term())
        return node

    def parse_term(self) -> Expr:
        node = self.parse_factor()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            node = Binary(op, node, self.parse_factor())
        return node

    def parse_factor(self) -> Expr:
        base = self.parse_unary()
        if self.peek()[0] == "^":
            offset = self.take()[2]
            exponent = self.parse_unary()
            if _constant_value(exponent) is None:
                raise ExprSyntaxError("exponent must be a constant", offset)
            return Binary("^", base, exponent)
        return base

    def parse_unary(self) -> Expr:
        if self.peek()[0] == "-":
            self.take()
            return Unary("neg", self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Expr:
        kind, value, offset = self.take()
        if kind == "num":
            return Const(value)
        if kind == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        if kind == "name":
            if value in _VARS:
                return Var(int(value[1]))
            if value in _FUNCS:
                self.expect("(")
                arg = self.parse_expr()
                self.expect(")")
                return Unary(value, arg)
            if value.startswith("x") and value[1:].isdigit():
                raise ExprSyntaxError(f"variable index outside 1..4: '{value}'", offset)
            raise ExprSyntaxError(f"unknown identifier '{value}'", offset)
        raise ExprSyntaxError(f"unexpected token '{value}'", offset)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises :class:`ExprSyntaxError` (with byte offset) on malformed input,
    unknown identifiers, or variable indices outside 1..4.
    """
    parser = _Parser(text)
    node = parser.parse_expr()
    parser.expect("end")
    return node


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_UNARY, _PREC_ATOM = 1, 2, 3, 4, 5


def _precedence(e: Expr) -> int:
    if isinstance(e, Binary):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL,
                "/": _PREC_MUL, "^": _PREC_POW}[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return _PREC_UNARY
    if isinstance(e, Const) and e.value < 0:
        return _PREC_UNARY
    return _PREC_ATOM


def _wrap(e: Expr, minimum: int) -> str:
    s = to_string(e)
    return f"({s})" if _precedence(e) < minimum else s


def to_string(e: Expr) -> str:
    """Render a tree back to grammar-conformant text.

    ``to_string(parse(s))`` reparses to a structurally identical tree.  Trees
    synthesized by :func:`differentiate` may contain negative constants, which
    print as negations and therefore reparse to value-equal (not node-equal)
    trees.
    """
    if isinstance(e, Const):
        return repr(float(e.value)) if e.value >= 0 else "-" + repr(float(-e.value))
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, Unary):
        if e.op == "neg":
            return "-" + _wrap(e.arg, _PREC_UNARY)
        return f"{e.op}({to_string(e.arg)})"
    if e.op in ("+", "-"):
        left = _wrap(e.left, _PREC_ADD)
        right = _wrap(e.right, _PREC_ADD + 1)  # '-' is left-associative
        return f"{left} {e.op} {right}"
    if e.op in ("*", "/"):
        left = _wrap(e.left, _PREC_MUL)
        right = _wrap(e.right, _PREC_MUL + 1)
        return f"{left}{e.op}{right}"
    # '^': both operands sit at unary level in the grammar
    return f"{_wrap(e.left, _PREC_UNARY)}^{_wrap(e.right, _PREC_UNARY)}"


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _constant_value(e: Expr):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Unary) and e.op == "neg":
        inner = _constant_value(e.arg)
        return None if inner is None else -inner
    return None


def _is_integer(value: float) -> bool:
    return float(value).is_integer()


def _eval(e: Expr, getter: Callable[[int], np.ndarray], point):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return getter(e.index)
    if isinstance(e, Unary):
        a = _eval(e.arg, getter, point)
        if e.op == "neg":
            return -a
        if e.op == "sin":
            return np.sin(a)
        if e.op == "cos":
            return np.cos(a)
        if e.op == "exp":
            return np.exp(a)
        if e.op == "tanh":
            return np.tanh(a)
        if e.op == "ln":
            if np.any(np.asarray(a) <= 0.0):
                raise ExprDomainError("ln of nonpositive argument", e, point)
            return np.log(a)
        if e.op == "sqrt":
            if np.any(np.asarray(a) < 0.0):
                raise ExprDomainError("sqrt of negative argument", e, point)
            return np.sqrt(a)
        raise ValueError(f"unknown unary op {e.op!r}")
    a = _eval(e.left, getter, point)
    if e.op == "^":
        c = _constant_value(e.right)
        if c is None:
            raise ExprDomainError("exponent must be constant", e, point)
        if _is_integer(c):
            if c < 0 and np.any(np.asarray(a) == 0.0):
                raise ExprDomainError("zero base with negative exponent", e, point)
            return a ** c
        if np.any(np.asarray(a) <= 0.0):
            raise ExprDomainError("nonpositive base with non-integer exponent", e, point)
        return a ** c
    b = _eval(e.right, getter, point)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        if np.any(np.asarray(b) == 0.0):
            raise ExprDomainError("division by zero", e, point)
        return a / b
    raise ValueError(f"unknown binary op {e.op!r}")


def evaluate(e: Expr, x) -> np.ndarray:
    """Evaluate at a point (shape ``(d,)``, d <= 4) or a batch ``(n, d)``.

    Domain faults raise :class:`ExprDomainError` carrying the offending
    subexpression and point instead of silently producing NaN.
    """
    arr = np.asarray(x, dtype=float)
    dim = arr.shape[-1]
    if not 1 <= dim <= 4:
        raise ValueError(f"expected point(s) with 1..4 components, got shape {arr.shape}")

    def getter(i: int):
        if i > dim:
            raise ExprDomainError(f"variable x{i} undefined for {dim}-dimensional points", e, x)
        return arr[..., i - 1]

    result = _eval(e, getter, x)
    return result if np.ndim(result) else float(result)


def eval_univariate(e: Expr, var: int, t) -> np.ndarray:
    """Evaluate an expression of the single variable ``var`` at ``t``."""
    t_arr = np.asarray(t, dtype=float)

    def getter(i: int):
        if i != var:
            raise ExprDomainError(f"unexpected variable x{i} in univariate expression", e, t)
        return t_arr

    result = _eval(e, getter, t)
    return result if np.ndim(result) else float(result)


def free_variables(e: Expr) -> set[int]:
    """Set of variable indices appearing in the tree."""
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Unary):
        return free_variables(e.arg)
    if isinstance(e, Binary):
        return free_variables(e.left) | free_variables(e.right)
    return set()


def substitute(e: Expr, var: int, replacement: Expr) -> Expr:
    """Replace every occurrence of ``x<var>`` with ``replacement``."""
    if isinstance(e, Var):
        return replacement if e.index == var else e
    if isinstance(e, Unary):
        return Unary(e.op, substitute(e.arg, var, replacement))
    if isinstance(e, Binary):
        return Binary(e.op, substitute(e.left, var, replacement),
                      substitute(e.right, var, replacement))
    return e


# ---------------------------------------------------------------------------
# Differentiation (with light constant folding to keep trees small)
# ---------------------------------------------------------------------------

_ZERO = Const(0.0)
_ONE = Const(1.0)


def _is_const(e: Expr, value=None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


def sadd(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Binary("+", a, b)


def ssub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return sneg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Binary("-", a, b)


def smul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return _ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Binary("*", a, b)


def sdiv(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return _ZERO
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    return Binary("/", a, b)


def sneg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def spow(a: Expr, c: float) -> Expr:
    if c == 0.0:
        return _ONE
    if c == 1.0:
        return a
    if isinstance(a, Const):
        return Const(a.value ** c)
    return Binary("^", a, Const(c))


def differentiate(e: Expr, var: int) -> Expr:
    """Exact symbolic derivative with respect to ``x<var>``."""
    if isinstance(e, Const):
        return _ZERO
    if isinstance(e, Var):
        return _ONE if e.index == var else _ZERO
    if isinstance(e, Unary):
        da = differentiate(e.arg, var)
        if e.op == "neg":
            return sneg(da)
        if e.op == "sin":
            return smul(Unary("cos", e.arg), da)
        if e.op == "cos":
            return sneg(smul(Unary("sin", e.arg), da))
        if e.op == "exp":
            return smul(e, da)
        if e.op == "ln":
            return sdiv(da, e.arg)
        if e.op == "sqrt":
            return sdiv(da, smul(Const(2.0), e))
        if e.op == "tanh":
            return smul(ssub(_ONE, smul(e, e)), da)
        raise ValueError(f"unknown unary op {e.op!r}")
    if e.op == "+":
        return sadd(differentiate(e.left, var), differentiate(e.right, var))
    if e.op == "-":
        return ssub(differentiate(e.left, var), differentiate(e.right, var))
    if e.op == "*":
        return sadd(smul(differentiate(e.left, var), e.right),
                    smul(e.left, differentiate(e.right, var)))
    if e.op == "/":
        num = ssub(smul(differentiate(e.left, var), e.right),
                   smul(e.left, differentiate(e.right, var)))
        return sdiv(num, smul(e.right, e.right))
    if e.op == "^":
        c = _constant_value(e.right)
        if c is None:
            raise ValueError("cannot differentiate a non-constant exponent")
        return smul(smul(Const(c), spow(e.left, c - 1.0)),
                    differentiate(e.left, var))
    raise ValueError(f"unknown binary op {e.op!r}")


def is_zero_expr(e: Expr) -> bool:
    """True when the tree folds to the constant zero."""
    value = _constant_value(e)
    return value is not None and value == 0.0


# ---------------------------------------------------------------------------
# Univariate functions and antiderivatives
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UnivariateFn:
    """An expression restricted to a single variable index over an interval."""

    expr: Expr
    var: int
    interval: tuple[float, float]

    def __post_init__(self):
        extra = free_variables(self.expr) - {self.var}
        if extra:
            raise ValueError(
                f"univariate function of x{self.var} references x{sorted(extra)[0]}")

    def __call__(self, t):
        return eval_univariate(self.expr, self.var, t)

    def derivative(self) -> "UnivariateFn":
        return UnivariateFn(differentiate(self.expr, self.var), self.var, self.interval)

    def midpoint(self) -> float:
        lo, hi = self.interval
        return 0.5 * (lo + hi)


def adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                     tol: float = 1e-12, max_depth: int = 40) -> float:
    """Adaptive Simpson quadrature of ``f`` over ``[a, b]``.

    Deterministic and dependency-free; raises :class:`QuadratureError` if the
    recursion depth cap is hit before the error estimate drops below ``tol``.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b = b, a
        sign = -1.0
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, b, fb, m, fm, whole, tol, depth):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        if depth >= max_depth:
            raise QuadratureError("adaptive Simpson failed to converge", abs(delta) / 15.0)
        half = 0.5 * tol
        return (recurse(a, fa, m, fm, lm, flm, left, half, depth + 1)
                + recurse(m, fm, b, fb, rm, frm, right, half, depth + 1))

    return sign * recurse(a, fa, b, fb, m, fm, whole, tol, 0)


def _integral_table(e: Expr, var: int, interval) -> Expr | None:
    """Antiderivative tree for table entries; None when not covered.

    Covers linear combinations of polynomials, ``t^n``, ``1/t`` and
    sin/cos/exp of the bare variable.
    """
    t = Var(var)
    if isinstance(e, Const):
        return smul(e, t)
    if isinstance(e, Var):
        return sdiv(spow(t, 2.0), Const(2.0))
    if isinstance(e, Unary):
        if e.op == "neg":
            inner = _integral_table(e.arg, var, interval)
            return None if inner is None else sneg(inner)
        if isinstance(e.arg, Var):
            if e.op == "sin":
                return sneg(Unary("cos", t))
            if e.op == "cos":
                return Unary("sin", t)
            if e.op == "exp":
                return Unary("exp", t)
        return None
    if isinstance(e, Binary):
        if e.op in ("+", "-"):
            left = _integral_table(e.left, var, interval)
            right = _integral_table(e.right, var, interval)
            if left is None or right is None:
                return None
            return sadd(left, right) if e.op == "+" else ssub(left, right)
        if e.op == "*":
            if isinstance(e.left, Const):
                inner = _integral_table(e.right, var, interval)
                return None if inner is None else smul(e.left, inner)
            if isinstance(e.right, Const):
                inner = _integral_table(e.left, var, interval)
                return None if inner is None else smul(e.right, inner)
            return None
        if e.op == "/":
            if isinstance(e.right, Const) and e.right.value != 0.0:
                inner = _integral_table(e.left, var, interval)
                return None if inner is None else sdiv(inner, e.right)
            if isinstance(e.left, Const) and isinstance(e.right, Var):
                return smul(e.left, _log_abs(var, interval))
            return None
        if e.op == "^" and isinstance(e.left, Var):
            n = _constant_value(e.right)
            if n == -1.0:
                return _log_abs(var, interval)
            return sdiv(spow(Var(var), n + 1.0), Const(n + 1.0))
    return None


def _log_abs(var: int, interval) -> Expr:
    # ln(t) on positive intervals, ln(-t) on negative ones; an interval
    # straddling zero has no continuous antiderivative of 1/t.
    lo, hi = interval
    if lo > 0.0:
        return Unary("ln", Var(var))
    if hi < 0.0:
        return Unary("ln", sneg(Var(var)))
    raise ExprDomainError("antiderivative of 1/t on an interval containing 0",
                          Var(var), interval)


class AntiderivativeFn:
    """Evaluator ``F`` with ``F(base) = 0`` and ``F' = f``.

    Symbolic when ``f`` matches the integration table; otherwise each call
    runs adaptive Simpson from ``base`` with absolute tolerance 1e-12.
    """

    def __init__(self, fn: UnivariateFn, base: float,
                 tol: float = 1e-12, max_depth: int = 40):
        lo, hi = fn.interval
        if not (lo <= base <= hi):
            raise ValueError(f"base {base} outside interval [{lo}, {hi}]")
        self.fn = fn
        self.base = float(base)
        self.tol = tol
        self.max_depth = max_depth
        self.symbolic = _integral_table(fn.expr, fn.var, fn.interval)
        if self.symbolic is not None:
            self._offset = eval_univariate(self.symbolic, fn.var, self.base)

    @property
    def is_symbolic(self) -> bool:
        return self.symbolic is not None

    def symbolic_expr(self) -> Expr | None:
        """Shifted symbolic antiderivative (vanishing at ``base``), if any."""
        if self.symbolic is None:
            return None
        return ssub(self.symbolic, Const(self._offset))

    def describe(self) -> str:
        if self.symbolic is not None:
            return to_string(self.symbolic_expr())
        return f"quadrature-backed antiderivative of {to_string(self.fn.expr)} from {self.base}"

    def __call__(self, t):
        if self.symbolic is not None:
            return eval_univariate(self.symbolic, self.fn.var, t) - self._offset
        t_arr = np.asarray(t, dtype=float)
        scalar = lambda s: float(eval_univariate(self.fn.expr, self.fn.var, s))
        if t_arr.ndim == 0:
            return adaptive_simpson(scalar, self.base, float(t_arr),
                                    self.tol, self.max_depth)
        flat = [adaptive_simpson(scalar, self.base, float(s), self.tol, self.max_depth)
                for s in t_arr.ravel()]
        return np.array(flat).reshape(t_arr.shape)


def antiderivative(f: UnivariateFn, base: float) -> AntiderivativeFn:
    """Antiderivative of ``f`` vanishing at ``base`` (inside ``f.interval``)."""
    return AntiderivativeFn(f, base)
