"""Symbolic iteration-count expressions.

A CountExpr is an integer expression tree over model parameters. The node
set is deliberately small:

    IntConst  literal integer (negatives allowed as intermediates)
    Param     free model parameter, bound at evaluation time
    Var       iteration variable bound by an enclosing LazySum
    Add/Mul   n-ary sum / product
    Pow       integer power, exponent >= 2
    FloorDiv  floor division by a positive integer constant
    Max0      max(x, 0), the empty-range clamp
    LazySum   sum of `body` for var = lower, lower+step, ... <= upper,
              evaluated by iteration

Expressions produced by the counting engine evaluate to a non-negative
integer under every total parameter binding. The canonical text form is a
prefix s-expression, e.g. ``(max0 (param N))``; see `to_sexpr`/`parse_sexpr`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

from ..errors import MalformedModel, UnboundParameter


class CountExpr:
    """Base class; instances are immutable and hashable."""

    def params(self) -> frozenset[str]:
        """Free parameter names (Var nodes bound by LazySum are excluded)."""
        free: set[str] = set()
        _collect_free(self, free, set())
        return frozenset(free)

    def free_names(self) -> frozenset[str]:
        """Free Param *and* Var names."""
        free: set[str] = set()
        _collect_free(self, free, set(), include_vars=True)
        return frozenset(free)


@dataclass(frozen=True)
class IntConst(CountExpr):
    value: int


@dataclass(frozen=True)
class Param(CountExpr):
    name: str


@dataclass(frozen=True)
class Var(CountExpr):
    name: str


@dataclass(frozen=True)
class Add(CountExpr):
    args: tuple[CountExpr, ...]


@dataclass(frozen=True)
class Mul(CountExpr):
    args: tuple[CountExpr, ...]


@dataclass(frozen=True)
class Pow(CountExpr):
    base: CountExpr
    exponent: int


@dataclass(frozen=True)
class FloorDiv(CountExpr):
    numerator: CountExpr
    denominator: int


@dataclass(frozen=True)
class Max0(CountExpr):
    arg: CountExpr


@dataclass(frozen=True)
class LazySum(CountExpr):
    var: str
    lower: CountExpr
    upper: CountExpr
    step: int
    body: CountExpr


ZERO = IntConst(0)
ONE = IntConst(1)


def cint(v: int) -> IntConst:
    return IntConst(v)


def cadd(*args: CountExpr) -> CountExpr:
    """Flattening, constant-folding sum."""
    flat: list[CountExpr] = []
    const = 0
    for a in args:
        if isinstance(a, IntConst):
            const += a.value
        elif isinstance(a, Add):
            for b in a.args:
                if isinstance(b, IntConst):
                    const += b.value
                else:
                    flat.append(b)
        else:
            flat.append(a)
    if const != 0 or not flat:
        flat.append(IntConst(const))
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def cmul(*args: CountExpr) -> CountExpr:
    """Flattening, constant-folding product."""
    flat: list[CountExpr] = []
    const = 1
    for a in args:
        if isinstance(a, IntConst):
            const *= a.value
        elif isinstance(a, Mul):
            for b in a.args:
                if isinstance(b, IntConst):
                    const *= b.value
                else:
                    flat.append(b)
        else:
            flat.append(a)
    if const == 0:
        return ZERO
    if const != 1 or not flat:
        flat.append(IntConst(const))
    if len(flat) == 1:
        return flat[0]
    # keep the constant factor in front for readable output
    flat.sort(key=lambda e: 0 if isinstance(e, IntConst) else 1)
    return Mul(tuple(flat))


def csub(a: CountExpr, b: CountExpr) -> CountExpr:
    return cadd(a, cmul(IntConst(-1), b))


def cmax0(arg: CountExpr) -> CountExpr:
    if isinstance(arg, IntConst):
        return IntConst(max(arg.value, 0))
    if isinstance(arg, Max0):
        return arg
    return Max0(arg)


def cfloordiv(num: CountExpr, den: int) -> CountExpr:
    if den <= 0:
        raise ValueError("floordiv denominator must be positive")
    if den == 1:
        return num
    if isinstance(num, IntConst):
        return IntConst(num.value // den)
    return FloorDiv(num, den)


def cpow(base: CountExpr, exponent: int) -> CountExpr:
    if exponent < 0:
        raise ValueError("negative exponent")
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, IntConst):
        return IntConst(base.value**exponent)
    return Pow(base, exponent)


def indicator_positive(arg: CountExpr) -> CountExpr:
    """1 if arg >= 1 else 0, for integer arg: max0(x) - max0(x - 1)."""
    if isinstance(arg, IntConst):
        return ONE if arg.value >= 1 else ZERO
    return csub(cmax0(arg), cmax0(cadd(arg, IntConst(-1))))


def indicator_nonnegative(arg: CountExpr) -> CountExpr:
    """1 if arg >= 0 else 0."""
    return indicator_positive(cadd(arg, ONE))


def cmin2(a: CountExpr, b: CountExpr) -> CountExpr:
    """min(a, b) == a - max0(a - b)."""
    if isinstance(a, IntConst) and isinstance(b, IntConst):
        return IntConst(min(a.value, b.value))
    return csub(a, cmax0(csub(a, b)))


def cmax2(a: CountExpr, b: CountExpr) -> CountExpr:
    """max(a, b) == a + max0(b - a)."""
    if isinstance(a, IntConst) and isinstance(b, IntConst):
        return IntConst(max(a.value, b.value))
    return cadd(a, cmax0(csub(b, a)))


def _collect_free(
    expr: CountExpr, out: set[str], bound: set[str], include_vars: bool = False
) -> None:
    if isinstance(expr, Param):
        out.add(expr.name)
    elif isinstance(expr, Var):
        if expr.name not in bound and include_vars:
            out.add(expr.name)
    elif isinstance(expr, Add) or isinstance(expr, Mul):
        for a in expr.args:
            _collect_free(a, out, bound, include_vars)
    elif isinstance(expr, Pow):
        _collect_free(expr.base, out, bound, include_vars)
    elif isinstance(expr, FloorDiv):
        _collect_free(expr.numerator, out, bound, include_vars)
    elif isinstance(expr, Max0):
        _collect_free(expr.arg, out, bound, include_vars)
    elif isinstance(expr, LazySum):
        _collect_free(expr.lower, out, bound, include_vars)
        _collect_free(expr.upper, out, bound, include_vars)
        _collect_free(expr.body, out, bound | {expr.var}, include_vars)


def references_var(expr: CountExpr, name: str) -> bool:
    if isinstance(expr, Var):
        return expr.name == name
    if isinstance(expr, (Add, Mul)):
        return any(references_var(a, name) for a in expr.args)
    if isinstance(expr, Pow):
        return references_var(expr.base, name)
    if isinstance(expr, FloorDiv):
        return references_var(expr.numerator, name)
    if isinstance(expr, Max0):
        return references_var(expr.arg, name)
    if isinstance(expr, LazySum):
        if references_var(expr.lower, name) or references_var(expr.upper, name):
            return True
        return expr.var != name and references_var(expr.body, name)
    return False


def eval_count(expr: CountExpr, binding: Mapping[str, int]) -> int:
    """Evaluate under a total parameter binding; exact integer arithmetic."""
    missing = expr.params() - set(binding)
    if missing:
        raise UnboundParameter(missing)
    return _eval(expr, dict(binding))


def _eval(expr: CountExpr, env: dict[str, int]) -> int:
    if isinstance(expr, IntConst):
        return expr.value
    if isinstance(expr, Param) or isinstance(expr, Var):
        try:
            return env[expr.name]
        except KeyError:
            raise UnboundParameter([expr.name]) from None
    if isinstance(expr, Add):
        return sum(_eval(a, env) for a in expr.args)
    if isinstance(expr, Mul):
        out = 1
        for a in expr.args:
            out *= _eval(a, env)
        return out
    if isinstance(expr, Pow):
        return _eval(expr.base, env) ** expr.exponent
    if isinstance(expr, FloorDiv):
        return _eval(expr.numerator, env) // expr.denominator
    if isinstance(expr, Max0):
        return max(_eval(expr.arg, env), 0)
    if isinstance(expr, LazySum):
        lo = _eval(expr.lower, env)
        hi = _eval(expr.upper, env)
        total = 0
        saved = env.get(expr.var)
        for v in range(lo, hi + 1, expr.step):
            env[expr.var] = v
            total += _eval(expr.body, env)
        if saved is None:
            env.pop(expr.var, None)
        else:
            env[expr.var] = saved
        return total
    raise TypeError(f"not a CountExpr: {expr!r}")


# --- canonical text form --------------------------------------------------


def to_sexpr(expr: CountExpr) -> str:
    if isinstance(expr, IntConst):
        return f"(int {expr.value})"
    if isinstance(expr, Param):
        return f"(param {expr.name})"
    if isinstance(expr, Var):
        return f"(var {expr.name})"
    if isinstance(expr, Add):
        return "(add " + " ".join(to_sexpr(a) for a in expr.args) + ")"
    if isinstance(expr, Mul):
        return "(mul " + " ".join(to_sexpr(a) for a in expr.args) + ")"
    if isinstance(expr, Pow):
        return f"(pow {to_sexpr(expr.base)} {expr.exponent})"
    if isinstance(expr, FloorDiv):
        return f"(floordiv {to_sexpr(expr.numerator)} {expr.denominator})"
    if isinstance(expr, Max0):
        return f"(max0 {to_sexpr(expr.arg)})"
    if isinstance(expr, LazySum):
        return (
            f"(lazysum {expr.var} {to_sexpr(expr.lower)} {to_sexpr(expr.upper)} "
            f"{expr.step} {to_sexpr(expr.body)})"
        )
    raise TypeError(f"not a CountExpr: {expr!r}")


def _tokenize_sexpr(text: str) -> Iterator[str]:
    token = ""
    for ch in text:
        if ch in "()":
            if token:
                yield token
                token = ""
            yield ch
        elif ch.isspace():
            if token:
                yield token
                token = ""
        else:
            token += ch
    if token:
        yield token


def parse_sexpr(text: str) -> CountExpr:
    """Parse the canonical prefix form; raises MalformedModel on bad input."""
    tokens = list(_tokenize_sexpr(text))
    pos = 0

    def fail(msg: str) -> None:
        raise MalformedModel(f"bad count expression: {msg} in {text!r}")

    def next_token() -> str:
        nonlocal pos
        if pos >= len(tokens):
            fail("unexpected end")
        tok = tokens[pos]
        pos += 1
        return tok

    def parse_int(tok: str) -> int:
        try:
            return int(tok)
        except ValueError:
            fail(f"expected integer, got {tok!r}")
            raise AssertionError  # unreachable

    def parse_node() -> CountExpr:
        if next_token() != "(":
            fail("expected '('")
        head = next_token()
        node: CountExpr
        if head == "int":
            node = IntConst(parse_int(next_token()))
        elif head == "param":
            node = Param(next_token())
        elif head == "var":
            node = Var(next_token())
        elif head in ("add", "mul"):
            args = []
            while tokens[pos] != ")":
                args.append(parse_node())
            if len(args) < 2:
                fail(f"'{head}' needs at least two arguments")
            node = Add(tuple(args)) if head == "add" else Mul(tuple(args))
        elif head == "pow":
            base = parse_node()
            node = Pow(base, parse_int(next_token()))
        elif head == "floordiv":
            num = parse_node()
            den = parse_int(next_token())
            if den <= 0:
                fail("floordiv denominator must be positive")
            node = FloorDiv(num, den)
        elif head == "max0":
            node = Max0(parse_node())
        elif head == "lazysum":
            var = next_token()
            lower = parse_node()
            upper = parse_node()
            step = parse_int(next_token())
            if step <= 0:
                fail("lazysum step must be positive")
            body = parse_node()
            node = LazySum(var, lower, upper, step, body)
        else:
            fail(f"unknown node '{head}'")
            raise AssertionError
        if next_token() != ")":
            fail("expected ')'")
        return node

    node = parse_node()
    if pos != len(tokens):
        fail("trailing tokens")
    return node


def to_python_expr(expr: CountExpr, rename: Mapping[str, str] | None = None) -> str:
    """Render as a plain-Python integer expression (used by model export).

    LazySum variables are emitted with a leading underscore so they can never
    shadow a model parameter.
    """
    rename = dict(rename or {})

    def go(e: CountExpr) -> str:
        if isinstance(e, IntConst):
            return str(e.value) if e.value >= 0 else f"({e.value})"
        if isinstance(e, Param):
            return rename.get(e.name, e.name)
        if isinstance(e, Var):
            return rename.get(e.name, e.name)
        if isinstance(e, Add):
            return "(" + " + ".join(go(a) for a in e.args) + ")"
        if isinstance(e, Mul):
            return "(" + " * ".join(go(a) for a in e.args) + ")"
        if isinstance(e, Pow):
            return f"({go(e.base)} ** {e.exponent})"
        if isinstance(e, FloorDiv):
            return f"({go(e.numerator)} // {e.denominator})"
        if isinstance(e, Max0):
            return f"max({go(e.arg)}, 0)"
        if isinstance(e, LazySum):
            inner = dict(rename)
            inner[e.var] = f"_{e.var}"
            body = to_python_expr(e.body, inner)
            lo = go(e.lower)  # bounds never reference the sum's own variable
            hi = go(e.upper)
            return (
                f"sum(({body}) for _{e.var} in "
                f"range({lo}, ({hi}) + 1, {e.step}))"
            )
        raise TypeError(f"not a CountExpr: {e!r}")

    return go(expr)
