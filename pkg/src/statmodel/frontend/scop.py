"""Reduction of for-loop control parts to normalized affine bounds."""

from __future__ import annotations

from typing import Optional

from ..polyhedral import AffineExpr
from .ast import (
    Assign,
    BinOp,
    Call,
    Expr,
    FloatLit,
    ForLoop,
    IncDec,
    Index,
    IntLit,
    LoopSCoP,
    Name,
    Unary,
)

_REL_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<="}


def affine_from_expr(expr: Expr) -> tuple[Optional[AffineExpr], Optional[str]]:
    """Affine form of an expression, or (None, why-not)."""
    if isinstance(expr, IntLit):
        return AffineExpr.constant(expr.value), None
    if isinstance(expr, FloatLit):
        return None, "non-integer literal"
    if isinstance(expr, Name):
        return AffineExpr.var(expr.ident), None
    if isinstance(expr, Unary):
        if expr.op == "-":
            inner, why = affine_from_expr(expr.operand)
            return (None, why) if inner is None else (-inner, None)
        if expr.op == "+":
            return affine_from_expr(expr.operand)
        return None, f"operator '{expr.op}'"
    if isinstance(expr, BinOp):
        if expr.op in ("+", "-"):
            left, why = affine_from_expr(expr.left)
            if left is None:
                return None, why
            right, why = affine_from_expr(expr.right)
            if right is None:
                return None, why
            return (left + right if expr.op == "+" else left - right), None
        if expr.op == "*":
            left, lwhy = affine_from_expr(expr.left)
            right, rwhy = affine_from_expr(expr.right)
            if left is None or right is None:
                return None, lwhy or rwhy
            if left.is_constant:
                return right.scale(left.const), None
            if right.is_constant:
                return left.scale(right.const), None
            return None, "product of two variables"
        return None, f"operator '{expr.op}'"
    if isinstance(expr, Call):
        return None, "function call"
    if isinstance(expr, Index):
        return None, "array read"
    if isinstance(expr, Assign) or isinstance(expr, IncDec):
        return None, "assignment"
    return None, type(expr).__name__


def _step_from_expr(index: str, expr: Expr) -> tuple[Optional[int], Optional[str]]:
    if isinstance(expr, IncDec):
        if expr.target.ident != index:
            return None, "step updates a different variable"
        return (1 if expr.op == "++" else -1), None
    if isinstance(expr, Assign):
        if not isinstance(expr.target, Name) or expr.target.ident != index:
            return None, "step updates a different variable"
        if expr.op in ("+=", "-="):
            if isinstance(expr.value, IntLit):
                k = expr.value.value
                if k == 0:
                    return None, "zero step"
                return (k if expr.op == "+=" else -k), None
            return None, "non-constant step"
        if expr.op == "=":
            v = expr.value
            if isinstance(v, BinOp) and v.op in ("+", "-"):
                if isinstance(v.left, Name) and v.left.ident == index and isinstance(v.right, IntLit):
                    k = v.right.value
                elif (
                    v.op == "+"
                    and isinstance(v.right, Name)
                    and v.right.ident == index
                    and isinstance(v.left, IntLit)
                ):
                    k = v.left.value
                else:
                    return None, "step is not index +/- constant"
                if k == 0:
                    return None, "zero step"
                return (k if v.op == "+" else -k), None
            return None, "step is not index +/- constant"
    return None, "unrecognized step expression"


def extract_scop(loop: ForLoop, enclosing_indices: frozenset[str] = frozenset()):
    """Return a LoopSCoP (possibly with unanalyzable parts) or a failure string.

    Bounds are normalized to inclusive endpoints (`i < U` becomes upper U-1).
    Free bound variables that are not enclosing loop indices are recorded as
    symbolic parameters. Failure strings cover shape-level problems where no
    per-part annotation could help.
    """
    init = loop.init
    if not isinstance(init, Assign) or init.op != "=" or not isinstance(init.target, Name):
        return "loop initialization is not a simple assignment"
    index = init.target.ident

    cond = loop.cond
    if not isinstance(cond, BinOp) or cond.op not in ("<", "<=", ">", ">="):
        return "loop condition is not a relational comparison"
    if isinstance(cond.left, Name) and cond.left.ident == index:
        comparison, bound_expr = cond.op, cond.right
    elif isinstance(cond.right, Name) and cond.right.ident == index:
        comparison, bound_expr = _REL_FLIP[cond.op], cond.left
    else:
        return "loop condition does not test the loop index"

    step, step_reason = _step_from_expr(index, loop.step_expr)
    reasons: dict[str, str] = {}
    if step is None:
        reasons["step"] = step_reason or "unanalyzable step"
    elif step > 0 and comparison not in ("<", "<="):
        return "loop direction mismatch (increasing step with a lower-bound test)"
    elif step < 0 and comparison not in (">", ">="):
        return "loop direction mismatch (decreasing step with an upper-bound test)"

    init_affine, init_reason = affine_from_expr(init.value)
    bound_affine, bound_reason = affine_from_expr(bound_expr)
    if bound_affine is not None:
        if comparison == "<":
            bound_affine = bound_affine - 1
        elif comparison == ">":
            bound_affine = bound_affine + 1

    increasing = step is None or step > 0
    if increasing:
        lower, upper = init_affine, bound_affine
        if init_affine is None:
            reasons["lower"] = init_reason or "unanalyzable"
        if bound_affine is None:
            reasons["upper"] = bound_reason or "unanalyzable"
    else:
        lower, upper = bound_affine, init_affine
        if bound_affine is None:
            reasons["lower"] = bound_reason or "unanalyzable"
        if init_affine is None:
            reasons["upper"] = init_reason or "unanalyzable"

    params: set[str] = set()
    for part_name, part in (("lower", lower), ("upper", upper)):
        if part is None:
            continue
        if index in part.vars():
            if part_name == "lower":
                lower = None
            else:
                upper = None
            reasons[part_name] = "bound references the loop's own index"
            continue
        params |= part.vars() - enclosing_indices
    return LoopSCoP(index, lower, upper, step, comparison, frozenset(params), reasons)
