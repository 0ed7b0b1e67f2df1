"""Canonical source rendering of an AST; re-parsing it reproduces the AST."""

from __future__ import annotations

from fractions import Fraction

from .ast import (
    Annotation,
    Assign,
    BinOp,
    Block,
    Call,
    CallStmt,
    Decl,
    Expr,
    ExprStmt,
    FloatLit,
    ForLoop,
    FunctionDecl,
    IfStmt,
    IncDec,
    IntLit,
    Index,
    Name,
    Return,
    SourceUnit,
    Stmt,
    Unary,
)

_KIND_TO_KEY = {
    "iteration_count": "iters",
    "percentage": "pct",
    "lp_init": "lp_init",
    "lp_cond": "lp_cond",
    "skip": "skip",
}


def pretty_expr(expr: Expr) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, FloatLit):
        return expr.text
    if isinstance(expr, Name):
        return expr.ident
    if isinstance(expr, BinOp):
        return f"({pretty_expr(expr.left)} {expr.op} {pretty_expr(expr.right)})"
    if isinstance(expr, Unary):
        return f"({expr.op}{pretty_expr(expr.operand)})"
    if isinstance(expr, Assign):
        return f"{pretty_expr(expr.target)} {expr.op} {pretty_expr(expr.value)}"
    if isinstance(expr, Call):
        args = ", ".join(pretty_expr(a) for a in expr.args)
        recv = f"{pretty_expr(expr.receiver)}." if expr.receiver is not None else ""
        return f"{recv}{expr.name}({args})"
    if isinstance(expr, Index):
        return f"{pretty_expr(expr.base)}[{pretty_expr(expr.index)}]"
    if isinstance(expr, IncDec):
        return f"{expr.target.ident}{expr.op}"
    raise TypeError(f"unknown expression {expr!r}")


def _annotation_value(ann: Annotation) -> str:
    if ann.kind == "skip":
        return "yes"
    if isinstance(ann.value, Fraction):
        return f"{ann.value.numerator}/{ann.value.denominator}"
    return str(ann.value)


def pretty_stmt(stmt: Stmt, indent: int = 0) -> list[str]:
    pad = "    " * indent
    out: list[str] = []
    for ann in stmt.annotations:
        key = _KIND_TO_KEY[ann.kind]
        out.append(f"{pad}#pragma @Annotation {{{key}:{_annotation_value(ann)}}}")
    if isinstance(stmt, Block):
        out.append(pad + "{")
        for s in stmt.stmts:
            out.extend(pretty_stmt(s, indent + 1))
        out.append(pad + "}")
    elif isinstance(stmt, Decl):
        size = f"[{stmt.array_size}]" if stmt.array_size is not None else ""
        init = f" = {pretty_expr(stmt.init)}" if stmt.init is not None else ""
        out.append(f"{pad}{stmt.type_tag} {stmt.name}{size}{init};")
    elif isinstance(stmt, (ExprStmt, CallStmt)):
        expr = stmt.call if isinstance(stmt, CallStmt) else stmt.expr
        out.append(f"{pad}{pretty_expr(expr)};")
    elif isinstance(stmt, Return):
        if stmt.value is None:
            out.append(pad + "return;")
        else:
            out.append(f"{pad}return {pretty_expr(stmt.value)};")
    elif isinstance(stmt, ForLoop):
        head = (
            f"{pad}for ({pretty_expr(stmt.init)}; {pretty_expr(stmt.cond)}; "
            f"{pretty_expr(stmt.step_expr)})"
        )
        out.append(head)
        out.extend(pretty_stmt(stmt.body, indent + 1 if not isinstance(stmt.body, Block) else indent))
    elif isinstance(stmt, IfStmt):
        out.append(f"{pad}if ({pretty_expr(stmt.cond)})")
        out.extend(pretty_stmt(stmt.then, indent + 1 if not isinstance(stmt.then, Block) else indent))
        if stmt.orelse is not None:
            out.append(pad + "else")
            out.extend(
                pretty_stmt(stmt.orelse, indent + 1 if not isinstance(stmt.orelse, Block) else indent)
            )
    else:
        raise TypeError(f"unknown statement {stmt!r}")
    return out


def pretty_function(fn: FunctionDecl, indent: int = 0) -> list[str]:
    pad = "    " * indent
    params = ", ".join(
        f"{p.type_tag} {p.name}" + ("[]" if p.is_array else "") for p in fn.params
    )
    out = [f"{pad}{fn.return_type} {fn.name}({params})"]
    out.extend(pretty_stmt(fn.body, indent))
    return out


def pretty_print(unit: SourceUnit) -> str:
    """Render a whole unit as canonical source text."""
    lines: list[str] = []
    by_class: dict[str | None, list[FunctionDecl]] = {}
    order: list[str | None] = []
    for fn in unit.functions:
        if fn.class_name not in by_class:
            by_class[fn.class_name] = []
            order.append(fn.class_name)
        by_class[fn.class_name].append(fn)
    for class_name in order:
        fns = by_class[class_name]
        if class_name is None:
            for fn in fns:
                lines.extend(pretty_function(fn))
        else:
            lines.append(f"class {class_name} {{")
            lines.append("    public:")
            for fn in fns:
                lines.extend(pretty_function(fn, 1))
            lines.append("};")
    return "\n".join(lines) + "\n"


def structurally_equal(a, b) -> bool:
    """Structural AST equality ignoring spans, ids and attachment bookkeeping."""
    return _shape(a) == _shape(b)


def _shape(node):
    if isinstance(node, SourceUnit):
        return ("unit", tuple(_shape(f) for f in node.functions))
    if isinstance(node, FunctionDecl):
        return (
            "func",
            node.name,
            node.class_name,
            node.return_type,
            tuple((p.name, p.type_tag, p.is_array) for p in node.params),
            _shape(node.body),
        )
    if isinstance(node, Block):
        return ("block", tuple(_shape(s) for s in node.stmts), _anns(node))
    if isinstance(node, Decl):
        return ("decl", node.type_tag, node.name, node.array_size, _shape_opt(node.init), _anns(node))
    if isinstance(node, ExprStmt):
        return ("expr", _shape(node.expr), _anns(node))
    if isinstance(node, CallStmt):
        return ("callstmt", _shape(node.call), _anns(node))
    if isinstance(node, Return):
        return ("return", _shape_opt(node.value), _anns(node))
    if isinstance(node, ForLoop):
        return (
            "for",
            _shape(node.init),
            _shape(node.cond),
            _shape(node.step_expr),
            _shape(node.body),
            _anns(node),
        )
    if isinstance(node, IfStmt):
        return ("if", _shape(node.cond), _shape(node.then), _shape_opt(node.orelse), _anns(node))
    if isinstance(node, IntLit):
        return ("int", node.value)
    if isinstance(node, FloatLit):
        return ("float", node.text)
    if isinstance(node, Name):
        return ("name", node.ident)
    if isinstance(node, BinOp):
        return ("binop", node.op, _shape(node.left), _shape(node.right))
    if isinstance(node, Unary):
        return ("unary", node.op, _shape(node.operand))
    if isinstance(node, Assign):
        return ("assign", node.op, _shape(node.target), _shape(node.value))
    if isinstance(node, Call):
        return ("call", node.name, _shape_opt(node.receiver), tuple(_shape(a) for a in node.args))
    if isinstance(node, Index):
        return ("index", _shape(node.base), _shape(node.index))
    if isinstance(node, IncDec):
        return ("incdec", node.op, node.target.ident)
    raise TypeError(f"unknown node {node!r}")


def _shape_opt(node):
    return None if node is None else _shape(node)


def _anns(stmt: Stmt):
    return tuple(sorted((a.kind, str(a.value)) for a in stmt.annotations))
