"""C-subset source frontend: parsing, SCoP extraction, annotations."""

from .annotations import merge_annotations, parse_annotation
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
    LoopSCoP,
    Name,
    ParamDecl,
    Return,
    SourceUnit,
    SrcSpan,
    Stmt,
    Unary,
    walk_expressions,
    walk_statements,
)
from .parser import parse_source
from .pretty import pretty_print, structurally_equal
from .scop import affine_from_expr, extract_scop

__all__ = [
    "Annotation",
    "Assign",
    "BinOp",
    "Block",
    "Call",
    "CallStmt",
    "Decl",
    "Expr",
    "ExprStmt",
    "FloatLit",
    "ForLoop",
    "FunctionDecl",
    "IfStmt",
    "IncDec",
    "IntLit",
    "Index",
    "LoopSCoP",
    "Name",
    "ParamDecl",
    "Return",
    "SourceUnit",
    "SrcSpan",
    "Stmt",
    "Unary",
    "affine_from_expr",
    "extract_scop",
    "merge_annotations",
    "parse_annotation",
    "parse_source",
    "pretty_print",
    "structurally_equal",
    "walk_expressions",
    "walk_statements",
]
