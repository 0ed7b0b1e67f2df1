"""Affine iteration domains and exact symbolic lattice-point counting."""

from .affine import AffineExpr
from .countexpr import (
    Add,
    CountExpr,
    FloorDiv,
    IntConst,
    LazySum,
    Max0,
    Mul,
    Param,
    Pow,
    Var,
    cadd,
    cfloordiv,
    cmax0,
    cmul,
    cpow,
    csub,
    eval_count,
    parse_sexpr,
    to_python_expr,
    to_sexpr,
)
from .counting import (
    ConstraintSystem,
    Level,
    LoopNestDomain,
    complement_count,
    count_enumerate,
    count_symbolic,
    domain_from_scops,
    intersect_branch,
    negate_constraint,
)

__all__ = [
    "AffineExpr",
    "Add",
    "ConstraintSystem",
    "CountExpr",
    "FloorDiv",
    "IntConst",
    "LazySum",
    "Level",
    "LoopNestDomain",
    "Max0",
    "Mul",
    "Param",
    "Pow",
    "Var",
    "cadd",
    "cfloordiv",
    "cmax0",
    "cmul",
    "cpow",
    "csub",
    "complement_count",
    "count_enumerate",
    "count_symbolic",
    "domain_from_scops",
    "eval_count",
    "intersect_branch",
    "negate_constraint",
    "parse_sexpr",
    "to_python_expr",
    "to_sexpr",
]
