"""AST for the supported C subset, with source-span attribution throughout."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from ..polyhedral import AffineExpr


@dataclass(frozen=True)
class SrcSpan:
    line: int
    col: int
    end_line: int
    end_col: int

    def lines(self) -> frozenset[int]:
        return frozenset(range(self.line, self.end_line + 1))


# --- expressions -------------------------------------------------------------


@dataclass
class Expr:
    span: SrcSpan


@dataclass
class IntLit(Expr):
    value: int


@dataclass
class FloatLit(Expr):
    text: str


@dataclass
class Name(Expr):
    ident: str


@dataclass
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Assign(Expr):
    target: Expr  # Name or Index
    op: str  # =, +=, -=, *=, /=
    value: Expr


@dataclass
class Call(Expr):
    name: str
    args: list[Expr]
    receiver: Optional[Expr] = None  # obj.method(...) keeps the object


@dataclass
class Index(Expr):
    base: Expr
    index: Expr


@dataclass
class IncDec(Expr):
    target: Name
    op: str  # ++ or --


# --- annotations ---------------------------------------------------------------

ANNOTATION_KINDS = ("iteration_count", "percentage", "lp_init", "lp_cond", "skip")


@dataclass
class Annotation:
    """One parsed key from a `#pragma @Annotation {...}` directive."""

    kind: str
    value: Union[int, Fraction, str, bool]
    line: int
    attach_site: Optional[int] = None  # statement id, set when attached


# --- statements ----------------------------------------------------------------


@dataclass
class Stmt:
    span: SrcSpan
    stmt_id: int = field(default=-1, init=False)
    annotations: list[Annotation] = field(default_factory=list, init=False)
    # Lines the statement's own tokens occupy, excluding nested sub-statements;
    # instruction attribution claims these. Filled by the bottom-up pass.
    head_lines: frozenset[int] = field(default=frozenset(), init=False)
    # Full line set including nested statements. Filled by the bottom-up pass.
    all_lines: frozenset[int] = field(default=frozenset(), init=False)


@dataclass
class Block(Stmt):
    stmts: list[Stmt]


@dataclass
class Decl(Stmt):
    type_tag: str
    name: str
    array_size: Optional[int] = None
    init: Optional[Expr] = None


@dataclass
class ExprStmt(Stmt):
    expr: Expr


@dataclass
class CallStmt(Stmt):
    call: Call


@dataclass
class Return(Stmt):
    value: Optional[Expr] = None


@dataclass
class ForLoop(Stmt):
    init: Assign
    cond: Expr
    step_expr: Expr
    body: Stmt
    scop: Optional["LoopSCoP"] = None
    scop_failure: Optional[str] = None


@dataclass
class IfStmt(Stmt):
    cond: Expr
    then: Stmt
    orelse: Optional[Stmt] = None
    cond_text: str = ""  # condition source text, kept verbatim


# --- loop static control parts --------------------------------------------------


@dataclass
class LoopSCoP:
    """Normalized loop bounds: inclusive, affine where analyzable.

    `lower`/`upper` are iteration endpoints (start/stop for increasing loops,
    stop/start for decreasing ones); `step` keeps its sign. Parts that could
    not be reduced to affine form are None with the blocking reason recorded
    in `reasons`, so annotations can fill them in later.
    """

    index: str
    lower: Optional[AffineExpr]
    upper: Optional[AffineExpr]
    step: Optional[int]
    comparison: str  # <, <=, >, >=
    params: frozenset[str] = frozenset()
    reasons: dict = field(default_factory=dict)  # part name -> reason

    @property
    def is_complete(self) -> bool:
        return self.lower is not None and self.upper is not None and self.step is not None


# --- declarations ----------------------------------------------------------------


@dataclass
class ParamDecl:
    name: str
    type_tag: str
    is_array: bool = False


@dataclass
class FunctionDecl:
    name: str
    class_name: Optional[str]
    params: list[ParamDecl]
    body: Block
    return_type: str
    span: SrcSpan

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def mangled_name(self) -> str:
        prefix = f"{self.class_name}_" if self.class_name else ""
        return f"{prefix}{self.name}_{self.arity}"


@dataclass
class SourceUnit:
    file_name: str
    functions: list[FunctionDecl]
    line_count: int
    # statement id -> full source line set; filled by the bottom-up pass
    line_index: dict[int, frozenset[int]] = field(default_factory=dict)


def walk_statements(root: Stmt):
    """Pre-order iteration over a statement tree."""
    yield root
    if isinstance(root, Block):
        for s in root.stmts:
            yield from walk_statements(s)
    elif isinstance(root, ForLoop):
        yield from walk_statements(root.body)
    elif isinstance(root, IfStmt):
        yield from walk_statements(root.then)
        if root.orelse is not None:
            yield from walk_statements(root.orelse)


def walk_expressions(expr: Expr):
    yield expr
    if isinstance(expr, BinOp):
        yield from walk_expressions(expr.left)
        yield from walk_expressions(expr.right)
    elif isinstance(expr, Unary):
        yield from walk_expressions(expr.operand)
    elif isinstance(expr, Assign):
        yield from walk_expressions(expr.target)
        yield from walk_expressions(expr.value)
    elif isinstance(expr, Call):
        if expr.receiver is not None:
            yield from walk_expressions(expr.receiver)
        for a in expr.args:
            yield from walk_expressions(a)
    elif isinstance(expr, Index):
        yield from walk_expressions(expr.base)
        yield from walk_expressions(expr.index)
    elif isinstance(expr, IncDec):
        yield from walk_expressions(expr.target)
