"""Two-pass AST analysis fusing source structure, iteration counts,
annotations and line-attributed instruction evidence into per-function
parametric metric vectors.

Pass one (`collect_bottom_up`) propagates line sets up the tree and pins the
per-statement attribution claims. Pass two (`generate_top_down`) walks each
function with a multiplier context: loop heads push their iteration count,
branches split it per strategy (domain intersection, complement rule, or
annotation), and every statement contributes
`instruction categories x current multiplier` to the function's vector.
"""

from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .binary.archdesc import ArchDescription, categorize
from .binary.disasm import InstructionRecord
from .binary.linemap import UNATTRIBUTED
from .errors import AnnotationMismatch
from .frontend.ast import (
    Annotation,
    Block,
    Call,
    CallStmt,
    Decl,
    ExprStmt,
    ForLoop,
    FunctionDecl,
    IfStmt,
    LoopSCoP,
    Return,
    SourceUnit,
    Stmt,
    walk_expressions,
    walk_statements,
)
from .frontend.scop import affine_from_expr
from .polyhedral import (
    AffineExpr,
    CountExpr,
    IntConst,
    cadd,
    cfloordiv,
    cmax0,
    cmul,
    complement_count,
    count_symbolic,
    csub,
    domain_from_scops,
    negate_constraint,
)

MetricVector = dict[str, CountExpr]


def vector_add(vector: MetricVector, category: str, contribution: CountExpr) -> None:
    if contribution == IntConst(0):
        return
    prior = vector.get(category)
    vector[category] = contribution if prior is None else cadd(prior, contribution)


def compose_call(
    caller: MetricVector, callee: MetricVector, iterations: CountExpr
) -> MetricVector:
    """result[c] = caller[c] + iterations * callee[c], category-wise."""
    out: MetricVector = dict(caller)
    for category, count in callee.items():
        vector_add(out, category, cmul(iterations, count))
    return out


@dataclass
class ParamSpec:
    name: str
    source_line: int | None = None


@dataclass
class CallSite:
    callee_name: str
    arity: int
    line: int
    multiplier: CountExpr
    callee_mangled: str | None = None
    external: bool = False


@dataclass
class Gap:
    line: int
    reason: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.reason}"


@dataclass
class FunctionMetrics:
    mangled_name: str
    source_file: str
    line: int
    params: list[ParamSpec] = field(default_factory=list)
    body: MetricVector = field(default_factory=dict)
    call_sites: list[CallSite] = field(default_factory=list)
    gaps: list[Gap] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


@dataclass
class AnalysisResult:
    functions: list[FunctionMetrics]
    notes: list[str] = field(default_factory=list)

    @property
    def gaps(self) -> list[tuple[str, Gap]]:
        return [(fn.mangled_name, g) for fn in self.functions for g in fn.gaps]


# --- pass one: bottom-up ---------------------------------------------------------


def collect_bottom_up(unit: SourceUnit) -> SourceUnit:
    """Fill per-statement line sets and the unit's statement-line index.

    Leaf statements claim their whole span; loop and branch heads claim only
    their header tokens so nested statements keep their own lines.
    """
    for fn in unit.functions:
        _collect_lines(fn.body)
    unit.line_index = {
        s.stmt_id: s.all_lines for fn in unit.functions for s in walk_statements(fn.body)
    }
    for stmt_id, lines in unit.line_index.items():
        if not lines:
            raise AssertionError(f"statement {stmt_id} has no source lines")
        if max(lines) > unit.line_count:
            raise AssertionError(f"statement {stmt_id} extends past end of file")
    return unit


def _collect_lines(stmt: Stmt) -> frozenset[int]:
    span_lines = stmt.span.lines()
    if isinstance(stmt, Block):
        child = frozenset()
        for s in stmt.stmts:
            child |= _collect_lines(s)
        stmt.head_lines = frozenset()
        stmt.all_lines = span_lines | child
    elif isinstance(stmt, ForLoop):
        body = _collect_lines(stmt.body)
        head = (
            {stmt.span.line}
            | stmt.init.span.lines()
            | stmt.cond.span.lines()
            | stmt.step_expr.span.lines()
        )
        stmt.head_lines = frozenset(head)
        stmt.all_lines = span_lines | body
    elif isinstance(stmt, IfStmt):
        arms = _collect_lines(stmt.then)
        if stmt.orelse is not None:
            arms |= _collect_lines(stmt.orelse)
        stmt.head_lines = frozenset({stmt.span.line} | stmt.cond.span.lines())
        stmt.all_lines = span_lines | arms
    else:
        stmt.head_lines = span_lines
        stmt.all_lines = span_lines
    return stmt.all_lines


# --- multiplier context ------------------------------------------------------------


@dataclass(frozen=True)
class _Frame:
    kind: str  # "domain" | "scalar"
    scops: tuple[LoopSCoP, ...] = ()
    params: frozenset[str] = frozenset()
    residuals: tuple[AffineExpr, ...] = ()
    factor: CountExpr | None = None

    def domain(self):
        base = domain_from_scops(self.scops, self.params)
        return replace(base, params=base.params | self.params, residuals=self.residuals)

    def count(self) -> CountExpr:
        if self.kind == "scalar":
            return self.factor
        return count_symbolic(self.domain())


@dataclass
class AnalysisContext:
    """Multiplier stack for the top-down walk.

    The effective multiplier is the product of frame counts; consecutive
    polyhedral loop levels share one domain frame so dependent bounds are
    counted as a single nest.
    """

    frames: list[_Frame] = field(default_factory=list)
    current_function: FunctionDecl | None = None

    def multiplier(self) -> CountExpr:
        factors = [f.count() for f in self.frames]
        return cmul(*factors) if factors else IntConst(1)

    @property
    def active_domain(self):
        if self.frames and self.frames[-1].kind == "domain":
            return self.frames[-1].domain()
        return None

    def child(self, frame: _Frame) -> "AnalysisContext":
        return AnalysisContext(self.frames + [frame], self.current_function)

    def with_top(self, frame: _Frame) -> "AnalysisContext":
        return AnalysisContext(self.frames[:-1] + [frame], self.current_function)

    def replaced(self, factor: CountExpr) -> "AnalysisContext":
        return AnalysisContext([_Frame("scalar", factor=factor)], self.current_function)


# --- annotations ----------------------------------------------------------------------


def apply_annotation(ann: Annotation, stmt: Stmt) -> str:
    """Apply one annotation at its attachment site; returns the effect tag.

    skip          -> "skip" (any statement)
    iters         -> "multiplier" (loop or branch head)
    pct           -> "percentage" (branch head only)
    lp_init/cond  -> "scop_completed": fills the unanalyzable bound with a
                     named parameter, normalized per the loop's comparison
    """
    if ann.kind == "skip":
        return "skip"
    if ann.kind == "iteration_count":
        if not isinstance(stmt, (ForLoop, IfStmt)):
            raise AnnotationMismatch(
                f"line {ann.line}: 'iters' applies to loops or branches, not {_kindname(stmt)}"
            )
        return "multiplier"
    if ann.kind == "percentage":
        if not isinstance(stmt, IfStmt):
            raise AnnotationMismatch(
                f"line {ann.line}: 'pct' applies to branches, not {_kindname(stmt)}"
            )
        return "percentage"
    # lp_init / lp_cond
    if not isinstance(stmt, ForLoop):
        raise AnnotationMismatch(
            f"line {ann.line}: '{ann.kind}' applies to loops, not {_kindname(stmt)}"
        )
    scop = stmt.scop
    if scop is None:
        raise AnnotationMismatch(
            f"line {ann.line}: '{ann.kind}' cannot repair a structurally "
            f"unrecognized loop ({stmt.scop_failure})"
        )
    var = AffineExpr.var(str(ann.value))
    increasing = scop.step is None or scop.step > 0
    if ann.kind == "lp_init":
        if increasing:
            scop.lower = var
            scop.reasons.pop("lower", None)
        else:
            scop.upper = var
            scop.reasons.pop("upper", None)
    else:  # lp_cond supplies the condition bound, normalized like the source
        if scop.comparison == "<":
            bound = var - 1
        elif scop.comparison == ">":
            bound = var + 1
        else:
            bound = var
        if increasing:
            scop.upper = bound
            scop.reasons.pop("upper", None)
        else:
            scop.lower = bound
            scop.reasons.pop("lower", None)
    scop.params = scop.params | {str(ann.value)}
    return "scop_completed"


def _kindname(stmt: Stmt) -> str:
    return type(stmt).__name__


# --- branch strategies ------------------------------------------------------------------


@dataclass
class BranchPlan:
    strategy: str  # intersection | complement | percentage | multiplier | overapprox
    then_mult: CountExpr
    else_mult: CountExpr
    then_ctx: AnalysisContext
    else_ctx: AnalysisContext
    flags: list[str] = field(default_factory=list)


def _affine_condition(cond) -> tuple[str, AffineExpr] | None:
    """Normalize a relational/equality condition to (kind, d) where d is
    left-right; kind is the operator."""
    from .frontend.ast import BinOp

    if not isinstance(cond, BinOp) or cond.op not in ("<", "<=", ">", ">=", "==", "!="):
        return None
    left, _ = affine_from_expr(cond.left)
    right, _ = affine_from_expr(cond.right)
    if left is None or right is None:
        return None
    return cond.op, left - right


def plan_branch(if_stmt: IfStmt, ctx: AnalysisContext) -> BranchPlan | None:
    """Choose a branch strategy; None means ModelGap (caller reports)."""
    anns = {a.kind: a for a in if_stmt.annotations}
    total = ctx.multiplier()

    if "percentage" in anns:
        apply_annotation(anns["percentage"], if_stmt)
        pct: Fraction = anns["percentage"].value
        then = cfloordiv(cmul(IntConst(pct.numerator), total), pct.denominator)
        other = cmax0(csub(total, then))
        return BranchPlan(
            "percentage", then, other, ctx.replaced(then), ctx.replaced(other)
        )
    if "iteration_count" in anns:
        apply_annotation(anns["iteration_count"], if_stmt)
        then = IntConst(anns["iteration_count"].value)
        other = cmax0(csub(total, then))
        return BranchPlan(
            "multiplier", then, other, ctx.replaced(then), ctx.replaced(other),
            flags=[f"line {if_stmt.span.line}: branch count fixed by annotation"],
        )

    parsed = _affine_condition(if_stmt.cond)
    if parsed is not None and ctx.frames and ctx.frames[-1].kind == "domain":
        op, d = parsed
        frame = ctx.frames[-1]
        dims = {s.index for s in frame.scops}
        extra_params = (d.vars() - dims) - frame.params
        frame = replace(frame, params=frame.params | extra_params)

        def constrained(constraints: tuple[AffineExpr, ...]) -> _Frame:
            return replace(frame, residuals=frame.residuals + constraints)

        if op in ("<", "<=", ">", ">="):
            if op == ">":
                pos = d - 1  # a > b  <=>  a-b-1 >= 0
            elif op == ">=":
                pos = d
            elif op == "<":
                pos = -d - 1
            else:
                pos = -d
            then_frame = constrained((pos,))
            else_frame = constrained((negate_constraint(pos),))
            then_ctx = ctx.with_top(then_frame)
            else_ctx = ctx.with_top(else_frame)
            return BranchPlan(
                "intersection",
                then_ctx.multiplier(),
                else_ctx.multiplier(),
                then_ctx,
                else_ctx,
            )
        # equality / disequality: one arm is convex, the other is its complement
        eq_frame = constrained((d, -d))
        eq_ctx = ctx.with_top(eq_frame)
        eq_count = eq_ctx.multiplier()
        rest = complement_count(total, eq_count)
        if op == "==":
            return BranchPlan(
                "complement", eq_count, rest, eq_ctx, ctx.replaced(rest)
            )
        return BranchPlan("complement", rest, eq_count, ctx.replaced(rest), eq_ctx)

    if parsed is not None and not ctx.frames:
        pass  # fall through to the outside-any-loop rule
    elif parsed is not None:
        return None  # affine but the loop context is not polyhedral

    if not ctx.frames:
        one = IntConst(1)
        flag = (
            f"line {if_stmt.span.line}: branch outside any loop counted once per "
            f"arm (OVERAPPROX)"
        )
        return BranchPlan(
            "overapprox", one, one, ctx.replaced(one), ctx.replaced(one), flags=[flag]
        )
    return None


def handle_branch(if_stmt: IfStmt, ctx: AnalysisContext) -> tuple[CountExpr, CountExpr]:
    """Spec surface: the (then, else) multipliers for a branch, or ModelGap."""
    plan = plan_branch(if_stmt, ctx)
    if plan is None:
        from .errors import ModelGapError

        raise ModelGapError(
            f"line {if_stmt.span.line}: branch condition "
            f"{if_stmt.cond_text!r} is not analyzable; annotate with pct/iters/skip"
        )
    return plan.then_mult, plan.else_mult


# --- pass two: top-down --------------------------------------------------------------


def generate_top_down(
    unit: SourceUnit,
    line_map: dict[tuple[str, int], list[InstructionRecord]],
    arch: ArchDescription,
) -> AnalysisResult:
    if not unit.line_index:
        collect_bottom_up(unit)
    base = os.path.basename(unit.file_name)
    line_cats: dict[int, Counter] = {}
    notes: list[str] = []
    matched_any = False
    for (file, line), records in line_map.items():
        if (file, line) == UNATTRIBUTED:
            notes.append(f"{len(records)} instruction(s) outside any line-table sequence")
            continue
        if os.path.basename(file) != base:
            continue
        matched_any = True
        cats = Counter()
        for rec in records:
            rec.category = categorize(rec.mnemonic, arch)
            cats[rec.category] += 1
        line_cats[line] = cats
    if line_map and not matched_any:
        notes.append(
            f"no line-table entries matched source file {base!r}; "
            "was the binary built from these sources?"
        )

    claims: dict[int, list[Stmt]] = {}
    for fn in unit.functions:
        for stmt in walk_statements(fn.body):
            if isinstance(stmt, Block):
                continue
            for line in sorted(stmt.head_lines):
                claims.setdefault(line, []).append(stmt)
    shares: dict[int, Counter] = {}
    shared_lines: list[int] = []
    for line, cats in line_cats.items():
        claimants = sorted(claims.get(line, []), key=lambda s: s.stmt_id)
        if not claimants:
            continue
        if len(claimants) > 1:
            shared_lines.append(line)
        for rank, stmt in enumerate(claimants):
            share = shares.setdefault(stmt.stmt_id, Counter())
            for cat, count in cats.items():
                part = count // len(claimants) + (1 if rank < count % len(claimants) else 0)
                if part:
                    share[cat] += part
    for line in sorted(shared_lines):
        n = len(claims[line])
        notes.append(f"line {line}: instructions split across {n} statements sharing the line")

    functions: list[FunctionMetrics] = []
    for fn in unit.functions:
        walker = _FunctionWalker(unit, fn, shares, arch)
        metrics = walker.run()
        claimed_lines = {
            line for s in walk_statements(fn.body) for line in s.head_lines
        }
        for line in range(fn.span.line, fn.span.end_line + 1):
            if line in claimed_lines:
                continue
            for cat, count in line_cats.get(line, {}).items():
                vector_add(metrics.body, cat, IntConst(count))
        functions.append(metrics)

    covered = {
        line
        for fn in unit.functions
        for line in range(fn.span.line, fn.span.end_line + 1)
    }
    stray = sorted(set(line_cats) - covered)
    if stray:
        notes.append(f"instructions on non-function lines ignored: {stray}")
    return AnalysisResult(functions, notes)


class _FunctionWalker:
    def __init__(self, unit: SourceUnit, fn: FunctionDecl, shares, arch):
        self.unit = unit
        self.fn = fn
        self.shares = shares
        self.arch = arch
        self.metrics = FunctionMetrics(fn.mangled_name, unit.file_name, fn.span.line)
        self._param_seen: set[str] = set()

    def run(self) -> FunctionMetrics:
        ctx = AnalysisContext([], self.fn)
        self._walk(self.fn.body, ctx)
        return self.metrics

    # helpers

    def _add_base(self, stmt: Stmt, multiplier: CountExpr) -> None:
        for cat, count in self.shares.get(stmt.stmt_id, {}).items():
            vector_add(self.metrics.body, cat, cmul(IntConst(count), multiplier))

    def _record_params(self, names, line: int) -> None:
        for name in sorted(names):
            if name not in self._param_seen:
                self._param_seen.add(name)
                self.metrics.params.append(ParamSpec(name, line))

    def _gap(self, line: int, reason: str) -> None:
        self.metrics.gaps.append(Gap(line, reason))

    def _note_expression_calls(self, stmt: Stmt, exprs) -> None:
        for expr in exprs:
            for sub in walk_expressions(expr):
                if isinstance(sub, Call):
                    self.metrics.notes.append(
                        f"line {stmt.span.line}: call to '{sub.name}' inside an "
                        "expression is not composed into the model"
                    )

    # the walk

    def _walk(self, stmt: Stmt, ctx: AnalysisContext) -> None:
        anns = {a.kind: a for a in stmt.annotations}
        if "skip" in anns:
            self.metrics.notes.append(f"line {stmt.span.line}: subtree skipped by annotation")
            return
        if isinstance(stmt, Block):
            for s in stmt.stmts:
                self._walk(s, ctx)
            return
        if isinstance(stmt, ForLoop):
            self._walk_loop(stmt, ctx, anns)
            return
        if isinstance(stmt, IfStmt):
            self._walk_branch(stmt, ctx)
            return
        multiplier = ctx.multiplier()
        self._add_base(stmt, multiplier)
        if isinstance(stmt, CallStmt):
            self.metrics.call_sites.append(
                CallSite(stmt.call.name, len(stmt.call.args), stmt.span.line, multiplier)
            )
            self._note_expression_calls(stmt, stmt.call.args)
        elif isinstance(stmt, ExprStmt):
            self._note_expression_calls(stmt, [stmt.expr])
        elif isinstance(stmt, Decl) and stmt.init is not None:
            self._note_expression_calls(stmt, [stmt.init])
        elif isinstance(stmt, Return) and stmt.value is not None:
            self._note_expression_calls(stmt, [stmt.value])

    def _walk_loop(self, loop: ForLoop, ctx: AnalysisContext, anns) -> None:
        self._add_base(loop, ctx.multiplier())  # loop control counted once
        if "iteration_count" in anns:
            apply_annotation(anns["iteration_count"], loop)
            factor = IntConst(anns["iteration_count"].value)
            self._walk(loop.body, ctx.child(_Frame("scalar", factor=factor)))
            return
        for kind in ("lp_init", "lp_cond"):
            if kind in anns:
                apply_annotation(anns[kind], loop)
                self._record_params({str(anns[kind].value)}, loop.span.line)
        scop = loop.scop
        if loop.scop_failure is not None:
            self._gap(loop.span.line, f"loop not analyzable: {loop.scop_failure}")
            return
        if not scop.is_complete:
            missing = "; ".join(f"{part}: {why}" for part, why in sorted(scop.reasons.items()))
            self._gap(
                loop.span.line,
                f"loop bounds not analyzable ({missing}); annotate with "
                "lp_init/lp_cond or iters",
            )
            return
        if ctx.frames and ctx.frames[-1].kind == "domain":
            frame = ctx.frames[-1]
            known = {s.index for s in frame.scops}
            new_ctx_factory = ctx.with_top
        else:
            frame = _Frame("domain")
            known = set()
            new_ctx_factory = ctx.child
        enclosing = self._enclosing_indices(loop)
        outside = {
            v
            for part in (scop.lower, scop.upper)
            for v in part.vars()
            if v in enclosing and v not in known
        }
        if outside:
            self._gap(
                loop.span.line,
                f"loop bound references outer index {sorted(outside)} outside the "
                "modeled nest; annotate with iters",
            )
            return
        self._record_params(scop.params, loop.span.line)
        extended = replace(
            frame, scops=frame.scops + (scop,), params=frame.params | scop.params
        )
        self._walk(loop.body, new_ctx_factory(extended))

    def _enclosing_indices(self, target: ForLoop) -> frozenset[str]:
        def rec(stmt: Stmt, acc: tuple[str, ...]) -> tuple[str, ...] | None:
            if stmt is target:
                return acc
            if isinstance(stmt, Block):
                for s in stmt.stmts:
                    hit = rec(s, acc)
                    if hit is not None:
                        return hit
            elif isinstance(stmt, ForLoop):
                inner = acc + ((stmt.scop.index,) if stmt.scop else ())
                return rec(stmt.body, inner)
            elif isinstance(stmt, IfStmt):
                hit = rec(stmt.then, acc)
                if hit is None and stmt.orelse is not None:
                    hit = rec(stmt.orelse, acc)
                return hit
            return None

        hit = rec(self.fn.body, ())
        return frozenset(hit or ())

    def _walk_branch(self, stmt: IfStmt, ctx: AnalysisContext) -> None:
        self._add_base(stmt, ctx.multiplier())
        plan = plan_branch(stmt, ctx)
        if plan is None:
            self._gap(
                stmt.span.line,
                f"branch condition {stmt.cond_text!r} not analyzable; annotate "
                "with pct/iters/skip",
            )
            return
        self.metrics.notes.extend(plan.flags)
        for param in _constraint_params(stmt, ctx):
            self._record_params({param}, stmt.span.line)
        self._walk(stmt.then, plan.then_ctx)
        if stmt.orelse is not None:
            self._walk(stmt.orelse, plan.else_ctx)


def _constraint_params(stmt: IfStmt, ctx: AnalysisContext) -> frozenset[str]:
    parsed = _affine_condition(stmt.cond)
    if parsed is None or not ctx.frames or ctx.frames[-1].kind != "domain":
        return frozenset()
    dims = {s.index for s in ctx.frames[-1].scops}
    return parsed[1].vars() - dims
