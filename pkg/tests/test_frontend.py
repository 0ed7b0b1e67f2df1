"""Parser, SCoP extraction and annotation tests."""

from fractions import Fraction

import pytest

from statmodel.errors import (
    MalformedAnnotation,
    SourceSyntaxError,
    UnknownAnnotationKey,
    UnsupportedConstruct,
)
from statmodel.frontend import (
    Block,
    CallStmt,
    Decl,
    ExprStmt,
    ForLoop,
    IfStmt,
    parse_annotation,
    parse_source,
    pretty_print,
    structurally_equal,
    walk_statements,
)
from statmodel.polyhedral import AffineExpr

C = AffineExpr.constant
V = AffineExpr.var


def first_loop(unit):
    for fn in unit.functions:
        for stmt in walk_statements(fn.body):
            if isinstance(stmt, ForLoop):
                return stmt
    raise AssertionError("no loop found")


def all_loops(unit):
    return [
        s
        for fn in unit.functions
        for s in walk_statements(fn.body)
        if isinstance(s, ForLoop)
    ]


# --- basic parsing -------------------------------------------------------------


def test_basic_loop_scop():
    unit = parse_source("void f() { int i; for (i = 0; i < 10; i++) { s; } }")
    loop = first_loop(unit)
    assert loop.scop is not None and loop.scop_failure is None
    assert loop.scop.index == "i"
    assert loop.scop.lower == C(0)
    assert loop.scop.upper == C(9)  # normalized from < 10
    assert loop.scop.step == 1


def test_empty_function():
    unit = parse_source("void f() {}")
    (fn,) = unit.functions
    assert fn.name == "f" and fn.arity == 0
    assert isinstance(fn.body, Block) and fn.body.stmts == []
    assert fn.mangled_name == "f_0"


def test_nested_loop_with_dependent_bound():
    src = """
void f() {
    int i;
    int j;
    for (i = 1; i <= 4; i++)
        for (j = i + 1; j <= 6; j++) {
            s;
        }
}
"""
    outer, inner = all_loops(parse_source(src))
    assert outer.scop.lower == C(1) and outer.scop.upper == C(4) and outer.scop.step == 1
    assert inner.scop.lower == V("i") + 1
    assert inner.scop.upper == C(6)
    assert inner.scop.params == frozenset()


def test_parametric_bound_becomes_parameter():
    unit = parse_source("void f(int N) { int i; for (i = 0; i < N; i++) { s; } }")
    scop = first_loop(unit).scop
    assert scop.lower == C(0)
    assert scop.upper == V("N") - 1
    assert scop.params == {"N"}


def test_call_in_bound_is_unanalyzable():
    unit = parse_source(
        "void f() { int i; int j;"
        " for (i = 1; i <= 5; i++) for (j = min(6 - i, 3); j <= 6; j++) { s; } }"
    )
    inner = all_loops(unit)[1]
    assert inner.scop is not None
    assert inner.scop.lower is None
    assert "call" in inner.scop.reasons["lower"]


def test_array_read_in_bounds_is_unanalyzable():
    unit = parse_source(
        "void f(int a[]) { int i; int j;"
        " for (i = 1; i <= 4; i++) for (j = a[i]; j <= a[i+6]; j++) { s; } }"
    )
    inner = all_loops(unit)[1]
    assert inner.scop.lower is None and inner.scop.upper is None
    assert inner.scop.step == 1
    assert "array" in inner.scop.reasons["lower"]


def test_decreasing_loop_scop():
    unit = parse_source("void f() { int i; for (i = 10; i >= 1; i--) { s; } }")
    scop = first_loop(unit).scop
    assert scop.step == -1
    assert scop.lower == C(1) and scop.upper == C(10)


def test_direction_mismatch_is_failure():
    unit = parse_source("void f() { int i; for (i = 0; i > 10; i++) { s; } }")
    loop = first_loop(unit)
    assert loop.scop is None
    assert "direction" in loop.scop_failure


def test_scop_xor_failure_invariant():
    srcs = [
        "void f() { int i; for (i = 0; i < 10; i++) { s; } }",
        "void f() { int i; for (i = 0; i > 10; i++) { s; } }",
        "void f(int a[]) { int j; for (j = a[0]; j <= 6; j++) { s; } }",
    ]
    for src in srcs:
        for loop in all_loops(parse_source(src)):
            assert (loop.scop is None) != (loop.scop_failure is None)


# --- classes and calls ------------------------------------------------------------


def test_class_scopes_method_names():
    src = """
class A {
 public:
  void foo(double a[], double b[]) {
    int i;
    for (i = 0; i < 8; i++) { a[i] = b[i]; }
  }
};
int main() {
  double a[8];
  double b[8];
  A obj;
  obj.foo(a, b);
  return 0;
}
"""
    unit = parse_source(src)
    assert [f.mangled_name for f in unit.functions] == ["A_foo_2", "main_0"]
    call_stmts = [
        s
        for fn in unit.functions
        for s in walk_statements(fn.body)
        if isinstance(s, CallStmt)
    ]
    assert len(call_stmts) == 1
    assert call_stmts[0].call.name == "foo"
    assert call_stmts[0].call.receiver is not None
    class_decls = [
        s
        for fn in unit.functions
        for s in walk_statements(fn.body)
        if isinstance(s, Decl) and s.type_tag == "A"
    ]
    assert len(class_decls) == 1


def test_duplicate_function_rejected():
    with pytest.raises(SourceSyntaxError):
        parse_source("void f() {} void f() {}")


# --- rejected constructs -------------------------------------------------------


@pytest.mark.parametrize("kw", ["goto", "while", "do", "switch", "break", "continue"])
def test_rejected_keywords(kw):
    body = f"{kw} x;" if kw == "goto" else f"{kw};"
    with pytest.raises(UnsupportedConstruct) as exc:
        parse_source("void f() { " + body + " }")
    assert exc.value.construct == kw


def test_include_rejected():
    with pytest.raises(UnsupportedConstruct) as exc:
        parse_source("#include <stdio.h>\nvoid f() {}")
    assert "#include" in exc.value.construct


def test_syntax_error_has_location():
    with pytest.raises(SourceSyntaxError) as exc:
        parse_source("void f() { int ; }")
    assert exc.value.line == 1 and exc.value.column > 0


# --- annotations -----------------------------------------------------------------


def test_parse_annotation_loop_params():
    anns = parse_annotation("#pragma @Annotation {lp_init:x,lp_cond:y}")
    assert [(a.kind, a.value) for a in anns] == [("lp_init", "x"), ("lp_cond", "y")]


def test_parse_annotation_skip():
    (ann,) = parse_annotation("#pragma @Annotation {skip:yes}")
    assert ann.kind == "skip" and ann.value is True


def test_parse_annotation_iters():
    (ann,) = parse_annotation("#pragma @Annotation {iters:100}")
    assert ann.kind == "iteration_count" and ann.value == 100


def test_parse_annotation_pct():
    (ann,) = parse_annotation("#pragma @Annotation {pct:0.25}")
    assert ann.kind == "percentage" and ann.value == Fraction(1, 4)


def test_annotation_errors():
    with pytest.raises(UnknownAnnotationKey):
        parse_annotation("#pragma @Annotation {frobnicate:1}")
    with pytest.raises(MalformedAnnotation):
        parse_annotation("#pragma @Annotation {iters}")
    with pytest.raises(MalformedAnnotation):
        parse_annotation("#pragma @Annotation iters:1")
    with pytest.raises(MalformedAnnotation):
        parse_annotation("#pragma @Annotation {pct:1.5}")
    with pytest.raises(MalformedAnnotation):
        parse_annotation("#pragma @Annotation {skip:maybe}")


def test_pragma_attaches_to_next_statement():
    src = """
void f(int a[]) {
    int i;
    int j;
    for (i = 1; i <= 4; i++) {
        #pragma @Annotation \\
               {lp_init:x,lp_cond:y}
        for (j = a[i]; j <= a[i+6]; j++) {
            #pragma @Annotation {skip:yes}
            s;
        }
    }
}
"""
    unit = parse_source(src)
    outer, inner = all_loops(unit)
    assert outer.annotations == []
    kinds = {a.kind: a.value for a in inner.annotations}
    assert kinds == {"lp_init": "x", "lp_cond": "y"}
    assert inner.scop is not None and inner.scop.lower is None  # still unanalyzable
    skip_stmt = [s for s in walk_statements(inner.body) if s.annotations]
    assert len(skip_stmt) == 1 and skip_stmt[0].annotations[0].kind == "skip"


def test_pragma_attachment_is_exactly_one_statement():
    src = "void f() { int i;\n#pragma @Annotation {iters:3}\nfor (i = 0; i < 1; i++) { s; } t; }"
    unit = parse_source(src)
    annotated = [
        s
        for fn in unit.functions
        for s in walk_statements(fn.body)
        if s.annotations
    ]
    assert len(annotated) == 1
    assert isinstance(annotated[0], ForLoop)


def test_multi_pragma_later_key_overrides():
    src = (
        "void f() { int i;\n"
        "#pragma @Annotation {iters:3}\n"
        "#pragma @Annotation {iters:7,pct:0.5}\n"
        "for (i = 0; i < 1; i++) { s; } }"
    )
    loop = first_loop(parse_source(src))
    by_kind = {a.kind: a.value for a in loop.annotations}
    assert by_kind["iteration_count"] == 7
    assert by_kind["percentage"] == Fraction(1, 2)


def test_dangling_pragma_rejected():
    with pytest.raises(SourceSyntaxError):
        parse_source("void f() { #pragma @Annotation {skip:yes}\n }")


# --- statement line attribution ------------------------------------------------


def test_statement_spans_cover_lines():
    src = "void f() {\n    int i;\n    for (i = 0;\n         i < 10;\n         i++) {\n        s;\n    }\n}\n"
    unit = parse_source(src)
    loop = first_loop(unit)
    assert loop.span.line == 3 and loop.span.end_line == 7


def test_if_condition_kept_verbatim():
    unit = parse_source("void f(int x) { if (foo(x) > 10) { s; } else { t; } }")
    stmt = [
        s
        for fn in unit.functions
        for s in walk_statements(fn.body)
        if isinstance(s, IfStmt)
    ][0]
    assert stmt.cond_text == "foo(x) > 10"
    assert stmt.orelse is not None


# --- round trip -------------------------------------------------------------------


ROUND_TRIP_SAMPLES = [
    "void f() {}",
    "void f() { int i; for (i = 0; i < 10; i++) { s; } }",
    "void f(int N) { int i; int j; for (i = 0; i < N; i+=2) for (j = i; j <= N; j++) { a[j] = a[j] + 1; } }",
    "int g(double x[]) { if (x[0] > 1) { return 1; } else { return 0; } }",
    """
class A {
 public:
  void foo(double a[], double b[]) {
    int i;
    #pragma @Annotation {lp_cond:y}
    for (i = 0; i < 8; i++) { a[i] = b[i] * 2; }
  }
};
int main() {
  A obj;
  obj.foo(p, q);
  return 0;
}
""",
    "void h() { int i; for (i = 10; i >= 0; i--) { if (i % 2 == 0) { s; } } }",
]


@pytest.mark.parametrize("src", ROUND_TRIP_SAMPLES)
def test_pretty_print_round_trip(src):
    unit = parse_source(src)
    rendered = pretty_print(unit)
    again = parse_source(rendered)
    assert structurally_equal(unit, again), rendered


def test_prototypes_are_skipped():
    unit = parse_source("void f(int a[], double s);\nvoid g() { f(x, y); }\n")
    assert [fn.mangled_name for fn in unit.functions] == ["g_0"]


def test_unary_minus_bound():
    unit = parse_source("void f() { int i; for (i = -5; i < 5; i++) { s; } }")
    scop = first_loop(unit).scop
    assert scop.lower == C(-5) and scop.upper == C(4)


def test_compound_step_scop():
    unit = parse_source("void f(int N) { int i; for (i = 0; i < N; i += 2) { s; } }")
    scop = first_loop(unit).scop
    assert scop.step == 2


def test_comments_are_ignored():
    src = "// header\nvoid f() { /* multi\nline */ int i; // trailing\n for (i = 0; i < 3; i++) { s; } }"
    unit = parse_source(src)
    assert first_loop(unit).scop.upper == C(2)
