"""Two-pass analysis tests: context products, branches, annotations, calls."""

import random

import pytest

from statmodel.binary import default_archdesc
from statmodel.binary.disasm import InstructionRecord
from statmodel.errors import AnnotationMismatch, ModelGapError
from statmodel.frontend import ForLoop, IfStmt, parse_source, walk_statements
from statmodel.metrics import (
    AnalysisContext,
    apply_annotation,
    collect_bottom_up,
    compose_call,
    generate_top_down,
    handle_branch,
    plan_branch,
)
from statmodel.polyhedral import (
    IntConst,
    Param,
    cadd,
    cmul,
    count_enumerate,
    eval_count,
)

ARCH = default_archdesc()


def fake_instrs(spec: dict[int, list[str]], file: str = "t.c"):
    """line -> mnemonics, rendered as a line_map with synthetic addresses."""
    out = {}
    addr = 0x1000
    for line, mnemonics in spec.items():
        records = []
        for m in mnemonics:
            records.append(InstructionRecord(addr, m, ""))
            addr += 4
        out[(file, line)] = records
    return out


def analyze(src: str, line_map, file_name: str = "t.c"):
    unit = parse_source(src, file_name)
    collect_bottom_up(unit)
    return generate_top_down(unit, line_map, ARCH)


def by_name(result):
    return {fn.mangled_name: fn for fn in result.functions}


def only_fn(result):
    (fn,) = result.functions
    return fn


# --- bottom-up pass ------------------------------------------------------------


def test_bottom_up_loop_head_carries_scop_and_lines():
    src = "void f() {\n    int i;\n    for (i = 0; i < 10; i++)\n    {\n        s;\n    }\n}\n"
    unit = parse_source(src, "t.c")
    collect_bottom_up(unit)
    loop = [s for fn in unit.functions for s in walk_statements(fn.body) if isinstance(s, ForLoop)][0]
    assert loop.scop is not None and loop.scop.upper is not None
    assert loop.all_lines == frozenset({3, 4, 5, 6})
    assert loop.head_lines == frozenset({3})
    assert unit.line_index[loop.stmt_id] == loop.all_lines


def test_bottom_up_multiline_statement_lines():
    src = "void f(int a, int b, int c) {\n    x = a +\n        b +\n        c;\n}\n"
    unit = parse_source(src, "t.c")
    collect_bottom_up(unit)
    stmt = unit.functions[0].body.stmts[0]
    assert stmt.all_lines == frozenset({2, 3, 4})


def test_bottom_up_annotated_unanalyzable_loop_keeps_both():
    src = (
        "void f(int a[]) {\n    int j;\n"
        "    #pragma @Annotation {lp_init:x,lp_cond:y}\n"
        "    for (j = a[0]; j <= a[6]; j++) { s; }\n}\n"
    )
    unit = parse_source(src, "t.c")
    collect_bottom_up(unit)
    loop = [s for fn in unit.functions for s in walk_statements(fn.body) if isinstance(s, ForLoop)][0]
    assert loop.scop is not None and loop.scop.lower is None
    assert {a.kind for a in loop.annotations} == {"lp_init", "lp_cond"}


# --- straight-line scaling -------------------------------------------------------


def test_counts_scale_by_single_loop():
    src = "void f() {\n    int i;\n    for (i = 0; i < 10; i++) {\n        s;\n    }\n}\n"
    result = analyze(src, fake_instrs({4: ["mov", "mov", "mov", "addsd"]}))
    body = only_fn(result).body
    assert eval_count(body["integer_data_transfer"], {}) == 30
    assert eval_count(body["sse2_packed_arithmetic"], {}) == 10


def test_counts_scale_by_triangular_nest():
    src = (
        "void f() {\n    int i;\n    int j;\n"
        "    for (i = 1; i <= 4; i++)\n"
        "        for (j = i + 1; j <= 6; j++) {\n"
        "            s;\n"
        "        }\n}\n"
    )
    result = analyze(src, fake_instrs({6: ["mov", "mov", "mov", "addsd"]}))
    body = only_fn(result).body
    assert eval_count(body["integer_data_transfer"], {}) == 3 * 14
    assert eval_count(body["sse2_packed_arithmetic"], {}) == 14


def test_parametric_loop_contribution():
    src = "void f(int N) {\n    int i;\n    for (i = 0; i < N; i++) {\n        s;\n    }\n}\n"
    result = analyze(src, fake_instrs({4: ["mulsd"]}))
    fn = only_fn(result)
    assert [p.name for p in fn.params] == ["N"]
    for n in (0, 1, 7, 100):
        assert eval_count(fn.body["sse2_packed_arithmetic"], {"N": n}) == n


def test_loop_head_counted_once_under_enclosing_context():
    src = "void f() {\n    int i;\n    for (i = 0; i < 10; i++) {\n        s;\n    }\n}\n"
    result = analyze(src, fake_instrs({3: ["cmp", "jl"], 4: ["mov"]}))
    body = only_fn(result).body
    assert eval_count(body["integer_arithmetic"], {}) == 1
    assert eval_count(body["integer_control_transfer"], {}) == 1
    assert eval_count(body["integer_data_transfer"], {}) == 10


def test_unclaimed_function_lines_counted_once():
    src = "void f() {\n    s;\n}\n"
    result = analyze(src, fake_instrs({1: ["push", "mov"], 2: ["mov"], 3: ["pop", "ret"]}))
    body = only_fn(result).body
    assert eval_count(body["integer_data_transfer"], {}) == 4
    assert eval_count(body["integer_control_transfer"], {}) == 1


def test_context_product_matches_enumeration_randomized():
    rng = random.Random(11)
    for _ in range(20):
        depth = rng.randint(1, 3)
        lines = []
        indices = []
        for d in range(depth):
            idx = "ijk"[d]
            lo = rng.randint(-5, 5)
            hi = rng.randint(lo - 2, lo + 8)
            lines.append(
                "    " * (d + 1)
                + f"for ({idx} = {lo}; {idx} <= {hi}; {idx}++)"
            )
            indices.append((idx, lo, hi))
        decls = "".join(f"    int {i};\n" for i, _, _ in indices)
        body_line = depth + 1 + len(indices)
        src = (
            "void f() {\n"
            + decls
            + "\n".join(lines)
            + " {\n"
            + "    " * (depth + 1)
            + "s;\n"
            + "    " * depth
            + "}\n}\n"
        )
        unit = parse_source(src, "t.c")
        collect_bottom_up(unit)
        stmt_line = src.split("\n").index("    " * (depth + 1) + "s;") + 1
        result = generate_top_down(unit, fake_instrs({stmt_line: ["mov"]}), ARCH)
        body = result.functions[0].body
        from statmodel.polyhedral import AffineExpr, Level, LoopNestDomain

        domain = LoopNestDomain(
            tuple(
                Level(i, AffineExpr.constant(lo), AffineExpr.constant(hi))
                for i, lo, hi in indices
            ),
            frozenset(),
        )
        expected = count_enumerate(domain)
        got = eval_count(body.get("integer_data_transfer", IntConst(0)), {})
        assert got == expected, src


# --- branches ----------------------------------------------------------------------


BRANCH_SRC = (
    "void f() {\n"
    "    int i;\n"
    "    int j;\n"
    "    for (i = 1; i <= 4; i++)\n"
    "        for (j = i + 1; j <= 6; j++) {\n"
    "            if (j > 4) {\n"
    "                s;\n"
    "            } else {\n"
    "                t;\n"
    "            }\n"
    "        }\n"
    "}\n"
)


def test_branch_intersection_counts():
    result = analyze(BRANCH_SRC, fake_instrs({7: ["addsd"], 9: ["mulsd"]}))
    body = only_fn(result).body
    assert eval_count(body["sse2_packed_arithmetic"], {}) == 8 + 6


def test_branch_multipliers_partition_total():
    unit = parse_source(BRANCH_SRC, "t.c")
    collect_bottom_up(unit)
    fn = unit.functions[0]
    if_stmt = [s for s in walk_statements(fn.body) if isinstance(s, IfStmt)][0]
    loops = [s for s in walk_statements(fn.body) if isinstance(s, ForLoop)]
    from statmodel.metrics import _Frame

    frame = _Frame("domain", scops=(loops[0].scop, loops[1].scop))
    ctx = AnalysisContext([frame], fn)
    then_mult, else_mult = handle_branch(if_stmt, ctx)
    assert eval_count(then_mult, {}) == 8
    assert eval_count(else_mult, {}) == 6
    assert eval_count(ctx.multiplier(), {}) == 14


def test_branch_always_true_condition():
    src = BRANCH_SRC.replace("j > 4", "0 >= 0")
    result = analyze(src, fake_instrs({7: ["addsd"], 9: ["mulsd"]}))
    body = only_fn(result).body
    assert eval_count(body["sse2_packed_arithmetic"], {}) == 14
    assert "sse2_data_movement" not in body


def test_branch_equality_uses_complement():
    # j == 4: equality arm convex (3 points), else arm via the complement rule
    src = BRANCH_SRC.replace("j > 4", "j == 4")
    result = analyze(src, fake_instrs({7: ["addsd"], 9: ["mulsd"]}))
    body = only_fn(result).body
    assert eval_count(body["sse2_packed_arithmetic"], {}) == 3 + (14 - 3)


def test_branch_disequality_complement_arm():
    src = BRANCH_SRC.replace("j > 4", "j != 4")
    unit = parse_source(src, "t.c")
    collect_bottom_up(unit)
    fn = unit.functions[0]
    if_stmt = [s for s in walk_statements(fn.body) if isinstance(s, IfStmt)][0]
    loops = [s for s in walk_statements(fn.body) if isinstance(s, ForLoop)]
    from statmodel.metrics import _Frame

    ctx = AnalysisContext([_Frame("domain", scops=(loops[0].scop, loops[1].scop))], fn)
    then_mult, else_mult = handle_branch(if_stmt, ctx)
    assert eval_count(then_mult, {}) == 11
    assert eval_count(else_mult, {}) == 3


def test_branch_pct_annotation_floor_and_remainder():
    src = (
        "void f() {\n"
        "    int i;\n"
        "    for (i = 0; i < 100; i++) {\n"
        "        #pragma @Annotation {pct:0.25}\n"
        "        if (unknowable(i)) {\n"
        "            s;\n"
        "        } else {\n"
        "            t;\n"
        "        }\n"
        "    }\n"
        "}\n"
    )
    result = analyze(src, fake_instrs({6: ["addsd"], 8: ["mulsd"]}))
    body = only_fn(result).body
    assert eval_count(body["sse2_packed_arithmetic"], {}) == 25 + 75


def test_branch_pct_conservation_under_odd_total():
    # floor(pct*M) + (M - floor(pct*M)) == M even when pct*M is fractional
    src = (
        "void f() {\n"
        "    int i;\n"
        "    for (i = 0; i < 7; i++) {\n"
        "        #pragma @Annotation {pct:0.5}\n"
        "        if (g(i)) { s; } else { t; }\n"
        "    }\n"
        "}\n"
    )
    unit = parse_source(src, "t.c")
    collect_bottom_up(unit)
    fn = unit.functions[0]
    if_stmt = [s for s in walk_statements(fn.body) if isinstance(s, IfStmt)][0]
    loop = [s for s in walk_statements(fn.body) if isinstance(s, ForLoop)][0]
    from statmodel.metrics import _Frame

    ctx = AnalysisContext([_Frame("domain", scops=(loop.scop,))], fn)
    then_mult, else_mult = handle_branch(if_stmt, ctx)
    assert eval_count(then_mult, {}) == 3  # floor(0.5 * 7)
    assert eval_count(else_mult, {}) == 4
    assert eval_count(then_mult, {}) + eval_count(else_mult, {}) == 7


def test_branch_outside_loop_overapproximates():
    src = "void f(int x) {\n    if (x > 0) {\n        s;\n    } else {\n        t;\n    }\n}\n"
    result = analyze(src, fake_instrs({3: ["addsd"], 5: ["mulsd"]}))
    fn = only_fn(result)
    assert eval_count(fn.body["sse2_packed_arithmetic"], {}) == 2  # both arms once
    assert any("OVERAPPROX" in n for n in fn.notes)


def test_non_affine_branch_without_annotation_is_gap():
    src = (
        "void f() {\n"
        "    int i;\n"
        "    for (i = 0; i < 4; i++) {\n"
        "        if (foo(i) > 10) {\n"
        "            s;\n"
        "        }\n"
        "    }\n"
        "}\n"
    )
    result = analyze(src, fake_instrs({5: ["addsd"]}))
    fn = only_fn(result)
    assert len(fn.gaps) == 1 and "foo(i) > 10" in fn.gaps[0].reason
    assert "sse2_packed_arithmetic" not in fn.body


def test_handle_branch_raises_for_gap():
    src = "void f() {\n    int i;\n    for (i = 0; i < 4; i++) {\n        if (foo(i)) { s; }\n    }\n}\n"
    unit = parse_source(src, "t.c")
    collect_bottom_up(unit)
    fn = unit.functions[0]
    if_stmt = [s for s in walk_statements(fn.body) if isinstance(s, IfStmt)][0]
    loop = [s for s in walk_statements(fn.body) if isinstance(s, ForLoop)][0]
    from statmodel.metrics import _Frame

    ctx = AnalysisContext([_Frame("domain", scops=(loop.scop,))], fn)
    with pytest.raises(ModelGapError):
        handle_branch(if_stmt, ctx)


# --- annotations -----------------------------------------------------------------------


def test_skip_annotation_zeroes_subtree():
    src = (
        "void f() {\n"
        "    int i;\n"
        "    for (i = 0; i < 4; i++) {\n"
        "        #pragma @Annotation {skip:yes}\n"
        "        if (foo(i) > 10) {\n"
        "            s;\n"
        "        }\n"
        "        t;\n"
        "    }\n"
        "}\n"
    )
    result = analyze(src, fake_instrs({6: ["addsd"], 8: ["movsd"]}))
    fn = only_fn(result)
    # the skipped branch contributes exactly zero to every category
    assert "sse2_packed_arithmetic" not in fn.body
    # the sibling statement still counts, and no gap is recorded
    assert fn.gaps == []
    assert eval_count(fn.body["sse2_data_movement"], {}) == 4  # t scaled by the loop


def test_iters_annotation_on_unanalyzable_loop():
    src = (
        "void f(int a[]) {\n"
        "    int j;\n"
        "    #pragma @Annotation {iters:100}\n"
        "    for (j = a[0]; j < a[1]; j++) {\n"
        "        s;\n"
        "    }\n"
        "}\n"
    )
    result = analyze(src, fake_instrs({5: ["addsd"]}))
    fn = only_fn(result)
    assert fn.gaps == []
    assert eval_count(fn.body["sse2_packed_arithmetic"], {}) == 100


def test_lp_annotations_complete_the_domain():
    src = (
        "void f(int a[]) {\n"
        "    int i;\n"
        "    int j;\n"
        "    for (i = 1; i <= 4; i++) {\n"
        "        #pragma @Annotation {lp_init:x,lp_cond:y}\n"
        "        for (j = a[i]; j <= a[i+6]; j++) {\n"
        "            s;\n"
        "        }\n"
        "    }\n"
        "}\n"
    )
    result = analyze(src, fake_instrs({7: ["addsd"]}))
    fn = only_fn(result)
    assert fn.gaps == []
    assert {p.name for p in fn.params} == {"x", "y"}
    # domain {j, x, y, 1} nested in i=1..4: count = 4 * max0(y - x + 1)
    expr = fn.body["sse2_packed_arithmetic"]
    assert eval_count(expr, {"x": 2, "y": 5}) == 4 * 4
    assert eval_count(expr, {"x": 5, "y": 2}) == 0


def test_unannotated_unanalyzable_loop_is_gap_and_siblings_continue():
    src = (
        "void f(int a[]) {\n"
        "    int j;\n"
        "    for (j = min(6, 3); j <= 6; j++) {\n"
        "        s;\n"
        "    }\n"
        "    t;\n"
        "}\n"
    )
    result = analyze(src, fake_instrs({4: ["addsd"], 6: ["movsd"]}))
    fn = only_fn(result)
    assert len(fn.gaps) == 1
    assert fn.gaps[0].line == 3
    # the unmodeled subtree contributes nothing; the sibling still counts
    assert "sse2_packed_arithmetic" not in fn.body
    assert eval_count(fn.body["sse2_data_movement"], {}) == 1


def test_annotation_mismatch_errors():
    src = "void f() {\n    s;\n}\n"
    unit = parse_source(src, "t.c")
    stmt = unit.functions[0].body.stmts[0]
    from statmodel.frontend.ast import Annotation

    with pytest.raises(AnnotationMismatch):
        apply_annotation(Annotation("percentage", 1, 2), stmt)
    with pytest.raises(AnnotationMismatch):
        apply_annotation(Annotation("iteration_count", 5, 2), stmt)
    with pytest.raises(AnnotationMismatch):
        apply_annotation(Annotation("lp_init", "x", 2), stmt)


# --- calls -------------------------------------------------------------------------------


def test_call_sites_record_multiplier():
    src = (
        "void g() { s; }\n"
        "void f() {\n"
        "    int i;\n"
        "    for (i = 0; i < 5; i++) {\n"
        "        g();\n"
        "    }\n"
        "}\n"
    )
    result = analyze(src, fake_instrs({5: ["call"]}))
    fn = by_name(result)["f_0"]
    (site,) = fn.call_sites
    assert site.callee_name == "g" and site.arity == 0
    assert site.line == 5
    assert eval_count(site.multiplier, {}) == 5


def test_expression_call_noted_not_composed():
    src = "void f(int x) {\n    x = g(x) + 1;\n}\n"
    result = analyze(src, fake_instrs({2: ["call"]}))
    fn = only_fn(result)
    assert fn.call_sites == []
    assert any("not composed" in n for n in fn.notes)


def test_compose_call_examples():
    assert eval_count(
        compose_call({"fp": IntConst(2)}, {"fp": IntConst(3)}, IntConst(4))["fp"], {}
    ) == 14
    caller = {"fp": IntConst(2)}
    assert compose_call(caller, {}, IntConst(9)) == caller
    sym = compose_call({}, {"fp": Param("N")}, Param("M"))
    assert eval_count(sym["fp"], {"N": 3, "M": 5}) == 15


def test_compose_call_distributivity():
    rng = random.Random(3)
    cats = ["a", "b", "c"]
    for _ in range(25):
        caller = {c: IntConst(rng.randint(0, 9)) for c in rng.sample(cats, rng.randint(0, 3))}
        c1 = {c: IntConst(rng.randint(0, 9)) for c in rng.sample(cats, rng.randint(0, 3))}
        c2 = {c: IntConst(rng.randint(0, 9)) for c in rng.sample(cats, rng.randint(0, 3))}
        k = IntConst(rng.randint(0, 5))
        merged = compose_call(caller, {c: cadd(c1.get(c, IntConst(0)), c2.get(c, IntConst(0))) for c in set(c1) | set(c2)}, k)
        stepwise = compose_call(compose_call(caller, c1, k), c2, k)
        for c in set(merged) | set(stepwise):
            assert eval_count(merged.get(c, IntConst(0)), {}) == eval_count(
                stepwise.get(c, IntConst(0)), {}
            )


# --- shared lines ---------------------------------------------------------------------------


def test_shared_line_instructions_split_proportionally():
    src = "void f() {\n    a = 1; b = 2;\n}\n"
    result = analyze(src, fake_instrs({2: ["mov", "mov", "mov"]}))
    fn = only_fn(result)
    assert eval_count(fn.body["integer_data_transfer"], {}) == 3  # conserved
    assert any("sharing the line" in n for n in result.notes)


def test_decreasing_loop_integration():
    src = (
        "void f() {\n"
        "    int i;\n"
        "    for (i = 10; i >= 1; i--) {\n"
        "        s;\n"
        "    }\n"
        "}\n"
    )
    result = analyze(src, fake_instrs({4: ["addsd"]}))
    fn = only_fn(result)
    assert fn.gaps == []
    assert eval_count(fn.body["sse2_packed_arithmetic"], {}) == 10


def test_decreasing_outer_with_dependent_inner_integration():
    src = (
        "void f() {\n"
        "    int i;\n"
        "    int j;\n"
        "    for (i = 4; i >= 1; i--) {\n"
        "        for (j = 1; j <= i; j++) {\n"
        "            s;\n"
        "        }\n"
        "    }\n"
        "}\n"
    )
    result = analyze(src, fake_instrs({6: ["addsd"]}))
    fn = only_fn(result)
    assert eval_count(fn.body["sse2_packed_arithmetic"], {}) == 10  # 4+3+2+1


def test_modulus_condition_is_uniformly_non_affine():
    src = (
        "void f() {\n"
        "    int i;\n"
        "    for (i = 1; i <= 4; i++) {\n"
        "        if (i % 2 == 0) {\n"
        "            s;\n"
        "        }\n"
        "    }\n"
        "}\n"
    )
    result = analyze(src, fake_instrs({5: ["addsd"]}))
    fn = only_fn(result)
    assert len(fn.gaps) == 1 and "i % 2 == 0" in fn.gaps[0].reason


def test_parametric_branch_constraint_adds_parameter():
    src = (
        "void f(int N, int M) {\n"
        "    int i;\n"
        "    for (i = 0; i < N; i++) {\n"
        "        if (i < M) {\n"
        "            s;\n"
        "        }\n"
        "    }\n"
        "}\n"
    )
    result = analyze(src, fake_instrs({5: ["addsd"]}))
    fn = only_fn(result)
    assert fn.gaps == []
    expr = fn.body["sse2_packed_arithmetic"]
    from statmodel.polyhedral import (
        AffineExpr, Level, LoopNestDomain, count_enumerate, intersect_branch,
    )

    C, V = AffineExpr.constant, AffineExpr.var
    dom = intersect_branch(
        LoopNestDomain((Level("i", C(0), V("N") - 1),), frozenset({"N", "M"})),
        V("M") - V("i") - 1,
    )
    for n in range(-2, 8):
        for m in range(-2, 8):
            b = {"N": n, "M": m}
            assert eval_count(expr, b) == count_enumerate(dom, b), b
