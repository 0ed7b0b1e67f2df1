"""One-way export of a model as an executable Python module."""

from __future__ import annotations

from ..polyhedral import to_python_expr
from .core import Model

_SHIM_MODULE = "statmodel_runtime"


def emit_python(model: Model) -> str:
    """Deterministic Python rendering: one function per model function with
    its reduced parameter list; counters in dicts; calls via the runtime
    helper. Executing a function returns the aggregate counts of its scope."""
    lines: list[str] = []
    lines.append('"""Instruction-mix model generated by statmodel %s."""'
                 % model.meta.get("tool_version", "0.1.0"))
    lines.append("")
    lines.append(f"from {_SHIM_MODULE} import handle_function_call")
    lines.append("")
    for name in sorted(model.functions):
        fn = model.functions[name]
        params = model.effective_params(name)
        lift = model.lift_map(name)
        signature = ", ".join(p.name for p in params)
        lines.append("")
        lines.append(f"def {name}({signature}):")
        lines.append("    counts = {}")
        for category in sorted(fn.body):
            expr = to_python_expr(fn.body[category])
            lines.append(f'    counts["{category}"] = {expr}')
        for idx, site in enumerate(fn.calls):
            if site.external:
                lines.append(
                    f"    # external call to {site.callee} at line {site.line}: "
                    "only its call-sequence instructions are counted"
                )
                continue
            callee_params = model.effective_params(site.callee)
            args = ", ".join(lift[idx][p.name] for p in callee_params)
            iters = to_python_expr(site.iterations)
            lines.append(
                f"    counts = handle_function_call(counts, {site.callee}({args}), {iters})"
            )
        lines.append("    return counts")
    if model.entry is not None:
        lines.append("")
        lines.append("")
        lines.append(f'ENTRY = "{model.entry}"')
    return "\n".join(lines) + "\n"
