"""Parametric model assembly and native evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..binary.archdesc import ArchDescription
from ..errors import (
    DuplicateFunction,
    ModelGapError,
    UnboundParameter,
    UnknownFunction,
    UnresolvedCallee,
)
from ..metrics import FunctionMetrics
from ..polyhedral import CountExpr, eval_count

SCHEMA_VERSION = 1
FIXED_TIMESTAMP = "1970-01-01T00:00:00Z"


@dataclass(frozen=True)
class ModelCallSite:
    callee: str  # mangled name; raw source name when external
    line: int
    iterations: CountExpr
    external: bool = False


@dataclass(frozen=True)
class FunctionModel:
    body: dict[str, CountExpr]
    calls: tuple[ModelCallSite, ...]
    own_params: tuple["ParamEntry", ...] = ()


@dataclass(frozen=True)
class ParamEntry:
    name: str
    source_line: int | None = None


@dataclass
class Model:
    functions: dict[str, FunctionModel]
    params: tuple[ParamEntry, ...]
    entry: str | None
    arch_ref: str
    meta: dict

    def effective_params(self, name: str) -> list[ParamEntry]:
        """Externally-required inputs of `name`: its own parameters plus the
        parameters of its callees lifted through each call site as
        `<param>_<line>` (per-call-site values, supplied by the caller's
        caller or the user)."""
        return _effective_params(self, name, {})

    def lift_map(self, name: str) -> dict[int, dict[str, str]]:
        """call-site order -> callee param -> caller-side lifted name."""
        _effective_params(self, name, cache := {})
        return cache[name][1]


def _effective_params(model: Model, name: str, cache: dict) -> list[ParamEntry]:
    if name in cache:
        return cache[name][0]
    fn = model.functions.get(name)
    if fn is None:
        raise UnknownFunction(name)
    params: list[ParamEntry] = list(fn.own_params)
    seen = {p.name for p in params}
    lift: dict[int, dict[str, str]] = {}
    for idx, site in enumerate(fn.calls):
        lift[idx] = {}
        if site.external:
            continue
        for p in _effective_params(model, site.callee, cache):
            lifted = f"{p.name}_{site.line}"
            while lifted in seen and lift[idx].get(p.name) != lifted:
                if any(e.name == lifted and e.source_line == site.line for e in params):
                    break  # same site+name merged (two identical calls on one line)
                lifted = f"{lifted}_{site.line}"
            if lifted not in seen:
                params.append(ParamEntry(lifted, site.line))
                seen.add(lifted)
            lift[idx][p.name] = lifted
    cache[name] = (params, lift)
    return params


def build_model(
    metrics: list[FunctionMetrics],
    arch: ArchDescription,
    meta: dict | None = None,
) -> Model:
    """Assemble per-function metrics into a validated, evaluable model."""
    by_name: dict[str, FunctionMetrics] = {}
    for fm in metrics:
        if fm.mangled_name in by_name:
            raise DuplicateFunction(f"function '{fm.mangled_name}' defined twice")
        by_name[fm.mangled_name] = fm

    functions: dict[str, FunctionModel] = {}
    for fm in metrics:
        calls: list[ModelCallSite] = []
        for site in fm.call_sites:
            resolved = _resolve_callee(by_name, site.callee_name, site.arity)
            if resolved is None:
                calls.append(
                    ModelCallSite(site.callee_name, site.line, site.multiplier, True)
                )
            else:
                calls.append(ModelCallSite(resolved, site.line, site.multiplier, False))
        functions[fm.mangled_name] = FunctionModel(
            dict(fm.body),
            tuple(calls),
            tuple(ParamEntry(p.name, p.source_line) for p in fm.params),
        )

    _reject_call_cycles(functions)

    entry = "main_0" if "main_0" in functions else None
    full_meta = {
        "schema": "statmodel",
        "created": FIXED_TIMESTAMP,
        "notes": [],
        "gaps": [],
        "source_files": [],
        "tool_version": "0.1.0",
    }
    full_meta.update(meta or {})
    full_meta["notes"] = list(full_meta["notes"]) + [
        note for fm in metrics for note in fm.notes
    ]
    full_meta["gaps"] = list(full_meta["gaps"]) + [
        f"{fm.mangled_name}: {g}" for fm in metrics for g in fm.gaps
    ]
    model = Model(functions, (), entry, arch.identity, full_meta)
    model.params = _model_params(model)
    return model


def _model_params(model: Model) -> tuple[ParamEntry, ...]:
    if model.entry is not None:
        return tuple(model.effective_params(model.entry))
    merged: dict[str, ParamEntry] = {}
    for name in sorted(model.functions):
        for p in model.effective_params(name):
            merged.setdefault(p.name, p)
    return tuple(merged[k] for k in sorted(merged))


def _resolve_callee(by_name, callee: str, arity: int) -> str | None:
    """Match a source-level call to a model function: free functions first,
    then class-scoped methods by bare name. Ambiguity is an error; no match
    means the callee is external."""
    free = f"{callee}_{arity}"
    if free in by_name:
        return free
    suffix = f"_{callee}_{arity}"
    candidates = [m for m in by_name if m.endswith(suffix)]
    if len(candidates) > 1:
        raise UnresolvedCallee(
            f"call to '{callee}/{arity}' is ambiguous: {sorted(candidates)}"
        )
    return candidates[0] if candidates else None


def _reject_call_cycles(functions: dict[str, FunctionModel]) -> None:
    WHITE, GRAY, BLACK = 0, 1, 2
    state = {name: WHITE for name in functions}

    def visit(name: str, stack: list[str]) -> None:
        state[name] = GRAY
        stack.append(name)
        for site in functions[name].calls:
            if site.external:
                continue
            if state.get(site.callee, WHITE) == GRAY:
                cycle = stack[stack.index(site.callee) :] + [site.callee]
                raise ModelGapError(
                    "recursive call cycle is not modelable: " + " -> ".join(cycle)
                )
            if state.get(site.callee, WHITE) == WHITE:
                visit(site.callee, stack)
        stack.pop()
        state[name] = BLACK

    for name in functions:
        if state[name] == WHITE:
            visit(name, [])


# --- evaluation ----------------------------------------------------------------


@dataclass
class EvaluationResult:
    root: str
    binding: dict[str, int]
    per_category: dict[str, int]
    per_function: dict[str, dict[str, int]]
    flags: list[str] = field(default_factory=list)

    def total(self) -> int:
        return sum(self.per_category.values())

    def to_json_dict(self) -> dict:
        return {
            "root": self.root,
            "binding": dict(sorted(self.binding.items())),
            "per_category": dict(sorted(self.per_category.items())),
            "per_function": {
                fn: dict(sorted(cats.items()))
                for fn, cats in sorted(self.per_function.items())
            },
            "flags": list(self.flags),
            "total": self.total(),
        }


def evaluate(model: Model, root: str, binding: dict[str, int]) -> EvaluationResult:
    """Recursive composition: result(f) = body(f) + sum(iters_i * result(callee_i)).

    External callees contribute nothing beyond the call-sequence instructions
    already present in the caller's body. Per-function exclusive totals
    partition the per-category totals exactly.
    """
    if root not in model.functions:
        raise UnknownFunction(root)
    required = {p.name for p in model.effective_params(root)}
    missing = required - binding.keys()
    if missing:
        raise UnboundParameter(missing)

    per_category: dict[str, int] = {}
    per_function: dict[str, dict[str, int]] = {}
    flags: list[str] = []

    def rec(name: str, local: dict[str, int], multiplier: int) -> None:
        fn = model.functions[name]
        bucket = per_function.setdefault(name, {})
        for category, expr in sorted(fn.body.items()):
            value = eval_count(expr, local) * multiplier
            if value:
                bucket[category] = bucket.get(category, 0) + value
                per_category[category] = per_category.get(category, 0) + value
        lift = model.lift_map(name)
        for idx, site in enumerate(fn.calls):
            if site.external:
                flags.append(
                    f"{name} line {site.line}: external callee '{site.callee}' "
                    "contributes only its call-sequence instructions"
                )
                continue
            iters = eval_count(site.iterations, local)
            if iters == 0:
                continue
            callee_binding = {
                p: local[lifted] for p, lifted in lift[idx].items()
            }
            rec(site.callee, callee_binding, multiplier * iters)

    local = {p.name: binding[p.name] for p in model.effective_params(root)}
    rec(root, local, 1)
    flags.extend(f"analysis: {n}" for n in model.meta.get("notes", []) if "OVERAPPROX" in n)
    return EvaluationResult(root, dict(binding), per_category, per_function, flags)
