"""Canonical JSON interchange for models; round-trip is identity."""

from __future__ import annotations

import json

from ..errors import MalformedModel, SchemaVersionMismatch
from ..polyhedral import IntConst, parse_sexpr, to_sexpr
from .core import SCHEMA_VERSION, FunctionModel, Model, ModelCallSite, ParamEntry


def model_to_dict(model: Model) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "arch_ref": model.arch_ref,
        "params": [
            {"name": p.name, "source_line": p.source_line} for p in model.params
        ],
        "functions": {
            name: {
                "body": {cat: to_sexpr(expr) for cat, expr in sorted(fn.body.items())},
                "calls": [
                    {
                        "callee": site.callee,
                        "line": site.line,
                        "iterations": to_sexpr(site.iterations),
                        "external": site.external,
                    }
                    for site in fn.calls
                ],
                "own_params": [
                    {"name": p.name, "source_line": p.source_line}
                    for p in fn.own_params
                ],
            }
            for name, fn in sorted(model.functions.items())
        },
        "entry": model.entry,
        "meta": model.meta,
    }


def serialize(model: Model) -> bytes:
    """Canonical UTF-8 JSON: sorted keys, two-space indent, trailing newline."""
    return (
        json.dumps(model_to_dict(model), indent=2, sort_keys=True, ensure_ascii=True)
        + "\n"
    ).encode("utf-8")


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise MalformedModel(message)


def deserialize(data: bytes | str) -> Model:
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedModel(f"not valid JSON: {exc}") from None
    _require(isinstance(doc, dict), "top level must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            f"schema_version {version!r} not supported (expected {SCHEMA_VERSION})"
        )
    _require(isinstance(doc.get("arch_ref"), str), "arch_ref must be a string")
    _require(isinstance(doc.get("functions"), dict), "functions must be an object")
    _require(isinstance(doc.get("params"), list), "params must be a list")
    entry = doc.get("entry")
    _require(entry is None or isinstance(entry, str), "entry must be a name or null")
    meta = doc.get("meta", {})
    _require(isinstance(meta, dict), "meta must be an object")

    def parse_params(raw, where) -> tuple[ParamEntry, ...]:
        out = []
        for p in raw:
            _require(
                isinstance(p, dict) and isinstance(p.get("name"), str),
                f"{where}: parameter entries need a name",
            )
            line = p.get("source_line")
            _require(
                line is None or isinstance(line, int), f"{where}: bad source_line"
            )
            out.append(ParamEntry(p["name"], line))
        return tuple(out)

    functions: dict[str, FunctionModel] = {}
    for name, raw in doc["functions"].items():
        _require(isinstance(raw, dict), f"function {name}: must be an object")
        body_raw = raw.get("body", {})
        _require(isinstance(body_raw, dict), f"function {name}: body must be an object")
        body = {}
        for cat, sexpr in body_raw.items():
            _require(isinstance(sexpr, str), f"function {name}/{cat}: count must be text")
            expr = parse_sexpr(sexpr)
            if isinstance(expr, IntConst) and expr.value < 0:
                raise MalformedModel(
                    f"function {name}/{cat}: negative count constant {expr.value}"
                )
            body[cat] = expr
        calls = []
        for site in raw.get("calls", []):
            _require(
                isinstance(site, dict)
                and isinstance(site.get("callee"), str)
                and isinstance(site.get("line"), int)
                and isinstance(site.get("iterations"), str)
                and isinstance(site.get("external"), bool),
                f"function {name}: malformed call site",
            )
            calls.append(
                ModelCallSite(
                    site["callee"],
                    site["line"],
                    parse_sexpr(site["iterations"]),
                    site["external"],
                )
            )
        functions[name] = FunctionModel(
            body, tuple(calls), parse_params(raw.get("own_params", []), name)
        )

    for name, fn in functions.items():
        for site in fn.calls:
            if not site.external and site.callee not in functions:
                raise MalformedModel(
                    f"function {name}: call to unknown function '{site.callee}'"
                )

    model = Model(functions, parse_params(doc["params"], "params"), entry, doc["arch_ref"], meta)
    if entry is not None and entry not in functions:
        raise MalformedModel(f"entry '{entry}' is not a function in the model")
    # the stored global parameter list must match what the functions imply
    from .core import _model_params

    expected = _model_params(model)
    if tuple(model.params) != expected:
        raise MalformedModel(
            "stored parameter list does not match the functions: "
            f"stored {[p.name for p in model.params]}, "
            f"derived {[p.name for p in expected]}"
        )
    return model
