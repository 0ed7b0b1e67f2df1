"""Command-line driver: analyze sources+binary into a model, then evaluate,
export or report from it.

Exit codes: 0 success; 2 model gaps under --strict; 64 usage; 65 invalid
data (bad source, annotation, model file, unknown function/parameter);
66 unreadable or unusable input (missing file, not an ELF, no debug info);
73 output cannot be written; 1 unexpected internal failure. Diagnostics go
to stderr as single `statmodel: error: <Kind>: <message>` lines; stdout
carries data.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, errors
from .binary import (
    decode_line_program,
    load_archdesc,
    load_elf,
    map_lines,
    parse_disassembly,
)
from .frontend import parse_source
from .metrics import collect_bottom_up, generate_top_down
from .model import (
    FIXED_TIMESTAMP,
    build_model,
    deserialize,
    emit_python,
    evaluate,
    report,
    serialize,
)

EX_OK = 0
EX_GAPS = 2
EX_USAGE = 64
EX_DATAERR = 65
EX_NOINPUT = 66
EX_CANTCREAT = 73

_DATA_ERRORS = (
    errors.SourceSyntaxError,
    errors.UnsupportedConstruct,
    errors.MalformedAnnotation,
    errors.UnknownAnnotationKey,
    errors.AnnotationMismatch,
    errors.DisassemblyError,
    errors.ArchDescriptionError,
    errors.ModelGapError,
    errors.DuplicateFunction,
    errors.UnresolvedCallee,
    errors.UnknownFunction,
    errors.UnboundParameter,
    errors.SchemaVersionMismatch,
    errors.MalformedModel,
    errors.ZeroDenominator,
    errors.NonAffineBound,
    errors.NonAffineCondition,
    errors.EnumerationTooLarge,
)
_INPUT_ERRORS = (
    errors.NotAnElf,
    errors.MissingDebugInfo,
    errors.UnsupportedDwarfVersion,
    errors.CorruptLineProgram,
    FileNotFoundError,
    IsADirectoryError,
    PermissionError,
)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="statmodel",
        description="Static instruction-mix performance models from C-subset "
        "sources and ELF debug info.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="build a model from sources and a binary")
    analyze.add_argument("--source", action="append", required=True, metavar="FILE")
    analyze.add_argument("--elf", required=True, metavar="FILE")
    analyze.add_argument("--disasm", required=True, metavar="FILE")
    analyze.add_argument("--arch", metavar="FILE", help="architecture description "
                         "(falls back to $STATMODEL_ARCH)")
    analyze.add_argument("-o", "--output", default="model.json", metavar="FILE")
    analyze.add_argument("--strict", action="store_true",
                         help="treat model gaps as failures (exit 2)")
    analyze.add_argument("--reproducible", action="store_true",
                         help="fixed metadata timestamp for byte-identical output")

    ev = sub.add_parser("eval", help="evaluate a model under parameter bindings")
    ev.add_argument("model", metavar="MODEL.json")
    ev.add_argument("-p", "--param", action="append", default=[], metavar="NAME=INT")
    ev.add_argument("--function", metavar="NAME", help="root (defaults to the entry)")
    ev.add_argument("--json", action="store_true")

    export = sub.add_parser("export", help="emit the model as a Python module")
    export.add_argument("model", metavar="MODEL.json")
    export.add_argument("-o", "--output", default="model.py", metavar="FILE")

    rep = sub.add_parser("report", help="distribution or arithmetic-intensity report")
    rep.add_argument("model", metavar="MODEL.json")
    rep.add_argument("--report", choices=("distribution", "ai"), default="distribution")
    rep.add_argument("-p", "--param", action="append", default=[], metavar="NAME=INT")
    rep.add_argument("--function", metavar="NAME")
    rep.add_argument("--arch", metavar="FILE", help="needed for --report ai "
                     "(falls back to $STATMODEL_ARCH)")
    rep.add_argument("--json", action="store_true")
    return parser


def _arch_path(explicit: str | None) -> str:
    path = explicit or os.environ.get("STATMODEL_ARCH")
    if not path:
        raise _UsageError("--arch is required (or set STATMODEL_ARCH)")
    return path


def _parse_bindings(pairs: list[str]) -> dict[str, int]:
    binding: dict[str, int] = {}
    for pair in pairs:
        name, sep, value = pair.partition("=")
        if not sep or not name:
            raise _UsageError(f"bad -p argument {pair!r}; expected NAME=INT")
        try:
            binding[name] = int(value)
        except ValueError:
            raise _UsageError(f"parameter {name!r} needs an integer, got {value!r}") from None
    return binding


def _load_model(path: str):
    return deserialize(Path(path).read_bytes())


def _pick_root(model, function: str | None) -> str:
    if function:
        return function
    if model.entry:
        return model.entry
    raise errors.UnknownFunction(
        "<entry>: the model has no entry function; pass --function"
    )


def cmd_analyze(args) -> int:
    arch = load_archdesc(_arch_path(args.arch))
    elf = load_elf(args.elf)
    table = decode_line_program(elf)
    disasm_warnings: list[str] = []
    instrs = parse_disassembly(Path(args.disasm).read_text(), disasm_warnings.append)
    line_map = map_lines(table, instrs)

    all_metrics = []
    all_notes = list(disasm_warnings)
    sources = []
    for src_path in args.source:
        unit = parse_source(Path(src_path).read_text(), src_path)
        collect_bottom_up(unit)
        result = generate_top_down(unit, line_map, arch)
        all_metrics.extend(result.functions)
        all_notes.extend(f"{src_path}: {n}" for n in result.notes)
        sources.append(src_path)

    created = FIXED_TIMESTAMP if args.reproducible else (
        datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    )
    model = build_model(
        all_metrics,
        arch,
        {
            "source_files": [os.path.basename(s) for s in sorted(sources)],
            "created": created,
            "notes": all_notes,
            "tool_version": __version__,
        },
    )
    _write_bytes(args.output, serialize(model))

    gaps = model.meta.get("gaps", [])
    for note in all_notes:
        print(f"statmodel: note: {note}", file=sys.stderr)
    for gap in gaps:
        print(f"statmodel: gap: {gap}", file=sys.stderr)
    print(
        f"statmodel: wrote {args.output} "
        f"({len(model.functions)} function(s), {len(model.params)} parameter(s))",
        file=sys.stderr,
    )
    if gaps and args.strict:
        return EX_GAPS
    return EX_OK


def cmd_eval(args) -> int:
    model = _load_model(args.model)
    root = _pick_root(model, args.function)
    result = evaluate(model, root, _parse_bindings(args.param))
    if args.json:
        print(json.dumps(result.to_json_dict(), indent=2, sort_keys=True))
        return EX_OK
    width = max([len(c) for c in result.per_category] + [8])
    print(f"root: {root}")
    for category in sorted(result.per_category):
        print(f"  {category.ljust(width)}  {result.per_category[category]:>16}")
    print(f"  {'total'.ljust(width)}  {result.total():>16}")
    for flag in result.flags:
        print(f"statmodel: note: {flag}", file=sys.stderr)
    return EX_OK


def cmd_export(args) -> int:
    model = _load_model(args.model)
    _write_bytes(args.output, emit_python(model).encode("utf-8"))
    print(f"statmodel: wrote {args.output}", file=sys.stderr)
    return EX_OK


def cmd_report(args) -> int:
    model = _load_model(args.model)
    root = _pick_root(model, args.function)
    binding = _parse_bindings(args.param)
    arch = None
    if args.report == "ai":
        arch = load_archdesc(_arch_path(args.arch))
        if arch.identity != model.arch_ref:
            print(
                "statmodel: note: architecture description differs from the one "
                "used at analysis time",
                file=sys.stderr,
            )
    rep = report(model, root, binding, args.report, arch)
    if args.json:
        print(json.dumps(rep.to_json_dict(), indent=2, sort_keys=True))
    else:
        print(rep.text())
    return EX_OK


def _write_bytes(path: str, payload: bytes) -> None:
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise _WriteError(f"cannot write {path}: {exc}") from None


class _WriteError(Exception):
    pass


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "analyze": cmd_analyze,
            "eval": cmd_eval,
            "export": cmd_export,
            "report": cmd_report,
        }[args.command]
        return handler(args)
    except _UsageError as exc:
        print(f"statmodel: error: Usage: {exc}", file=sys.stderr)
        return EX_USAGE
    except _WriteError as exc:
        print(f"statmodel: error: CannotWrite: {exc}", file=sys.stderr)
        return EX_CANTCREAT
    except _INPUT_ERRORS as exc:
        print(f"statmodel: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EX_NOINPUT
    except _DATA_ERRORS as exc:
        print(f"statmodel: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EX_DATAERR
    except Exception as exc:  # pragma: no cover - defensive
        print(f"statmodel: error: Internal: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
