"""Equivalence harness: emitted Python model vs native CLI evaluation.

Consumes only the tool's external interfaces: the model JSON file (for
parameter names and the entry function), the emitted .py module, and
`statmodel eval --json` run as a subprocess. Comparisons are category-wise
exact integer equality; zero counts and missing keys are interchangeable.
"""

from __future__ import annotations

import argparse
import importlib.util
import inspect
import json
import random
import subprocess
import sys
from dataclasses import dataclass, field
from pathlib import Path


@dataclass
class BindingOutcome:
    binding: dict[str, int]
    matched: bool
    detail: str = ""


@dataclass
class HarnessReport:
    model_path: str
    emitted_path: str
    root: str
    outcomes: list[BindingOutcome] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(o.matched for o in self.outcomes)

    def first_mismatch(self) -> BindingOutcome | None:
        for o in self.outcomes:
            if not o.matched:
                return o
        return None

    def text(self) -> str:
        lines = [
            f"model:   {self.model_path}",
            f"emitted: {self.emitted_path}",
            f"root:    {self.root}",
        ]
        for o in self.outcomes:
            status = "ok" if o.matched else "MISMATCH"
            lines.append(f"  {json.dumps(o.binding, sort_keys=True)}: {status}"
                         + (f" ({o.detail})" if o.detail else ""))
        lines.append(f"{sum(o.matched for o in self.outcomes)}/{len(self.outcomes)} bindings agree")
        return "\n".join(lines)


def load_model_info(model_json: str | Path) -> tuple[list[str], str | None]:
    """Parameter names and entry from a model file (documented JSON format)."""
    doc = json.loads(Path(model_json).read_text())
    params = [p["name"] for p in doc.get("params", [])]
    return params, doc.get("entry")


def import_emitted(emitted_py: str | Path):
    """Import the generated module from its file path; errors surface verbatim."""
    path = Path(emitted_py)
    spec = importlib.util.spec_from_file_location(f"emitted_{path.stem}", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def _native_eval(
    statmodel_cmd: list[str], model_json: str, root: str, binding: dict[str, int]
):
    cmd = list(statmodel_cmd) + ["eval", str(model_json), "--function", root, "--json"]
    for name, value in sorted(binding.items()):
        cmd += ["-p", f"{name}={value}"]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        return None, proc.stderr.strip()
    return json.loads(proc.stdout)["per_category"], None


def _emitted_eval(module, root: str, binding: dict[str, int]):
    fn = getattr(module, root, None)
    if fn is None:
        return None, f"emitted module has no function {root!r}"
    accepted = set(inspect.signature(fn).parameters)
    missing = accepted - binding.keys()
    if missing:
        return None, f"missing parameter(s): {', '.join(sorted(missing))}"
    kwargs = {k: v for k, v in binding.items() if k in accepted}
    counts = fn(**kwargs)
    return {k: v for k, v in counts.items() if v != 0}, None


def harness_compare(
    model_json: str | Path,
    emitted_py: str | Path,
    bindings: list[dict[str, int]],
    root: str | None = None,
    statmodel_cmd: list[str] | None = None,
) -> HarnessReport:
    """Run both evaluators per binding and compare exactly.

    A binding on which both sides fail (e.g. an unbound parameter) counts as
    agreement; the details record both failure messages.
    """
    statmodel_cmd = statmodel_cmd or ["statmodel"]
    params, entry = load_model_info(model_json)
    root = root or entry
    if root is None:
        raise ValueError("model has no entry function; pass root explicitly")
    module = import_emitted(emitted_py)
    report = HarnessReport(str(model_json), str(emitted_py), root)
    for binding in bindings:
        native, native_err = _native_eval(statmodel_cmd, str(model_json), root, binding)
        try:
            emitted, emitted_err = _emitted_eval(module, root, binding)
        except Exception as exc:  # execution errors surface verbatim
            emitted, emitted_err = None, f"{type(exc).__name__}: {exc}"
        if native_err is not None or emitted_err is not None:
            both_failed = native_err is not None and emitted_err is not None
            report.outcomes.append(
                BindingOutcome(
                    binding,
                    both_failed,
                    f"native: {native_err or 'ok'}; emitted: {emitted_err or 'ok'}",
                )
            )
            continue
        native_nz = {k: v for k, v in native.items() if v != 0}
        if native_nz == emitted:
            report.outcomes.append(BindingOutcome(binding, True))
        else:
            diff_keys = sorted(
                k
                for k in set(native_nz) | set(emitted)
                if native_nz.get(k, 0) != emitted.get(k, 0)
            )
            report.outcomes.append(
                BindingOutcome(
                    binding,
                    False,
                    "; ".join(
                        f"{k}: native {native_nz.get(k, 0)} != emitted {emitted.get(k, 0)}"
                        for k in diff_keys
                    ),
                )
            )
    return report


def random_bindings(
    model_json: str | Path, count: int, seed: int, low: int = -10, high: int = 10**6
) -> list[dict[str, int]]:
    params, _ = load_model_info(model_json)
    rng = random.Random(seed)
    return [{p: rng.randint(low, high) for p in params} for _ in range(count)]


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="statmodel-harness",
        description="Compare an emitted Python model against native evaluation.",
    )
    parser.add_argument("model", metavar="MODEL.json")
    parser.add_argument("emitted", metavar="MODEL.py")
    parser.add_argument("--root", help="root function (defaults to the model entry)")
    parser.add_argument("--bindings", metavar="FILE.json",
                        help="JSON list of {param: int} objects")
    parser.add_argument("--random", type=int, default=0, metavar="N",
                        help="additionally check N seeded random bindings")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--statmodel", default="statmodel",
                        help="native CLI command (default: statmodel)")
    args = parser.parse_args(argv)

    bindings: list[dict[str, int]] = []
    if args.bindings:
        bindings.extend(json.loads(Path(args.bindings).read_text()))
    if args.random:
        bindings.extend(random_bindings(args.model, args.random, args.seed))
    if not bindings:
        bindings.append({p: 1 for p in load_model_info(args.model)[0]})

    report = harness_compare(
        args.model,
        args.emitted,
        bindings,
        root=args.root,
        statmodel_cmd=args.statmodel.split(),
    )
    print(report.text())
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
