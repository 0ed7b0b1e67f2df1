"""Parser for objdump-style AT&T disassembly text."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from ..errors import DisassemblyError

_SYMBOL_RE = re.compile(r"^([0-9a-fA-F]+)\s+<(.+)>:\s*$")
_INSTR_RE = re.compile(
    r"^\s+([0-9a-fA-F]+):\t([0-9a-fA-F]{2}(?: [0-9a-fA-F]{2})*) *(?:\t(.*))?$"
)
_NOISE_RE = re.compile(
    r"^\s*$"  # blank
    r"|^Disassembly of section .*:$"
    r"|^.*:\s+file format .*$"
    r"|^\s*\.\.\.\s*$"
)


@dataclass
class InstructionRecord:
    address: int
    mnemonic: str
    operands: str
    function_symbol: str | None = None
    category: str | None = None
    size: int = 0  # encoded byte count, used to absorb continuation lines


def parse_disassembly(
    text: str, on_warning: Callable[[str], None] | None = None
) -> list[InstructionRecord]:
    """One record per instruction line; `<symbol>:` headers set function_symbol.

    Lines that look like instruction lines but carry no tab-separated mnemonic
    are reported as unparsable (warning) and skipped, except byte-continuation
    lines of a preceding multi-byte instruction, which extend that record.
    More than 10% unparsable instruction-like lines is a hard error.
    """
    records: list[InstructionRecord] = []
    warnings: list[str] = []
    symbol: str | None = None
    candidates = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if _NOISE_RE.match(line):
            continue
        m = _SYMBOL_RE.match(line)
        if m:
            symbol = m.group(2)
            continue
        m = _INSTR_RE.match(line)
        if m:
            candidates += 1
            address = int(m.group(1), 16)
            nbytes = len(m.group(2).split())
            mnemonic_part = (m.group(3) or "").strip()
            if not mnemonic_part:
                prev = records[-1] if records else None
                if prev is not None and prev.address + prev.size == address:
                    prev.size += nbytes  # continuation of a long encoding
                    continue
                warnings.append(f"line {lineno}: instruction line without mnemonic")
                continue
            fields = mnemonic_part.split(None, 1)
            mnemonic = fields[0].lower()
            operands = fields[1].strip() if len(fields) > 1 else ""
            records.append(
                InstructionRecord(address, mnemonic, operands, symbol, None, nbytes)
            )
            continue
        candidates += 1
        warnings.append(f"line {lineno}: unparsable line {line.strip()!r}")
    if on_warning is not None:
        for w in warnings:
            on_warning(w)
    if candidates and len(warnings) > candidates * 0.10:
        raise DisassemblyError(
            f"{len(warnings)} of {candidates} instruction-like lines unparsable"
        )
    seen: set[int] = set()
    for rec in records:
        if rec.address in seen:
            raise DisassemblyError(f"duplicate instruction address {rec.address:#x}")
        seen.add(rec.address)
    return records
