"""Address-to-line attribution joining the line table with disassembly."""

from __future__ import annotations

from bisect import bisect_right

from .disasm import InstructionRecord
from .dwarf_line import LineTable

# instructions that no line-table sequence covers are collected here
UNATTRIBUTED = ("", 0)


def map_lines(
    table: LineTable, instrs: list[InstructionRecord]
) -> dict[tuple[str, int], list[InstructionRecord]]:
    """Attribute each instruction to the last table row at or below its address
    within the covering sequence (standard line-table interval semantics).

    Instructions before a sequence's first row or at/after its end_sequence
    address fall under the UNATTRIBUTED sentinel key.
    """
    spans: list[tuple[int, int, list[int], list]] = []
    for seq in table.sequences():
        body = [row for row in seq if not row.end_sequence]
        if not body:
            continue
        end_addr = seq[-1].address if seq[-1].end_sequence else body[-1].address + 1
        addrs = [row.address for row in body]
        spans.append((body[0].address, end_addr, addrs, body))
    spans.sort(key=lambda s: s[0])

    out: dict[tuple[str, int], list[InstructionRecord]] = {}
    for instr in sorted(instrs, key=lambda r: r.address):
        key = UNATTRIBUTED
        for start, end, addrs, body in spans:
            if start <= instr.address < end:
                row = body[bisect_right(addrs, instr.address) - 1]
                key = (row.file, row.line)
                break
        out.setdefault(key, []).append(instr)
    return out
