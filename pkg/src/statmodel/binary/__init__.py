"""Binary evidence: ELF sections, DWARF line tables, disassembly, categories."""

from .archdesc import ArchDescription, categorize, default_archdesc, load_archdesc, parse_archdesc
from .disasm import InstructionRecord, parse_disassembly
from .dwarf_line import LineRow, LineTable, decode_line_program
from .elf import ElfImage, Section, load_elf, parse_elf
from .linemap import UNATTRIBUTED, map_lines

__all__ = [
    "ArchDescription",
    "ElfImage",
    "InstructionRecord",
    "LineRow",
    "LineTable",
    "Section",
    "UNATTRIBUTED",
    "categorize",
    "decode_line_program",
    "default_archdesc",
    "load_archdesc",
    "load_elf",
    "map_lines",
    "parse_archdesc",
    "parse_disassembly",
    "parse_elf",
]
