"""DWARF .debug_line decoder: executes the line-number program state machine.

Supports DWARF versions 3, 4 and 5, both 32-bit and 64-bit DWARF formats,
little and big endian. Version 2 is rejected. The decoder yields one row per
emitted matrix entry (special opcode, `copy`, or `end_sequence`), with the
file register resolved to the file-table entry's name as written by the
producer (no directory joining).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import CorruptLineProgram, MissingDebugInfo, UnsupportedDwarfVersion
from .elf import ElfImage

# standard opcodes
_DW_LNS_copy = 1
_DW_LNS_advance_pc = 2
_DW_LNS_advance_line = 3
_DW_LNS_set_file = 4
_DW_LNS_set_column = 5
_DW_LNS_negate_stmt = 6
_DW_LNS_set_basic_block = 7
_DW_LNS_const_add_pc = 8
_DW_LNS_fixed_advance_pc = 9
_DW_LNS_set_prologue_end = 10
_DW_LNS_set_epilogue_begin = 11
_DW_LNS_set_isa = 12

# extended opcodes
_DW_LNE_end_sequence = 1
_DW_LNE_set_address = 2
_DW_LNE_define_file = 3
_DW_LNE_set_discriminator = 4

# DWARF 5 directory/file content types
_DW_LNCT_path = 1
_DW_LNCT_directory_index = 2

# forms used in DWARF 5 directory/file tables
_DW_FORM_addr = 0x01
_DW_FORM_block2 = 0x03
_DW_FORM_block4 = 0x04
_DW_FORM_data2 = 0x05
_DW_FORM_data4 = 0x06
_DW_FORM_data8 = 0x07
_DW_FORM_string = 0x08
_DW_FORM_block = 0x09
_DW_FORM_block1 = 0x0A
_DW_FORM_data1 = 0x0B
_DW_FORM_sdata = 0x0D
_DW_FORM_strp = 0x0E
_DW_FORM_udata = 0x0F
_DW_FORM_data16 = 0x1E
_DW_FORM_line_strp = 0x1F


@dataclass(frozen=True)
class LineRow:
    address: int
    file: str
    line: int
    column: int
    is_stmt: bool
    end_sequence: bool


@dataclass(frozen=True)
class LineTable:
    rows: tuple[LineRow, ...]

    def sequences(self) -> list[tuple[LineRow, ...]]:
        """Split rows into address-sorted sequences ending in end_sequence."""
        out: list[tuple[LineRow, ...]] = []
        current: list[LineRow] = []
        for row in self.rows:
            current.append(row)
            if row.end_sequence:
                out.append(tuple(current))
                current = []
        if current:
            out.append(tuple(current))
        return out


class _Reader:
    """Bounded cursor over section bytes; offsets are section-relative."""

    def __init__(self, data: bytes, pos: int, end: int, endian: str):
        self.data = data
        self.pos = pos
        self.end = end
        self.little = endian == "little"

    def _need(self, n: int) -> None:
        if self.pos + n > self.end:
            raise CorruptLineProgram("unexpected end of line program", self.pos)

    def bytes(self, n: int) -> bytes:
        self._need(n)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.bytes(1)[0]

    def uint(self, n: int) -> int:
        return int.from_bytes(self.bytes(n), "little" if self.little else "big")

    def sint(self, n: int) -> int:
        return int.from_bytes(
            self.bytes(n), "little" if self.little else "big", signed=True
        )

    def uleb(self) -> int:
        result = 0
        shift = 0
        while True:
            b = self.u8()
            result |= (b & 0x7F) << shift
            if not b & 0x80:
                return result
            shift += 7

    def sleb(self) -> int:
        result = 0
        shift = 0
        while True:
            b = self.u8()
            result |= (b & 0x7F) << shift
            shift += 7
            if not b & 0x80:
                if b & 0x40:
                    result -= 1 << shift
                return result

    def strz(self) -> str:
        endpos = self.data.find(b"\0", self.pos, self.end)
        if endpos < 0:
            raise CorruptLineProgram("unterminated string", self.pos)
        out = self.data[self.pos : endpos].decode("utf-8", "replace")
        self.pos = endpos + 1
        return out


def _str_at(section: bytes | None, offset: int, what: str, pos: int) -> str:
    if section is None:
        raise CorruptLineProgram(f"file name references missing {what} section", pos)
    endpos = section.find(b"\0", offset)
    if offset >= len(section) or endpos < 0:
        raise CorruptLineProgram(f"bad {what} offset {offset:#x}", pos)
    return section[offset:endpos].decode("utf-8", "replace")


def decode_line_program(elf: ElfImage) -> LineTable:
    """Decode every unit in .debug_line into a flat, validated row list."""
    section = elf.section_data(".debug_line")
    if section is None:
        raise MissingDebugInfo(f"{elf.path}: no .debug_line section; recompile with -g")
    line_str = elf.section_data(".debug_line_str")
    debug_str = elf.section_data(".debug_str")
    rows: list[LineRow] = []
    r = _Reader(section, 0, len(section), elf.endianness)
    while r.pos < len(r.data):
        _decode_unit(r, elf, line_str, debug_str, rows)
    table = LineTable(tuple(rows))
    _validate(table)
    return table


def _decode_unit(
    r: _Reader,
    elf: ElfImage,
    line_str: bytes | None,
    debug_str: bytes | None,
    rows: list[LineRow],
) -> None:
    unit_start = r.pos
    unit_length = r.uint(4)
    offset_size = 4
    if unit_length == 0xFFFFFFFF:
        offset_size = 8
        unit_length = r.uint(8)
    unit_end = r.pos + unit_length
    if unit_end > r.end:
        raise CorruptLineProgram("unit length exceeds section", unit_start)
    u = _Reader(r.data, r.pos, unit_end, "little" if r.little else "big")
    r.pos = unit_end

    version = u.uint(2)
    if version not in (3, 4, 5):
        raise UnsupportedDwarfVersion(version)
    address_size = 8
    if version >= 5:
        address_size = u.u8()
        seg_sel_size = u.u8()
        if seg_sel_size != 0:
            raise CorruptLineProgram(
                f"segmented addressing (selector size {seg_sel_size}) not supported", u.pos
            )
    header_length = u.uint(offset_size)
    program_start = u.pos + header_length
    if program_start > unit_end:
        raise CorruptLineProgram("header length exceeds unit", u.pos)

    min_inst_len = u.u8()
    max_ops = u.u8() if version >= 4 else 1
    if min_inst_len < 1 or max_ops < 1:
        raise CorruptLineProgram("invalid instruction-length parameters", u.pos)
    default_is_stmt = bool(u.u8())
    line_base = u.sint(1)
    line_range = u.u8()
    opcode_base = u.u8()
    if line_range == 0 or opcode_base == 0:
        raise CorruptLineProgram("invalid line_range/opcode_base", u.pos)
    std_lengths = [u.u8() for _ in range(opcode_base - 1)]

    def read_form(form: int) -> int | str | bytes:
        if form == _DW_FORM_string:
            return u.strz()
        if form == _DW_FORM_line_strp:
            return _str_at(line_str, u.uint(offset_size), ".debug_line_str", u.pos)
        if form == _DW_FORM_strp:
            return _str_at(debug_str, u.uint(offset_size), ".debug_str", u.pos)
        if form == _DW_FORM_udata:
            return u.uleb()
        if form == _DW_FORM_sdata:
            return u.sleb()
        if form == _DW_FORM_data1:
            return u.uint(1)
        if form == _DW_FORM_data2:
            return u.uint(2)
        if form == _DW_FORM_data4:
            return u.uint(4)
        if form == _DW_FORM_data8:
            return u.uint(8)
        if form == _DW_FORM_data16:
            return u.bytes(16)
        if form == _DW_FORM_block:
            return u.bytes(u.uleb())
        if form == _DW_FORM_block1:
            return u.bytes(u.uint(1))
        if form == _DW_FORM_block2:
            return u.bytes(u.uint(2))
        if form == _DW_FORM_block4:
            return u.bytes(u.uint(4))
        raise CorruptLineProgram(f"unsupported form {form:#x} in file table", u.pos)

    file_names: list[str]
    if version >= 5:
        dir_formats = [(u.uleb(), u.uleb()) for _ in range(u.u8())]
        for _ in range(u.uleb()):
            for _, form in dir_formats:
                read_form(form)
        file_formats = [(u.uleb(), u.uleb()) for _ in range(u.u8())]
        file_names = []
        for _ in range(u.uleb()):
            name = None
            for content, form in file_formats:
                value = read_form(form)
                if content == _DW_LNCT_path:
                    name = value
            if not isinstance(name, str):
                raise CorruptLineProgram("file entry without a path", u.pos)
            file_names.append(name)
    else:
        while True:
            d = u.strz()
            if not d:
                break
        file_names = []
        while True:
            name = u.strz()
            if not name:
                break
            u.uleb()  # directory index
            u.uleb()  # mtime
            u.uleb()  # length
            file_names.append(name)

    def resolve_file(index: int, at: int) -> str:
        if version >= 5:
            if 0 <= index < len(file_names):
                return file_names[index]
        else:
            if 1 <= index <= len(file_names):
                return file_names[index - 1]
        raise CorruptLineProgram(f"file register {index} out of range", at)

    # state machine registers
    u.pos = program_start
    address = 0
    op_index = 0
    file = 1
    line = 1
    column = 0
    is_stmt = default_is_stmt

    def advance(operation_advance: int) -> None:
        nonlocal address, op_index
        total = op_index + operation_advance
        address += min_inst_len * (total // max_ops)
        op_index = total % max_ops

    def emit(end_sequence: bool = False) -> None:
        rows.append(
            LineRow(address, resolve_file(file, u.pos), line, column, is_stmt, end_sequence)
        )

    while u.pos < unit_end:
        at = u.pos
        opcode = u.u8()
        if opcode >= opcode_base:
            adjusted = opcode - opcode_base
            advance(adjusted // line_range)
            line += line_base + (adjusted % line_range)
            emit()
        elif opcode == 0:
            length = u.uleb()
            ext_end = u.pos + length
            if length == 0 or ext_end > unit_end:
                raise CorruptLineProgram("bad extended opcode length", at)
            sub = u.u8()
            if sub == _DW_LNE_end_sequence:
                emit(end_sequence=True)
                address = 0
                op_index = 0
                file = 1
                line = 1
                column = 0
                is_stmt = default_is_stmt
            elif sub == _DW_LNE_set_address:
                address = u.uint(ext_end - u.pos)
                op_index = 0
            elif sub == _DW_LNE_define_file and version < 5:
                file_names.append(u.strz())
                u.uleb(), u.uleb(), u.uleb()
            elif sub == _DW_LNE_set_discriminator:
                u.uleb()
            else:
                u.pos = ext_end  # vendor extension: skip
            if u.pos != ext_end:
                raise CorruptLineProgram("extended opcode length mismatch", at)
        elif opcode == _DW_LNS_copy:
            emit()
        elif opcode == _DW_LNS_advance_pc:
            advance(u.uleb())
        elif opcode == _DW_LNS_advance_line:
            line += u.sleb()
        elif opcode == _DW_LNS_set_file:
            file = u.uleb()
        elif opcode == _DW_LNS_set_column:
            column = u.uleb()
        elif opcode == _DW_LNS_negate_stmt:
            is_stmt = not is_stmt
        elif opcode == _DW_LNS_set_basic_block:
            pass
        elif opcode == _DW_LNS_const_add_pc:
            advance((255 - opcode_base) // line_range)
        elif opcode == _DW_LNS_fixed_advance_pc:
            address += u.uint(2)
            op_index = 0
        elif opcode in (_DW_LNS_set_prologue_end, _DW_LNS_set_epilogue_begin):
            pass
        elif opcode == _DW_LNS_set_isa:
            u.uleb()
        else:
            # unknown standard opcode: skip its operands per the header
            for _ in range(std_lengths[opcode - 1]):
                u.uleb()


def _validate(table: LineTable) -> None:
    for seq in table.sequences():
        if not seq[-1].end_sequence:
            raise CorruptLineProgram("sequence does not end with end_sequence", 0)
        addrs = [row.address for row in seq]
        if any(b < a for a, b in zip(addrs, addrs[1:])):
            raise CorruptLineProgram("addresses decrease within a sequence", 0)
