"""Minimal ELF section-table reader (32/64-bit, both endiannesses)."""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

from ..errors import MissingDebugInfo, NotAnElf

_SHT_NOBITS = 8


@dataclass(frozen=True)
class Section:
    name: str
    offset: int
    size: int
    data: bytes


@dataclass(frozen=True)
class ElfImage:
    path: str
    sections: dict[str, Section]
    is_64bit: bool
    endianness: str  # "little" | "big"

    def section_data(self, name: str) -> bytes | None:
        sec = self.sections.get(name)
        return sec.data if sec is not None else None


def parse_elf(data: bytes, path: str = "<bytes>") -> ElfImage:
    if len(data) < 16 or data[:4] != b"\x7fELF":
        raise NotAnElf(f"{path}: not an ELF file (bad or truncated magic)")
    ei_class = data[4]
    ei_data = data[5]
    if ei_class not in (1, 2):
        raise NotAnElf(f"{path}: invalid ELF class {ei_class}")
    if ei_data not in (1, 2):
        raise NotAnElf(f"{path}: invalid ELF data encoding {ei_data}")
    is_64 = ei_class == 2
    endian = "little" if ei_data == 1 else "big"
    prefix = "<" if endian == "little" else ">"
    try:
        if is_64:
            shoff = struct.unpack_from(prefix + "Q", data, 0x28)[0]
            shentsize, shnum, shstrndx = struct.unpack_from(prefix + "HHH", data, 0x3A)
        else:
            shoff = struct.unpack_from(prefix + "I", data, 0x20)[0]
            shentsize, shnum, shstrndx = struct.unpack_from(prefix + "HHH", data, 0x2E)
    except struct.error:
        raise NotAnElf(f"{path}: truncated ELF header") from None
    if shoff == 0 or shnum == 0:
        raise NotAnElf(f"{path}: no section header table")

    def read_shdr(index: int) -> tuple[int, int, int, int]:
        base = shoff + index * shentsize
        try:
            if is_64:
                name_off, sh_type = struct.unpack_from(prefix + "II", data, base)
                sh_offset, sh_size = struct.unpack_from(prefix + "QQ", data, base + 0x18)
            else:
                name_off, sh_type = struct.unpack_from(prefix + "II", data, base)
                sh_offset, sh_size = struct.unpack_from(prefix + "II", data, base + 0x10)
        except struct.error:
            raise NotAnElf(f"{path}: truncated section header {index}") from None
        return name_off, sh_type, sh_offset, sh_size

    if shstrndx >= shnum:
        raise NotAnElf(f"{path}: bad section name string table index")
    _, _, str_off, str_size = read_shdr(shstrndx)
    strtab = data[str_off : str_off + str_size]

    def section_name(name_off: int) -> str:
        end = strtab.find(b"\0", name_off)
        if end < 0:
            end = len(strtab)
        return strtab[name_off:end].decode("utf-8", "replace")

    sections: dict[str, Section] = {}
    for idx in range(shnum):
        name_off, sh_type, sh_offset, sh_size = read_shdr(idx)
        name = section_name(name_off)
        if not name:
            continue
        payload = b"" if sh_type == _SHT_NOBITS else data[sh_offset : sh_offset + sh_size]
        sections[name] = Section(name, sh_offset, sh_size, payload)
    return ElfImage(path, sections, is_64, endian)


def load_elf(path: str | Path) -> ElfImage:
    """Read an ELF image; requires a .debug_line section.

    Raises NotAnElf for malformed input and MissingDebugInfo when the image
    carries no line-number debug info (compile with -g).
    """
    data = Path(path).read_bytes()
    image = parse_elf(data, str(path))
    if ".debug_line" not in image.sections:
        raise MissingDebugInfo(
            f"{path}: no .debug_line section; recompile with -g to embed line info"
        )
    return image
