"""Minimal ELF64 little-endian reader: pull the .text section bytes.

Only what the corpus importer needs: header sanity checks, the section
header table and the section-name string table.  Anything malformed
beyond the class/endianness checks raises ``NotElf``.
"""

from __future__ import annotations

import struct


class NotElf(ValueError):
    pass


class NoTextSection(ValueError):
    pass


class UnsupportedElfClass(ValueError):
    pass


_EHDR_SIZE = 64


def extract_text_section(data: bytes) -> bytes:
    if len(data) < 16 or data[:4] != b"\x7fELF":
        raise NotElf("bad magic")
    if data[4] != 2:
        raise UnsupportedElfClass("only 64-bit ELF is supported")
    if data[5] != 1:
        raise UnsupportedElfClass("only little-endian ELF is supported")
    if len(data) < _EHDR_SIZE:
        raise NotElf("truncated ELF header")
    e_shoff, = struct.unpack_from("<Q", data, 40)
    e_shentsize, e_shnum, e_shstrndx = struct.unpack_from("<HHH", data, 58)
    if e_shoff == 0 or e_shnum == 0:
        raise NotElf("no section header table")
    if e_shentsize < 64 or e_shstrndx >= e_shnum:
        raise NotElf("malformed section header table")
    if e_shoff + e_shnum * e_shentsize > len(data):
        raise NotElf("section header table out of bounds")

    def section(index: int) -> tuple[int, int, int]:
        base = e_shoff + index * e_shentsize
        sh_name, = struct.unpack_from("<I", data, base)
        sh_offset, sh_size = struct.unpack_from("<QQ", data, base + 24)
        return sh_name, sh_offset, sh_size

    _, str_off, str_size = section(e_shstrndx)
    if str_off + str_size > len(data):
        raise NotElf("string table out of bounds")
    strtab = data[str_off:str_off + str_size]

    for index in range(e_shnum):
        sh_name, sh_offset, sh_size = section(index)
        end = strtab.find(b"\x00", sh_name)
        if sh_name >= len(strtab) or end < 0:
            continue
        if strtab[sh_name:end] == b".text":
            if sh_offset + sh_size > len(data):
                raise NotElf(".text contents out of bounds")
            return bytes(data[sh_offset:sh_offset + sh_size])
    raise NoTextSection("no .text section present")
