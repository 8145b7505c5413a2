"""Probe programs that each trip exactly one injectable interpreter bug.

Every probe is a tiny program for which the clean interpreter and the
named bugged variant provably diverge, together with the trace field the
first divergence must appear in.  The checked-in hex copies under
probes/ are generated from these definitions; a test keeps them in sync.
"""

from __future__ import annotations

import struct

from .isa import assemble


def _pack(*words: int) -> bytes:
    return struct.pack(f"<{len(words)}I", *words)


def _probe_addiw() -> bytes:
    return _pack(assemble("addiw", rd=1, rs1=0, imm=-1),
                 assemble("ecall"))


def _probe_sltu() -> bytes:
    return _pack(assemble("addi", rd=1, rs1=0, imm=1),
                 assemble("sltu", rd=2, rs1=0, rs2=1),
                 assemble("ecall"))


def _probe_shift_imm() -> bytes:
    # Word-size shift with the out-of-spec sixth shamt bit set: the
    # clean interpreter traps on it, the bugged one masks and executes.
    bad_slliw = assemble("slliw", rd=1, rs1=2, imm=3) | 1 << 25
    return _pack(assemble("addi", rd=2, rs1=0, imm=4),
                 bad_slliw,
                 assemble("ecall"))


def _probe_jalr() -> bytes:
    # Jump target 0x10000c sits past the 1 MiB flat memory: the clean
    # interpreter faults at the fetch, the bugged one wraps the target
    # back inside and keeps running (landing on the ecall at offset 12).
    return _pack(assemble("lui", rd=1, imm=1 << 20),
                 assemble("addi", rd=1, rs1=1, imm=12),
                 assemble("jalr", rd=0, rs1=1, imm=0),
                 assemble("ecall"))


# bug id -> (program bytes, field of the first divergence)
PROBES: dict[str, tuple[bytes, str]] = {
    "addiw-no-sext": (_probe_addiw(), "writeback"),
    "sltu-flip": (_probe_sltu(), "writeback"),
    "imm-range-unchecked": (_probe_shift_imm(), "trace-length"),
    "jalr-misaligned-ok": (_probe_jalr(), "trace-length"),
}
