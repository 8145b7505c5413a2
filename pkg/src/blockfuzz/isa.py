"""Bit-exact model of 32-bit RV64 instruction words.

Covers the general-purpose subset: the RV64I base, M (multiply/divide),
A (atomics), the F/D floating-point encodings (decoded structurally),
Zicsr, FENCE/FENCE.I, ECALL/EBREAK and the machine/supervisor return and
wait encodings.  Everything else, including 16-bit compressed encodings
and data words, is carried through as ``Opaque`` and never touched.

Each supported encoding is a (mask, match) pair over the 32-bit word plus
its classification: format, major opcode group, execution unit and the
operation kind within that unit.  Decoding finds the matching entry and
pulls the operand fields out; encoding reassembles them.  The two are
exact inverses for every supported word.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum


class Format(Enum):
    R = "R"
    I = "I"
    S = "S"
    B = "B"
    U = "U"
    J = "J"


class OpClass(Enum):
    LOAD = "LOAD"
    STORE = "STORE"
    OP_IMM = "OP-IMM"
    OP = "OP"
    OP_IMM_32 = "OP-IMM-32"
    OP_32 = "OP-32"
    BRANCH = "BRANCH"
    JAL = "JAL"
    JALR = "JALR"
    LUI = "LUI"
    AUIPC = "AUIPC"
    SYSTEM = "SYSTEM"
    MISC_MEM = "MISC-MEM"
    AMO = "AMO"
    LOAD_FP = "LOAD-FP"
    STORE_FP = "STORE-FP"
    FP_OP = "FP-OP"
    FMA = "FMA"


class Unit(Enum):
    ALU = "ALU"
    MULDIV = "MULDIV"
    LSU = "LSU"
    BRU = "BRU"
    FPU = "FPU"
    SYSCSR = "SYSCSR"


class ImmOutOfRange(ValueError):
    pass


class MissingField(ValueError):
    pass


class TrailingBytes(ValueError):
    pass


MASK32 = 0xFFFFFFFF

# Valid rounding-mode values for instructions whose funct3 is a dynamic
# rounding mode (5 and 6 are reserved).
_RM_VALID = (0, 1, 2, 3, 4, 7)


@dataclass(frozen=True)
class Opaque:
    """A 32-bit word this model does not decode; preserved verbatim."""

    word: int


@dataclass(frozen=True)
class Instruction:
    word: int
    mnemonic: str
    format: Format
    opclass: OpClass
    unit: Unit
    opkind: str
    opcode: int
    funct3: int | None = None
    funct7: int | None = None
    funct2: int | None = None
    rd: int | None = None
    rs1: int | None = None
    rs2: int | None = None
    rs3: int | None = None
    imm: int | None = None


@dataclass(frozen=True)
class Encoding:
    """One supported instruction encoding: fixed bits plus classification."""

    mnemonic: str
    format: Format
    opclass: OpClass
    unit: Unit
    opkind: str
    mask: int
    match: int
    cti: bool = False
    # True when the built-in reference interpreter implements the semantics.
    executable: bool = False
    # funct3 is a dynamic rounding mode; values 5 and 6 are invalid.
    rm: bool = False


def _bits(word: int, lo: int, width: int) -> int:
    return (word >> lo) & ((1 << width) - 1)


def _sext(value: int, bits: int) -> int:
    if value & (1 << (bits - 1)):
        return value - (1 << bits)
    return value


# ---------------------------------------------------------------------------
# The supported encoding table.


def _r(mn, opcode, f3, f7, opclass, unit, opkind, executable=False):
    return Encoding(mn, Format.R, opclass, unit, opkind,
                    mask=0xFE00707F, match=opcode | f3 << 12 | f7 << 25,
                    executable=executable)


def _i(mn, opcode, f3, opclass, unit, opkind, executable=False, cti=False):
    return Encoding(mn, Format.I, opclass, unit, opkind,
                    mask=0x0000707F, match=opcode | f3 << 12,
                    executable=executable, cti=cti)


def _s(mn, f3, opclass, unit, executable=False):
    opcode = 0b0100011 if opclass is OpClass.STORE else 0b0100111
    return Encoding(mn, Format.S, opclass, unit, "store",
                    mask=0x0000707F, match=opcode | f3 << 12,
                    executable=executable)


def _b(mn, f3):
    return Encoding(mn, Format.B, OpClass.BRANCH, Unit.BRU, "branch",
                    mask=0x0000707F, match=0b1100011 | f3 << 12,
                    cti=True, executable=True)


def _shift64(mn, f3, high6):
    # RV64 I-type shifts: 6-bit shamt in bits 25:20, bits 31:26 fixed.
    return Encoding(mn, Format.I, OpClass.OP_IMM, Unit.ALU, "shift",
                    mask=0xFC00707F, match=0b0010011 | f3 << 12 | high6 << 26,
                    executable=True)


def _shiftw(mn, f3, f7):
    # RV64 word shifts: 5-bit shamt, bits 31:25 fully fixed.
    return Encoding(mn, Format.I, OpClass.OP_IMM_32, Unit.ALU, "shift",
                    mask=0xFE00707F, match=0b0011011 | f3 << 12 | f7 << 25,
                    executable=True)


def _amo(mn, f3, f5, rs2_zero=False):
    mask = 0xF800707F | (0x01F00000 if rs2_zero else 0)
    return Encoding(mn, Format.R, OpClass.AMO, Unit.LSU, "amo",
                    mask=mask, match=0b0101111 | f3 << 12 | f5 << 27)


def _exact(mn, word, opkind):
    return Encoding(mn, Format.I, OpClass.SYSTEM, Unit.SYSCSR, opkind,
                    mask=0xFFFFFFFF, match=word, cti=True,
                    executable=mn in ("ecall", "ebreak"))


def _fma(mn, opcode, fmt):
    return Encoding(mn, Format.R, OpClass.FMA, Unit.FPU, "fma",
                    mask=0x0600007F, match=opcode | fmt << 25, rm=True)


def _fp(mn, f7, opkind, f3=None, rs2=None, rm=False):
    mask, match = 0xFE00007F, 0b1010011 | f7 << 25
    if f3 is not None:
        mask |= 0x00007000
        match |= f3 << 12
    if rs2 is not None:
        mask |= 0x01F00000
        match |= rs2 << 20
    return Encoding(mn, Format.R, OpClass.FP_OP, Unit.FPU, opkind,
                    mask=mask, match=match, rm=rm)


def _build_table() -> tuple[Encoding, ...]:
    e: list[Encoding] = []

    e.append(Encoding("lui", Format.U, OpClass.LUI, Unit.ALU, "luiauipc",
                      mask=0x7F, match=0b0110111, executable=True))
    e.append(Encoding("auipc", Format.U, OpClass.AUIPC, Unit.ALU, "luiauipc",
                      mask=0x7F, match=0b0010111, executable=True))
    e.append(Encoding("jal", Format.J, OpClass.JAL, Unit.BRU, "jump",
                      mask=0x7F, match=0b1101111, cti=True, executable=True))
    e.append(_i("jalr", 0b1100111, 0, OpClass.JALR, Unit.BRU, "jump",
                executable=True, cti=True))

    for mn, f3 in (("beq", 0), ("bne", 1), ("blt", 4), ("bge", 5),
                   ("bltu", 6), ("bgeu", 7)):
        e.append(_b(mn, f3))

    for mn, f3 in (("lb", 0), ("lh", 1), ("lw", 2), ("ld", 3),
                   ("lbu", 4), ("lhu", 5), ("lwu", 6)):
        e.append(_i(mn, 0b0000011, f3, OpClass.LOAD, Unit.LSU, "load",
                    executable=True))
    for mn, f3 in (("sb", 0), ("sh", 1), ("sw", 2), ("sd", 3)):
        e.append(_s(mn, f3, OpClass.STORE, Unit.LSU, executable=True))

    for mn, f3, kind in (("addi", 0, "addsub"), ("slti", 2, "compare"),
                         ("sltiu", 3, "compare"), ("xori", 4, "logic"),
                         ("ori", 6, "logic"), ("andi", 7, "logic")):
        e.append(_i(mn, 0b0010011, f3, OpClass.OP_IMM, Unit.ALU, kind,
                    executable=True))
    e.append(_shift64("slli", 1, 0b000000))
    e.append(_shift64("srli", 5, 0b000000))
    e.append(_shift64("srai", 5, 0b010000))

    for mn, f3, f7, kind in (
            ("add", 0, 0x00, "addsub"), ("sub", 0, 0x20, "addsub"),
            ("sll", 1, 0x00, "shift"), ("slt", 2, 0x00, "compare"),
            ("sltu", 3, 0x00, "compare"), ("xor", 4, 0x00, "logic"),
            ("srl", 5, 0x00, "shift"), ("sra", 5, 0x20, "shift"),
            ("or", 6, 0x00, "logic"), ("and", 7, 0x00, "logic")):
        e.append(_r(mn, 0b0110011, f3, f7, OpClass.OP, Unit.ALU, kind,
                    executable=True))

    e.append(_i("addiw", 0b0011011, 0, OpClass.OP_IMM_32, Unit.ALU, "addsub",
                executable=True))
    e.append(_shiftw("slliw", 1, 0x00))
    e.append(_shiftw("srliw", 5, 0x00))
    e.append(_shiftw("sraiw", 5, 0x20))
    for mn, f3, f7, kind in (
            ("addw", 0, 0x00, "addsub"), ("subw", 0, 0x20, "addsub"),
            ("sllw", 1, 0x00, "shift"), ("srlw", 5, 0x00, "shift"),
            ("sraw", 5, 0x20, "shift")):
        e.append(_r(mn, 0b0111011, f3, f7, OpClass.OP_32, Unit.ALU, kind,
                    executable=True))

    # FENCE field bits (fm/pred/succ, rd, rs1) are hints; every value is a
    # legal encoding, so only funct3 is pinned here.
    e.append(_i("fence", 0b0001111, 0, OpClass.MISC_MEM, Unit.LSU, "fence",
                executable=True))
    e.append(_i("fence.i", 0b0001111, 1, OpClass.MISC_MEM, Unit.LSU, "fence",
                executable=True))

    e.append(_exact("ecall", 0x00000073, "env"))
    e.append(_exact("ebreak", 0x00100073, "env"))
    e.append(_exact("sret", 0x10200073, "ret"))
    e.append(_exact("mret", 0x30200073, "ret"))
    e.append(_exact("wfi", 0x10500073, "env"))

    for mn, f3 in (("csrrw", 1), ("csrrs", 2), ("csrrc", 3),
                   ("csrrwi", 5), ("csrrsi", 6), ("csrrci", 7)):
        e.append(_i(mn, 0b1110011, f3, OpClass.SYSTEM, Unit.SYSCSR, "csr"))

    for mn, f3, kind in (("mul", 0, "mul"), ("mulh", 1, "mul"),
                         ("mulhsu", 2, "mul"), ("mulhu", 3, "mul"),
                         ("div", 4, "div"), ("divu", 5, "div"),
                         ("rem", 6, "div"), ("remu", 7, "div")):
        e.append(_r(mn, 0b0110011, f3, 1, OpClass.OP, Unit.MULDIV, kind,
                    executable=True))
    for mn, f3, kind in (("mulw", 0, "mul"), ("divw", 4, "div"),
                         ("divuw", 5, "div"), ("remw", 6, "div"),
                         ("remuw", 7, "div")):
        e.append(_r(mn, 0b0111011, f3, 1, OpClass.OP_32, Unit.MULDIV, kind,
                    executable=True))

    for suffix, f3 in ((".w", 2), (".d", 3)):
        e.append(_amo("lr" + suffix, f3, 0b00010, rs2_zero=True))
        e.append(_amo("sc" + suffix, f3, 0b00011))
        for mn, f5 in (("amoswap", 0b00001), ("amoadd", 0b00000),
                       ("amoxor", 0b00100), ("amoand", 0b01100),
                       ("amoor", 0b01000), ("amomin", 0b10000),
                       ("amomax", 0b10100), ("amominu", 0b11000),
                       ("amomaxu", 0b11100)):
            e.append(_amo(mn + suffix, f3, f5))

    e.append(_i("flw", 0b0000111, 2, OpClass.LOAD_FP, Unit.LSU, "load"))
    e.append(_i("fld", 0b0000111, 3, OpClass.LOAD_FP, Unit.LSU, "load"))
    e.append(_s("fsw", 2, OpClass.STORE_FP, Unit.LSU))
    e.append(_s("fsd", 3, OpClass.STORE_FP, Unit.LSU))

    for suffix, fmt in ((".s", 0), (".d", 1)):
        e.append(_fma("fmadd" + suffix, 0b1000011, fmt))
        e.append(_fma("fmsub" + suffix, 0b1000111, fmt))
        e.append(_fma("fnmsub" + suffix, 0b1001011, fmt))
        e.append(_fma("fnmadd" + suffix, 0b1001111, fmt))

    for suffix, fmt in ((".s", 0), (".d", 1)):
        e.append(_fp("fadd" + suffix, 0x00 | fmt, "arith", rm=True))
        e.append(_fp("fsub" + suffix, 0x04 | fmt, "arith", rm=True))
        e.append(_fp("fmul" + suffix, 0x08 | fmt, "arith", rm=True))
        e.append(_fp("fdiv" + suffix, 0x0C | fmt, "arith", rm=True))
        e.append(_fp("fsqrt" + suffix, 0x2C | fmt, "arith", rs2=0, rm=True))
        e.append(_fp("fsgnj" + suffix, 0x10 | fmt, "sgnj", f3=0))
        e.append(_fp("fsgnjn" + suffix, 0x10 | fmt, "sgnj", f3=1))
        e.append(_fp("fsgnjx" + suffix, 0x10 | fmt, "sgnj", f3=2))
        e.append(_fp("fmin" + suffix, 0x14 | fmt, "minmax", f3=0))
        e.append(_fp("fmax" + suffix, 0x14 | fmt, "minmax", f3=1))
        e.append(_fp("feq" + suffix, 0x50 | fmt, "cmp", f3=2))
        e.append(_fp("flt" + suffix, 0x50 | fmt, "cmp", f3=1))
        e.append(_fp("fle" + suffix, 0x50 | fmt, "cmp", f3=0))
        e.append(_fp("fclass" + suffix, 0x70 | fmt, "classify", f3=1, rs2=0))
        for mn, sel in ((".w", 0), (".wu", 1), (".l", 2), (".lu", 3)):
            e.append(_fp("fcvt" + mn + suffix, 0x60 | fmt, "cvt",
                         rs2=sel, rm=True))
            e.append(_fp("fcvt" + suffix + mn, 0x68 | fmt, "cvt",
                         rs2=sel, rm=True))
    e.append(_fp("fcvt.s.d", 0x20, "cvt", rs2=1, rm=True))
    e.append(_fp("fcvt.d.s", 0x21, "cvt", rs2=0, rm=True))
    e.append(_fp("fmv.x.w", 0x70, "mv", f3=0, rs2=0))
    e.append(_fp("fmv.w.x", 0x78, "mv", f3=0, rs2=0))
    e.append(_fp("fmv.x.d", 0x71, "mv", f3=0, rs2=0))
    e.append(_fp("fmv.d.x", 0x79, "mv", f3=0, rs2=0))

    return tuple(e)


ENCODINGS: tuple[Encoding, ...] = _build_table()
ENCODINGS_BY_NAME: dict[str, Encoding] = {e.mnemonic: e for e in ENCODINGS}

_by_opcode: dict[int, list[Encoding]] = {}
for _e in ENCODINGS:
    _by_opcode.setdefault(_e.match & 0x7F, []).append(_e)
_BY_OPCODE: dict[int, tuple[Encoding, ...]] = {
    op: tuple(lst) for op, lst in _by_opcode.items()}
del _by_opcode

# Opcode groups that redirect control flow regardless of operand values.
_CTI_CLASSES = frozenset((OpClass.BRANCH, OpClass.JAL, OpClass.JALR))
_CTI_SYSTEM = frozenset(("ecall", "ebreak", "mret", "sret", "wfi"))


def lookup(mnemonic: str) -> Encoding:
    try:
        return ENCODINGS_BY_NAME[mnemonic]
    except KeyError:
        raise KeyError(f"unknown mnemonic: {mnemonic!r}") from None


def decode(word: int) -> Instruction | Opaque:
    """Decode one 32-bit word; unknown or non-32-bit encodings are Opaque."""
    if not 0 <= word <= MASK32:
        raise ValueError(f"word out of 32-bit range: {word:#x}")
    if word & 0b11 != 0b11:
        return Opaque(word)
    for enc in _BY_OPCODE.get(word & 0x7F, ()):
        if word & enc.mask == enc.match:
            if enc.rm and _bits(word, 12, 3) in (5, 6):
                continue
            return _extract(enc, word)
    return Opaque(word)


def _extract(enc: Encoding, word: int) -> Instruction:
    fmt = enc.format
    f3 = _bits(word, 12, 3)
    rd = _bits(word, 7, 5)
    rs1 = _bits(word, 15, 5)
    rs2 = _bits(word, 20, 5)
    kw: dict = {}
    if fmt is Format.R:
        if enc.opclass is OpClass.FMA:
            kw = dict(funct3=f3, funct2=_bits(word, 25, 2), rd=rd, rs1=rs1,
                      rs2=rs2, rs3=_bits(word, 27, 5))
        else:
            kw = dict(funct3=f3, funct7=_bits(word, 25, 7), rd=rd, rs1=rs1,
                      rs2=rs2)
    elif fmt is Format.I:
        kw = dict(funct3=f3, rd=rd, rs1=rs1, imm=_sext(_bits(word, 20, 12), 12))
    elif fmt is Format.S:
        imm = _bits(word, 25, 7) << 5 | _bits(word, 7, 5)
        kw = dict(funct3=f3, rs1=rs1, rs2=rs2, imm=_sext(imm, 12))
    elif fmt is Format.B:
        imm = (_bits(word, 31, 1) << 12 | _bits(word, 7, 1) << 11
               | _bits(word, 25, 6) << 5 | _bits(word, 8, 4) << 1)
        kw = dict(funct3=f3, rs1=rs1, rs2=rs2, imm=_sext(imm, 13))
    elif fmt is Format.U:
        kw = dict(rd=rd, imm=_sext(word & 0xFFFFF000, 32))
    elif fmt is Format.J:
        imm = (_bits(word, 31, 1) << 20 | _bits(word, 12, 8) << 12
               | _bits(word, 20, 1) << 11 | _bits(word, 21, 10) << 1)
        kw = dict(rd=rd, imm=_sext(imm, 21))
    return Instruction(word=word, mnemonic=enc.mnemonic, format=fmt,
                       opclass=enc.opclass, unit=enc.unit, opkind=enc.opkind,
                       opcode=word & 0x7F, **kw)


def _require(inst: Instruction, *names: str) -> None:
    for name in names:
        if getattr(inst, name) is None:
            raise MissingField(f"{inst.mnemonic or 'instruction'}: {name}")


def _check_reg(name: str, value: int) -> int:
    if not 0 <= value <= 31:
        raise ValueError(f"register index out of range: {name}={value}")
    return value


def _check_imm(value: int, lo: int, hi: int, multiple: int = 1) -> int:
    if not lo <= value <= hi or value % multiple:
        raise ImmOutOfRange(f"immediate {value} not representable")
    return value


def encode(inst: Instruction) -> int:
    """Reassemble a decoded instruction into its 32-bit word."""
    fmt = inst.format
    word = inst.opcode & 0x7F
    if fmt is Format.R:
        if inst.opclass is OpClass.FMA:
            _require(inst, "funct3", "funct2", "rd", "rs1", "rs2", "rs3")
            word |= (_check_reg("rs3", inst.rs3) << 27 | inst.funct2 << 25
                     | _check_reg("rs2", inst.rs2) << 20
                     | _check_reg("rs1", inst.rs1) << 15
                     | inst.funct3 << 12 | _check_reg("rd", inst.rd) << 7)
        else:
            _require(inst, "funct3", "funct7", "rd", "rs1", "rs2")
            word |= (inst.funct7 << 25 | _check_reg("rs2", inst.rs2) << 20
                     | _check_reg("rs1", inst.rs1) << 15
                     | inst.funct3 << 12 | _check_reg("rd", inst.rd) << 7)
    elif fmt is Format.I:
        _require(inst, "funct3", "rd", "rs1", "imm")
        imm = _check_imm(inst.imm, -2048, 2047) & 0xFFF
        word |= (imm << 20 | _check_reg("rs1", inst.rs1) << 15
                 | inst.funct3 << 12 | _check_reg("rd", inst.rd) << 7)
    elif fmt is Format.S:
        _require(inst, "funct3", "rs1", "rs2", "imm")
        imm = _check_imm(inst.imm, -2048, 2047) & 0xFFF
        word |= (imm >> 5 << 25 | _check_reg("rs2", inst.rs2) << 20
                 | _check_reg("rs1", inst.rs1) << 15
                 | inst.funct3 << 12 | (imm & 0x1F) << 7)
    elif fmt is Format.B:
        _require(inst, "funct3", "rs1", "rs2", "imm")
        imm = _check_imm(inst.imm, -4096, 4094, multiple=2) & 0x1FFF
        word |= ((imm >> 12 & 1) << 31 | (imm >> 5 & 0x3F) << 25
                 | _check_reg("rs2", inst.rs2) << 20
                 | _check_reg("rs1", inst.rs1) << 15 | inst.funct3 << 12
                 | (imm >> 1 & 0xF) << 8 | (imm >> 11 & 1) << 7)
    elif fmt is Format.U:
        _require(inst, "rd", "imm")
        imm = _check_imm(inst.imm, -(1 << 31), (1 << 31) - 4096, multiple=4096)
        word |= (imm & 0xFFFFF000) | _check_reg("rd", inst.rd) << 7
    elif fmt is Format.J:
        _require(inst, "rd", "imm")
        imm = _check_imm(inst.imm, -(1 << 20), (1 << 20) - 2, multiple=2)
        imm &= 0x1FFFFF
        word |= ((imm >> 20 & 1) << 31 | (imm >> 1 & 0x3FF) << 21
                 | (imm >> 11 & 1) << 20 | (imm >> 12 & 0xFF) << 12
                 | _check_reg("rd", inst.rd) << 7)
    return word & MASK32


def is_cti(entry: Instruction | Opaque) -> bool:
    """True for jumps, branches and the system exit/return encodings."""
    if isinstance(entry, Opaque):
        return False
    return entry.opclass in _CTI_CLASSES or entry.mnemonic in _CTI_SYSTEM


@dataclass
class DecodedStream:
    """An instruction stream as a list of decoded or opaque 32-bit words."""

    items: list[Instruction | Opaque]

    def to_bytes(self) -> bytes:
        return struct.pack(f"<{len(self.items)}I", *(it.word for it in self.items))

    def __len__(self) -> int:
        return len(self.items)


def decode_stream(data: bytes) -> DecodedStream:
    if len(data) % 4:
        raise TrailingBytes(
            f"stream length {len(data)} is not a multiple of 4 bytes")
    words = struct.unpack(f"<{len(data) // 4}I", data)
    return DecodedStream([decode(w) for w in words])


def random_word(enc: Encoding, rng) -> int:
    """A uniformly random word that decodes to this encoding entry."""
    free = ~enc.mask & MASK32
    word = enc.match | (rng.getrandbits(32) & free)
    if enc.rm:
        word = (word & ~0x7000) | rng.choice(_RM_VALID) << 12
    return word


def assemble(mnemonic: str, rd: int = 0, rs1: int = 0, rs2: int = 0,
             rs3: int = 0, imm: int = 0) -> int:
    """Build a word for a mnemonic from operand values.

    Fields the encoding pins (funct bits, selector rs2 values, shift-shamt
    high bits, the fixed system immediates) come from the table; the rest
    from the arguments.  U-type takes the already-shifted immediate.
    """
    enc = lookup(mnemonic)
    base = decode(enc.match)
    assert isinstance(base, Instruction)
    wanted = {"rd": rd, "rs1": rs1, "rs2": rs2, "rs3": rs3, "imm": imm}
    kw: dict = {}
    for name, lo in (("rd", 7), ("rs1", 15), ("rs2", 20), ("rs3", 27)):
        if getattr(base, name) is None:
            kw[name] = None
        elif (enc.mask >> lo) & 0x1F:
            kw[name] = getattr(base, name)
        else:
            kw[name] = wanted[name]
    if base.imm is None:
        kw["imm"] = None
    elif enc.format is Format.I and (enc.mask >> 20) & 0xFFF:
        fixed = (enc.mask >> 20) & 0xFFF
        kw["imm"] = _sext((enc.match >> 20 & 0xFFF) | (imm & ~fixed & 0xFFF), 12)
    else:
        kw["imm"] = imm
    inst = Instruction(word=0, mnemonic=mnemonic, format=enc.format,
                       opclass=enc.opclass, unit=enc.unit, opkind=enc.opkind,
                       opcode=enc.match & 0x7F, funct3=base.funct3,
                       funct7=base.funct7, funct2=base.funct2, **kw)
    word = encode(inst)
    check = decode(word)
    if isinstance(check, Opaque) or check.mnemonic != mnemonic:
        raise ValueError(f"{mnemonic}: operands produce an invalid encoding")
    return word


def format_entry(entry: Instruction | Opaque) -> str:
    """Minimal textual rendering for listings and reports."""
    if isinstance(entry, Opaque):
        return f".word {entry.word:#010x}"
    i = entry
    if i.mnemonic in _CTI_SYSTEM or i.mnemonic in ("fence", "fence.i"):
        return i.mnemonic
    if i.format is Format.R:
        regs = [f"x{i.rd}", f"x{i.rs1}", f"x{i.rs2}"]
        if i.rs3 is not None:
            regs.append(f"x{i.rs3}")
        return f"{i.mnemonic} " + ", ".join(regs)
    if i.format is Format.I:
        if i.opclass in (OpClass.LOAD, OpClass.LOAD_FP, OpClass.JALR):
            return f"{i.mnemonic} x{i.rd}, {i.imm}(x{i.rs1})"
        if i.opclass is OpClass.SYSTEM:
            return f"{i.mnemonic} x{i.rd}, {i.imm & 0xFFF:#x}, x{i.rs1}"
        return f"{i.mnemonic} x{i.rd}, x{i.rs1}, {i.imm}"
    if i.format is Format.S:
        return f"{i.mnemonic} x{i.rs2}, {i.imm}(x{i.rs1})"
    if i.format is Format.B:
        return f"{i.mnemonic} x{i.rs1}, x{i.rs2}, {i.imm}"
    return f"{i.mnemonic} x{i.rd}, {i.imm:#x}"
