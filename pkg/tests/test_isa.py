import random
import struct

import pytest
from hypothesis import given, strategies as st

from blockfuzz import isa
from blockfuzz.isa import (
    Format, ImmOutOfRange, Instruction, MissingField, Opaque, OpClass,
    TrailingBytes, Unit, assemble, decode, decode_stream, encode, is_cti,
)


# --- independent straight-line reference assembler -------------------------
# Packs fields directly from the published bit ranges (31:25, 24:20, 19:15,
# 14:12, 11:7, 6:0).  Deliberately shares no code with blockfuzz.isa.

def ref_r(opcode, f3, f7, rd, rs1, rs2):
    return f7 << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opcode


def ref_i(opcode, f3, rd, rs1, imm):
    return (imm & 0xFFF) << 20 | rs1 << 15 | f3 << 12 | rd << 7 | opcode


def ref_s(opcode, f3, rs1, rs2, imm):
    imm &= 0xFFF
    return (imm >> 5) << 25 | rs2 << 20 | rs1 << 15 | f3 << 12 \
        | (imm & 0x1F) << 7 | opcode


def ref_b(opcode, f3, rs1, rs2, imm):
    imm &= 0x1FFF
    return ((imm >> 12) & 1) << 31 | ((imm >> 5) & 0x3F) << 25 | rs2 << 20 \
        | rs1 << 15 | f3 << 12 | ((imm >> 1) & 0xF) << 8 \
        | ((imm >> 11) & 1) << 7 | opcode


def ref_u(opcode, rd, imm):
    return (imm & 0xFFFFF000) | rd << 7 | opcode


def ref_j(opcode, rd, imm):
    imm &= 0x1FFFFF
    return ((imm >> 20) & 1) << 31 | ((imm >> 1) & 0x3FF) << 21 \
        | ((imm >> 11) & 1) << 20 | ((imm >> 12) & 0xFF) << 12 \
        | rd << 7 | opcode


GOLDEN = [
    # (word, mnemonic, field checks)
    (0x00000013, "addi", dict(rd=0, rs1=0, imm=0)),
    (ref_b(0b1100011, 0, 1, 2, 8), "beq", dict(rs1=1, rs2=2, imm=8)),
    (ref_r(0b0110011, 0, 0x00, 1, 2, 3), "add", dict(rd=1, rs1=2, rs2=3)),
    (ref_r(0b0110011, 0, 0x20, 1, 2, 3), "sub", dict(funct7=0x20)),
    (ref_r(0b0110011, 0, 0x01, 4, 5, 6), "mul", dict(unit=Unit.MULDIV)),
    (ref_i(0b0000011, 2, 7, 8, -4), "lw", dict(imm=-4)),
    (ref_s(0b0100011, 3, 9, 10, 40), "sd", dict(rs1=9, rs2=10, imm=40)),
    (ref_u(0b0110111, 5, 0x12345000), "lui", dict(imm=0x12345000)),
    (ref_u(0b0010111, 6, -4096 & 0xFFFFF000 | 0), "auipc", dict()),
    (ref_j(0b1101111, 1, 16), "jal", dict(rd=1, imm=16)),
    (ref_i(0b1100111, 0, 0, 1, 0), "jalr", dict(rd=0, rs1=1)),
    (ref_i(0b0010011, 1, 3, 3, 17), "slli", dict(imm=17)),
    (ref_i(0b0010011, 5, 3, 3, 0x400 | 17), "srai", dict()),
    (ref_i(0b0011011, 0, 2, 2, -1), "addiw", dict(opclass=OpClass.OP_IMM_32)),
    (ref_i(0b1110011, 1, 1, 2, 0x305), "csrrw", dict(unit=Unit.SYSCSR)),
    (0x00000073, "ecall", dict()),
    (0x00100073, "ebreak", dict()),
    (0x30200073, "mret", dict()),
    (0x10500073, "wfi", dict()),
    (ref_r(0b0101111, 2, 0b00010 << 2, 1, 2, 0), "lr.w", dict(rs2=0)),
    (ref_r(0b0101111, 3, 0b00001 << 2 | 0b11, 1, 2, 3), "amoswap.d", dict()),
    (ref_i(0b0000111, 3, 1, 2, 8), "fld", dict(unit=Unit.LSU)),
    (ref_r(0b1010011, 0, 0x01, 1, 2, 3), "fadd.d", dict(unit=Unit.FPU)),
    (ref_r(0b1010011, 1, 0x51, 1, 2, 3), "flt.d", dict(opkind="cmp")),
]


@pytest.mark.parametrize("word,mnemonic,fields", GOLDEN,
                         ids=[g[1] for g in GOLDEN])
def test_golden_decodings(word, mnemonic, fields):
    inst = decode(word)
    assert isinstance(inst, Instruction), f"{word:#010x} failed to decode"
    assert inst.mnemonic == mnemonic
    for name, value in fields.items():
        assert getattr(inst, name) == value
    assert encode(inst) == word


def test_nop_is_canonical():
    assert assemble("addi", rd=0, rs1=0, imm=0) == 0x00000013


def test_branch_example_word():
    word = assemble("beq", rs1=1, rs2=2, imm=8)
    assert word == 0x00208463
    inst = decode(word)
    assert inst.format is Format.B
    assert inst.opclass is OpClass.BRANCH
    assert inst.unit is Unit.BRU
    assert inst.imm == 8
    assert is_cti(inst)


def test_all_zero_word_is_opaque():
    assert decode(0x00000000) == Opaque(0x00000000)


def test_low_bits_not_11_is_opaque():
    for word in (0x00000001, 0x00000002, 0xFFF0_0001):
        assert isinstance(decode(word), Opaque)


def test_fma_round_trip_keeps_rs3():
    word = assemble("fmadd.s", rd=1, rs1=2, rs2=3, rs3=4)
    inst = decode(word)
    assert inst.rs3 == 4 and inst.funct2 == 0 and inst.funct7 is None
    assert encode(inst) == word


def test_table_entries_do_not_overlap():
    encs = isa.ENCODINGS
    assert len({e.mnemonic for e in encs}) == len(encs)
    for i, a in enumerate(encs):
        for b in encs[i + 1:]:
            both = a.mask & b.mask
            assert (a.match & both) != (b.match & both), \
                f"{a.mnemonic} overlaps {b.mnemonic}"


def test_random_fill_hits_own_entry_and_round_trips():
    rng = random.Random(1234)
    for enc in isa.ENCODINGS:
        for _ in range(50):
            word = isa.random_word(enc, rng)
            inst = decode(word)
            assert isinstance(inst, Instruction)
            assert inst.mnemonic == enc.mnemonic
            assert encode(inst) == word
            assert inst.unit is enc.unit and inst.opkind == enc.opkind


@given(st.integers(min_value=0, max_value=0xFFFFFFFF))
def test_decode_encode_round_trip_any_word(word):
    out = decode(word)
    if isinstance(out, Instruction):
        assert encode(out) == word
    else:
        assert out.word == word


def test_cti_ignores_operands():
    rng = random.Random(99)
    for enc in isa.ENCODINGS:
        for _ in range(20):
            inst = decode(isa.random_word(enc, rng))
            assert is_cti(inst) == enc.cti


def test_cti_membership():
    assert is_cti(decode(assemble("jal", rd=1, imm=16)))
    assert is_cti(decode(assemble("ecall")))
    assert is_cti(decode(0x10200073))  # sret
    assert not is_cti(decode(assemble("add", rd=1, rs1=2, rs2=3)))
    assert not is_cti(decode(assemble("csrrw", rd=1, rs1=2, imm=0x305)))
    assert not is_cti(Opaque(0x00000000))


def test_encode_imm_out_of_range():
    inst = decode(assemble("addi", rd=1, rs1=1, imm=5))
    bad = Instruction(**{**inst.__dict__, "imm": 4096})
    with pytest.raises(ImmOutOfRange):
        encode(bad)
    branch = decode(assemble("beq", rs1=1, rs2=2, imm=8))
    with pytest.raises(ImmOutOfRange):
        encode(Instruction(**{**branch.__dict__, "imm": 7}))


def test_encode_missing_field():
    inst = decode(assemble("add", rd=1, rs1=2, rs2=3))
    with pytest.raises(MissingField):
        encode(Instruction(**{**inst.__dict__, "rs2": None}))


def test_decode_rejects_out_of_range_input():
    with pytest.raises(ValueError):
        decode(1 << 32)
    with pytest.raises(ValueError):
        decode(-1)


def test_decode_stream_two_nops():
    stream = decode_stream(bytes.fromhex("13000000" "13000000"))
    assert len(stream) == 2
    assert all(isinstance(it, Instruction) and it.mnemonic == "addi"
               for it in stream.items)


def test_decode_stream_empty():
    assert len(decode_stream(b"")) == 0


def test_decode_stream_trailing_bytes():
    with pytest.raises(TrailingBytes):
        decode_stream(b"\x13\x00\x00\x00\x13")


@given(st.binary(max_size=256).map(lambda b: b[:len(b) - len(b) % 4]))
def test_stream_reserialization_is_identity(data):
    assert decode_stream(data).to_bytes() == data


def test_reserved_rounding_modes_are_opaque():
    base = assemble("fadd.s", rd=1, rs1=2, rs2=3)
    for rm in (5, 6):
        assert isinstance(decode(base & ~0x7000 | rm << 12), Opaque)


def test_format_entry_rendering():
    assert isa.format_entry(decode(0x00000013)) == "addi x0, x0, 0"
    assert isa.format_entry(Opaque(0xDEADBEEF)) == ".word 0xdeadbeef"
    assert isa.format_entry(decode(assemble("lw", rd=1, rs1=2, imm=-4))) \
        == "lw x1, -4(x2)"
    assert isa.format_entry(decode(0x00000073)) == "ecall"


def test_words_pack_little_endian():
    stream = decode_stream(struct.pack("<I", 0x00208463))
    assert stream.items[0].mnemonic == "beq"
