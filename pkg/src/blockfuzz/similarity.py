"""Instruction and block similarity scoring.

A pair of decoded instructions is scored as a weighted sum of four
components, each in [0, 1]:

  type         structural overlap of the two encoding layouts
  opcode       coarse functional relatedness of the major opcode groups
  subsemantic  execution-unit grouping, refined by operation kind
  field        per-field closeness (funct bits and shared register
               operands) via normalized Hamming distance

Block-level similarity averages the per-position instruction scores over
the shorter block, counting only positions whose words differ; two
identical blocks therefore score 0.0, and the score grows with the
number (and closeness) of replaced instructions.

All scoring is pure and driven by an immutable ``SimilarityConfig``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .isa import Format, Instruction, Opaque, OpClass


class EmptyBlock(ValueError):
    pass


FIELD_NAMES = ("funct3", "funct7", "funct2", "operands")

_CATEGORY: dict[OpClass, str] = {
    OpClass.OP: "arithmetic", OpClass.OP_IMM: "arithmetic",
    OpClass.OP_32: "arithmetic", OpClass.OP_IMM_32: "arithmetic",
    OpClass.LUI: "arithmetic", OpClass.AUIPC: "arithmetic",
    OpClass.LOAD: "memory", OpClass.STORE: "memory",
    OpClass.LOAD_FP: "memory", OpClass.STORE_FP: "memory",
    OpClass.AMO: "memory", OpClass.MISC_MEM: "memory",
    OpClass.BRANCH: "control", OpClass.JAL: "control",
    OpClass.JALR: "control",
    OpClass.FP_OP: "floating", OpClass.FMA: "floating",
    OpClass.SYSTEM: "system",
}

# Per-bit field-role labels over bits 31..7 for each layout, highest bit
# first.  Bits 6..0 (the opcode) are common to every format and excluded.
_ROLE_LAYOUTS: dict[Format, tuple[str, ...]] = {
    Format.R: ("funct7",) * 7 + ("rs2",) * 5 + ("rs1",) * 5
              + ("funct3",) * 3 + ("rd",) * 5,
    Format.I: ("imm",) * 12 + ("rs1",) * 5 + ("funct3",) * 3 + ("rd",) * 5,
    Format.S: ("imm",) * 7 + ("rs2",) * 5 + ("rs1",) * 5
              + ("funct3",) * 3 + ("imm",) * 5,
    Format.B: ("imm",) * 7 + ("rs2",) * 5 + ("rs1",) * 5
              + ("funct3",) * 3 + ("imm",) * 5,
    Format.U: ("imm",) * 20 + ("rd",) * 5,
    Format.J: ("imm",) * 20 + ("rd",) * 5,
}


def default_format_overlap() -> dict[tuple[str, str], float]:
    """Fraction of bit positions 31..7 whose role label matches, per
    format pair.  Same-format pairs are exactly 1.0 by definition."""
    table: dict[tuple[str, str], float] = {}
    for fa, la in _ROLE_LAYOUTS.items():
        for fb, lb in _ROLE_LAYOUTS.items():
            if fa is fb:
                table[(fa.value, fb.value)] = 1.0
            else:
                same = sum(a == b for a, b in zip(la, lb))
                table[(fa.value, fb.value)] = same / 25
    return table


@dataclass(frozen=True)
class SimilarityConfig:
    w_tp: float = 0.2
    w_op: float = 0.3
    w_sm: float = 0.3
    w_f: float = 0.2
    field_weights: Mapping[str, float] = field(default_factory=lambda: {
        "funct3": 0.3, "funct7": 0.15, "funct2": 0.05, "operands": 0.5})
    opcode_same_category: float = 0.5
    opcode_unrelated: float = 0.1
    unit_same_base: float = 0.6
    opkind_match_bonus: float = 0.4
    unit_different: float = 0.1
    format_overlap_table: Mapping[tuple[str, str], float] = field(
        default_factory=default_format_overlap)

    def __post_init__(self):
        weights = (self.w_tp, self.w_op, self.w_sm, self.w_f)
        if any(not 0.0 <= w <= 1.0 for w in weights):
            raise ValueError("component weights must lie in [0, 1]")
        if abs(math.fsum(weights) - 1.0) > 1e-9:
            raise ValueError("component weights must sum to 1")
        if set(self.field_weights) != set(FIELD_NAMES):
            raise ValueError(f"field_weights must cover exactly {FIELD_NAMES}")
        if any(not 0.0 <= w <= 1.0 for w in self.field_weights.values()):
            raise ValueError("field weights must lie in [0, 1]")
        if abs(math.fsum(self.field_weights.values()) - 1.0) > 1e-9:
            raise ValueError("field weights must sum to 1")
        for name in ("opcode_same_category", "opcode_unrelated",
                     "unit_same_base", "opkind_match_bonus", "unit_different"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.unit_same_base + self.opkind_match_bonus > 1.0 + 1e-9:
            raise ValueError("unit_same_base + opkind_match_bonus exceeds 1")
        table = self.format_overlap_table
        for fa in Format:
            for fb in Format:
                v = table[(fa.value, fb.value)]
                if not 0.0 <= v <= 1.0:
                    raise ValueError("format overlap values must lie in [0, 1]")
                if v != table[(fb.value, fa.value)]:
                    raise ValueError("format overlap table must be symmetric")
            if table[(fa.value, fa.value)] != 1.0:
                raise ValueError("format overlap diagonal must be 1.0")


@dataclass(frozen=True)
class SimilarityScore:
    value: float
    breakdown: dict[str, float]


def type_similarity(a: Instruction, b: Instruction,
                    cfg: SimilarityConfig) -> float:
    return cfg.format_overlap_table[(a.format.value, b.format.value)]


def opcode_similarity(a: Instruction, b: Instruction,
                      cfg: SimilarityConfig) -> float:
    if a.opcode == b.opcode:
        return 1.0
    if _CATEGORY[a.opclass] == _CATEGORY[b.opclass]:
        return cfg.opcode_same_category
    return cfg.opcode_unrelated


def subsemantic_similarity(a: Instruction, b: Instruction,
                           cfg: SimilarityConfig) -> float:
    if a.unit is not b.unit:
        return cfg.unit_different
    if a.opkind == b.opkind:
        return cfg.unit_same_base + cfg.opkind_match_bonus
    return cfg.unit_same_base


def _hamming(x: int, y: int) -> int:
    return bin(x ^ y).count("1")


def field_similarity(a: Instruction, b: Instruction,
                     cfg: SimilarityConfig) -> float:
    """Weighted per-field closeness over the fields both formats define.

    Weights are renormalized over the shared-field subset; the division
    happens last so two identical instructions score exactly 1.0.  The
    operands pseudo-field concatenates the register indices (rd, rs1,
    rs2) present on both sides; immediates do not participate.
    """
    total = 0.0
    weight_sum = 0.0
    for name in ("funct3", "funct7", "funct2"):
        fa, fb = getattr(a, name), getattr(b, name)
        if fa is None or fb is None:
            continue
        bits = {"funct3": 3, "funct7": 7, "funct2": 2}[name]
        w = cfg.field_weights[name]
        weight_sum += w
        total += w * (1.0 - _hamming(fa, fb) / bits)
    shared_regs = [(getattr(a, r), getattr(b, r)) for r in ("rd", "rs1", "rs2")
                   if getattr(a, r) is not None and getattr(b, r) is not None]
    if shared_regs:
        dist = sum(_hamming(ra, rb) for ra, rb in shared_regs)
        w = cfg.field_weights["operands"]
        weight_sum += w
        total += w * (1.0 - dist / (5 * len(shared_regs)))
    if weight_sum == 0.0:
        return 0.0
    return total / weight_sum


def instruction_similarity(a: Instruction | Opaque, b: Instruction | Opaque,
                           cfg: SimilarityConfig) -> SimilarityScore:
    """Weighted four-component score; opaque words compare bit-for-bit."""
    if isinstance(a, Opaque) or isinstance(b, Opaque):
        v = 1.0 if a.word == b.word else 0.0
        return SimilarityScore(v, {"type": v, "opcode": v,
                                   "subsemantic": v, "field": v})
    s_tp = type_similarity(a, b, cfg)
    s_op = opcode_similarity(a, b, cfg)
    s_sm = subsemantic_similarity(a, b, cfg)
    s_f = field_similarity(a, b, cfg)
    value = math.fsum((cfg.w_tp * s_tp, cfg.w_op * s_op,
                       cfg.w_sm * s_sm, cfg.w_f * s_f))
    return SimilarityScore(value, {"type": s_tp, "opcode": s_op,
                                   "subsemantic": s_sm, "field": s_f})


def block_similarity(block_a, block_b, cfg: SimilarityConfig) -> float:
    """Average pairwise score over the shorter block, counting only
    positions whose words differ.  Identical blocks score exactly 0.0."""
    elems_a = block_a.elements()
    elems_b = block_b.elements()
    if not elems_a or not elems_b:
        raise EmptyBlock("block similarity requires two non-empty blocks")
    size = min(len(elems_a), len(elems_b))
    sim = 0.0
    for i in range(size):
        if elems_a[i].word != elems_b[i].word:
            sim += instruction_similarity(elems_a[i], elems_b[i], cfg).value
    return sim / size
