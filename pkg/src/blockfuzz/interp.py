"""Built-in RV64IM reference interpreter.

Deterministic flat-memory executor: the test bytes load at address 0,
pc starts at 0, every register starts at 0.  Each retired instruction
appends a commit record (step, pc, word, optional register writeback);
the trace plus the final architectural state is the observable that
differential comparison works on.

Everything the interpreter does not implement (CSRs, atomics, floating
point, the privileged returns) halts execution with an illegal-
instruction trap, as do opaque words.  Loads and stores may be unaligned
but must fall inside the flat memory; ECALL halts cleanly.

A small set of deliberately wrong variants can be enabled by name to
validate that the differential harness actually detects misbehavior.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import isa
from .isa import Instruction, Opaque, OpClass, TrailingBytes

M64 = (1 << 64) - 1
M32 = 0xFFFFFFFF

TRAP_FETCH_MISALIGNED = 0
TRAP_FETCH_FAULT = 1
TRAP_ILLEGAL = 2
TRAP_BREAKPOINT = 3
TRAP_LOAD_FAULT = 5
TRAP_STORE_FAULT = 7


class UnknownBugId(ValueError):
    pass


INJECTABLE_BUGS = {
    "addiw-no-sext": "ADDIW keeps the 32-bit result zero-extended instead "
                     "of sign-extending it to 64 bits",
    "sltu-flip": "SLTU writes the inverted comparison result",
    "imm-range-unchecked": "word-size shift immediates accept an out-of-"
                           "range shamt field and silently mask it instead "
                           "of trapping",
    "jalr-misaligned-ok": "JALR wraps the jump target into memory instead "
                          "of letting an invalid target fault",
}


@dataclass
class ExecLimits:
    max_steps: int = 10_000
    mem_size: int = 1 << 20


@dataclass(frozen=True)
class ArchState:
    pc: int
    xregs: tuple[int, ...]
    halted: bool
    halt_cause: str | None
    trap_code: int | None = None

    def __post_init__(self):
        assert self.xregs[0] == 0


@dataclass(frozen=True)
class CommitRecord:
    step: int
    pc: int
    word: int
    wb_reg: int | None = None
    wb_value: int | None = None


@dataclass
class CommitTrace:
    records: list[CommitRecord] = field(default_factory=list)
    final: ArchState | None = None


class _Trap(Exception):
    def __init__(self, code: int):
        self.code = code


def _s64(v: int) -> int:
    v &= M64
    return v - (1 << 64) if v >> 63 else v


def _s32(v: int) -> int:
    v &= M32
    return v - (1 << 32) if v >> 31 else v


def _sx32(v: int) -> int:
    # Sign-extend the low 32 bits into the unsigned 64-bit representation.
    return _s32(v) & M64


def _div_trunc(a: int, b: int) -> int:
    q = abs(a) // abs(b)
    return -q if (a < 0) != (b < 0) else q


class _Machine:
    def __init__(self, data: bytes, limits: ExecLimits, bug: str | None):
        if len(data) % 4:
            raise TrailingBytes(
                f"program length {len(data)} not a multiple of 4")
        if limits.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if len(data) > limits.mem_size:
            raise ValueError("program larger than flat memory")
        self.mem = bytearray(limits.mem_size)
        self.mem[:len(data)] = data
        self.x = [0] * 32
        self.limits = limits
        self.bug = bug

    # -- memory ---------------------------------------------------------

    def _load(self, addr: int, size: int) -> int:
        addr &= M64
        if addr + size > self.limits.mem_size:
            raise _Trap(TRAP_LOAD_FAULT)
        return int.from_bytes(self.mem[addr:addr + size], "little")

    def _store(self, addr: int, size: int, value: int) -> None:
        addr &= M64
        if addr + size > self.limits.mem_size:
            raise _Trap(TRAP_STORE_FAULT)
        self.mem[addr:addr + size] = (value & ((1 << (8 * size)) - 1)
                                      ).to_bytes(size, "little")

    # -- execution ------------------------------------------------------

    def run(self) -> CommitTrace:
        records: list[CommitRecord] = []
        pc = 0
        cause: str = "max_steps"
        code: int | None = None
        for step in range(self.limits.max_steps):
            if pc % 4:
                cause, code = "trap", TRAP_FETCH_MISALIGNED
                break
            if pc + 4 > self.limits.mem_size:
                cause, code = "trap", TRAP_FETCH_FAULT
                break
            word = int.from_bytes(self.mem[pc:pc + 4], "little")
            inst = isa.decode(word)
            try:
                wb, next_pc, halt = self._execute(inst, word, pc)
            except _Trap as trap:
                cause, code = "trap", trap.code
                break
            reg, value = wb if wb else (None, None)
            records.append(CommitRecord(step=step, pc=pc, word=word,
                                        wb_reg=reg, wb_value=value))
            if halt:
                cause = "ecall"
                break
            pc = next_pc & M64
        final = ArchState(pc=pc, xregs=tuple(self.x), halted=True,
                          halt_cause=cause, trap_code=code)
        return CommitTrace(records=records, final=final)

    def _wx(self, rd: int, value: int):
        value &= M64
        if rd == 0:
            return None
        self.x[rd] = value
        return (rd, value)

    def _execute(self, inst, word: int, pc: int):
        if isinstance(inst, Opaque) \
                or not isa.lookup(inst.mnemonic).executable:
            handled, hook_wb = self._illegal_hook(word)
            if not handled:
                raise _Trap(TRAP_ILLEGAL)
            return hook_wb, pc + 4, False

        x = self.x
        mn = inst.mnemonic
        rd, rs1, rs2, imm = inst.rd, inst.rs1, inst.rs2, inst.imm
        a = x[rs1] if rs1 is not None else 0
        b = x[rs2] if rs2 is not None else 0
        wb = None
        next_pc = pc + 4
        halt = False

        if inst.opclass is OpClass.LUI:
            wb = self._wx(rd, imm)
        elif inst.opclass is OpClass.AUIPC:
            wb = self._wx(rd, pc + imm)
        elif inst.opclass is OpClass.JAL:
            next_pc = pc + imm
            wb = self._wx(rd, pc + 4)
        elif inst.opclass is OpClass.JALR:
            target = (a + imm) & ~1
            if self.bug == "jalr-misaligned-ok":
                target = (target & ~0b11) % self.limits.mem_size
            next_pc = target
            wb = self._wx(rd, pc + 4)
        elif inst.opclass is OpClass.BRANCH:
            taken = {
                "beq": a == b, "bne": a != b,
                "blt": _s64(a) < _s64(b), "bge": _s64(a) >= _s64(b),
                "bltu": a < b, "bgeu": a >= b,
            }[mn]
            if taken:
                next_pc = pc + imm
        elif inst.opclass is OpClass.LOAD:
            size = {"lb": 1, "lbu": 1, "lh": 2, "lhu": 2,
                    "lw": 4, "lwu": 4, "ld": 8}[mn]
            raw = self._load(a + imm, size)
            if mn in ("lb", "lh", "lw"):
                bits = 8 * size
                if raw >> (bits - 1):
                    raw -= 1 << bits
            wb = self._wx(rd, raw)
        elif inst.opclass is OpClass.STORE:
            size = {"sb": 1, "sh": 2, "sw": 4, "sd": 8}[mn]
            self._store(a + imm, size, b)
        elif inst.opclass is OpClass.MISC_MEM:
            pass  # fences order nothing on a single in-order model
        elif inst.opclass is OpClass.OP_IMM:
            sh = imm & 0x3F if imm is not None else 0
            result = {
                "addi": lambda: a + imm,
                "slti": lambda: int(_s64(a) < imm),
                "sltiu": lambda: int(a < (imm & M64)),
                "xori": lambda: a ^ (imm & M64),
                "ori": lambda: a | (imm & M64),
                "andi": lambda: a & (imm & M64),
                "slli": lambda: a << sh,
                "srli": lambda: a >> sh,
                "srai": lambda: _s64(a) >> sh,
            }[mn]()
            wb = self._wx(rd, result)
        elif inst.opclass is OpClass.OP_IMM_32:
            sh = imm & 0x1F if imm is not None else 0
            if mn == "addiw":
                low = (a + imm) & M32
                wb = self._wx(rd, low if self.bug == "addiw-no-sext"
                              else _sx32(low))
            elif mn == "slliw":
                wb = self._wx(rd, _sx32(a << sh))
            elif mn == "srliw":
                wb = self._wx(rd, _sx32((a & M32) >> sh))
            else:  # sraiw
                wb = self._wx(rd, (_s32(a) >> sh) & M64)
        elif inst.opclass is OpClass.OP:
            wb = self._wx(rd, self._op_rr(mn, a, b))
        elif inst.opclass is OpClass.OP_32:
            wb = self._wx(rd, self._op_rr32(mn, a, b))
        elif mn == "ecall":
            halt = True
        elif mn == "ebreak":
            raise _Trap(TRAP_BREAKPOINT)
        else:
            raise _Trap(TRAP_ILLEGAL)
        return wb, next_pc, halt

    def _op_rr(self, mn: str, a: int, b: int) -> int:
        sh = b & 0x3F
        if mn == "add":
            return a + b
        if mn == "sub":
            return a - b
        if mn == "sll":
            return a << sh
        if mn == "slt":
            return int(_s64(a) < _s64(b))
        if mn == "sltu":
            flipped = self.bug == "sltu-flip"
            return int((a < b) ^ flipped)
        if mn == "xor":
            return a ^ b
        if mn == "srl":
            return a >> sh
        if mn == "sra":
            return _s64(a) >> sh
        if mn == "or":
            return a | b
        if mn == "and":
            return a & b
        if mn == "mul":
            return _s64(a) * _s64(b)
        if mn == "mulh":
            return (_s64(a) * _s64(b)) >> 64
        if mn == "mulhu":
            return (a * b) >> 64
        if mn == "mulhsu":
            return (_s64(a) * b) >> 64
        sa, sb = _s64(a), _s64(b)
        if mn == "div":
            if b == 0:
                return M64
            if sa == -(1 << 63) and sb == -1:
                return a
            return _div_trunc(sa, sb)
        if mn == "divu":
            return M64 if b == 0 else a // b
        if mn == "rem":
            if b == 0:
                return a
            if sa == -(1 << 63) and sb == -1:
                return 0
            return sa - sb * _div_trunc(sa, sb)
        if mn == "remu":
            return a if b == 0 else a % b
        raise _Trap(TRAP_ILLEGAL)

    def _op_rr32(self, mn: str, a: int, b: int) -> int:
        sh = b & 0x1F
        if mn == "addw":
            return _sx32(a + b)
        if mn == "subw":
            return _sx32(a - b)
        if mn == "sllw":
            return _sx32(a << sh)
        if mn == "srlw":
            return _sx32((a & M32) >> sh)
        if mn == "sraw":
            return (_s32(a) >> sh) & M64
        sa, sb = _s32(a), _s32(b)
        if mn == "mulw":
            return _sx32(sa * sb)
        if mn == "divw":
            if sb == 0:
                return M64
            if sa == -(1 << 31) and sb == -1:
                return _sx32(sa)
            return _div_trunc(sa, sb) & M64
        if mn == "divuw":
            return M64 if sb == 0 else _sx32((a & M32) // (b & M32))
        if mn == "remw":
            if sb == 0:
                return _sx32(sa)
            if sa == -(1 << 31) and sb == -1:
                return 0
            return (sa - sb * _div_trunc(sa, sb)) & M64
        if mn == "remuw":
            return _sx32(a) if sb == 0 else _sx32((a & M32) % (b & M32))
        raise _Trap(TRAP_ILLEGAL)

    def _illegal_hook(self, word: int) -> tuple[bool, tuple | None]:
        """imm-range-unchecked: accept word-size shifts whose 6th shamt
        bit is set, masking the shamt instead of trapping."""
        if self.bug != "imm-range-unchecked":
            return False, None
        if word & 0x7F != 0b0011011 or not word >> 25 & 1:
            return False, None
        f3 = word >> 12 & 0x7
        high6 = word >> 26 & 0x3F
        rd, rs1 = word >> 7 & 0x1F, word >> 15 & 0x1F
        sh = word >> 20 & 0x1F
        a = self.x[rs1]
        if f3 == 1 and high6 == 0b000000:
            return True, self._wx(rd, _sx32(a << sh))
        if f3 == 5 and high6 == 0b000000:
            return True, self._wx(rd, _sx32((a & M32) >> sh))
        if f3 == 5 and high6 == 0b010000:
            return True, self._wx(rd, (_s32(a) >> sh) & M64)
        return False, None


def run_reference(data: bytes, limits: ExecLimits | None = None) -> CommitTrace:
    """Execute on the clean interpreter; all failure modes are halt causes."""
    return _Machine(data, limits or ExecLimits(), bug=None).run()


def run_reference_with_bug(data: bytes, limits: ExecLimits | None,
                           bug_id: str) -> CommitTrace:
    """The clean interpreter with one named deviation switched on."""
    if bug_id not in INJECTABLE_BUGS:
        raise UnknownBugId(f"unknown bug id {bug_id!r}; "
                           f"known: {sorted(INJECTABLE_BUGS)}")
    return _Machine(data, limits or ExecLimits(), bug=bug_id).run()


def format_record(record: CommitRecord) -> str:
    line = (f"commit step={record.step} pc=0x{record.pc:016x} "
            f"insn=0x{record.word:08x}")
    if record.wb_reg is not None:
        line += f" rd={record.wb_reg} val=0x{record.wb_value:016x}"
    return line


def format_trace(trace: CommitTrace) -> str:
    lines = [format_record(r) for r in trace.records]
    final = trace.final
    cause = final.halt_cause
    if cause == "trap":
        cause = f"trap:{final.trap_code}"
    lines.append(f"halt cause={cause} pc=0x{final.pc:016x} "
                 f"steps={len(trace.records)}")
    return "\n".join(lines) + "\n"
