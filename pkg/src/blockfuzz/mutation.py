"""Block segmentation and similarity-guided mutation.

A seed splits greedily into blocks at control transfer instructions: each
CTI closes the block it terminates, and trailing non-CTI words form a
final block without a terminator.  Mutation replaces instructions inside
block bodies only; terminators and opaque words pass through untouched,
so every mutant preserves the seed's block count, byte length and
control-flow skeleton.

Per block, up to ``retries`` mutation attempts are made; an attempt is
kept as soon as its block similarity against the original satisfies the
acceptance predicate (by default: strictly below the threshold), and the
original block is retained when no attempt qualifies.

All randomness flows through an explicit ``random.Random`` so a campaign
is reproducible from its configuration alone.
"""

from __future__ import annotations

import hashlib
import random
import struct
from dataclasses import dataclass, field, replace

from . import isa
from .isa import DecodedStream, Instruction, Opaque
from .similarity import SimilarityConfig, block_similarity

OPERATOR_NAMES = ("operand-scramble", "funct-walk", "unit-peer", "fresh-draw")
ACCEPT_POLARITIES = ("below_threshold", "above_threshold")

_SCRAMBLE_TRIES = 16


@dataclass(frozen=True)
class Block:
    """Contiguous instruction run with at most one exit point.

    ``entries`` holds the body (never a CTI); ``terminator`` is the
    closing CTI, absent only for a seed's trailing block.
    """

    entries: tuple[Instruction | Opaque, ...]
    terminator: Instruction | None
    start_offset: int = 0

    def __post_init__(self):
        for e in self.entries:
            if isinstance(e, Instruction) and isa.is_cti(e):
                raise ValueError("block body may not contain a CTI")
        if self.terminator is not None and not isa.is_cti(self.terminator):
            raise ValueError("block terminator must be a CTI")

    def elements(self) -> tuple[Instruction | Opaque, ...]:
        if self.terminator is None:
            return self.entries
        return self.entries + (self.terminator,)

    def words(self) -> tuple[int, ...]:
        return tuple(e.word for e in self.elements())

    def size_bytes(self) -> int:
        return 4 * len(self.elements())


@dataclass(frozen=True)
class Seed:
    """An ordered list of blocks plus provenance; id is a content hash."""

    blocks: tuple[Block, ...]
    id: str
    meta: dict | None = None

    @classmethod
    def from_blocks(cls, blocks, meta=None) -> "Seed":
        blocks = tuple(blocks)
        data = _serialize(blocks)
        return cls(blocks=blocks, id=content_id(data), meta=meta)


def content_id(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _serialize(blocks) -> bytes:
    words = [w for b in blocks for w in b.words()]
    return struct.pack(f"<{len(words)}I", *words)


def segment_seed(stream: DecodedStream, meta: dict | None = None) -> Seed:
    """Greedy left-to-right split: every CTI closes a block."""
    blocks: list[Block] = []
    body: list[Instruction | Opaque] = []
    offset = 0
    for item in stream.items:
        if isa.is_cti(item):
            blocks.append(Block(tuple(body), item, start_offset=offset))
            offset += 4 * (len(body) + 1)
            body = []
        else:
            body.append(item)
    if body:
        blocks.append(Block(tuple(body), None, start_offset=offset))
    return Seed.from_blocks(blocks, meta=meta)


def seed_from_bytes(data: bytes, meta: dict | None = None) -> Seed:
    return segment_seed(isa.decode_stream(data), meta=meta)


def reassemble(seed: Seed) -> bytes:
    """Little-endian serialization of all blocks, terminators in place."""
    return _serialize(seed.blocks)


@dataclass(frozen=True)
class MutationConfig:
    threshold: float = 0.5
    retries: int = 10
    mutations_per_instruction_max: int = 4
    rng_seed: int = 0
    operator_weights: dict[str, float] = field(default_factory=lambda: {
        name: 1.0 for name in OPERATOR_NAMES})
    accept_polarity: str = "below_threshold"
    # Restrict replacement draws to what the reference interpreter runs.
    executable_only: bool = False

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.mutations_per_instruction_max < 1:
            raise ValueError("mutations_per_instruction_max must be >= 1")
        if set(self.operator_weights) - set(OPERATOR_NAMES):
            raise ValueError(f"unknown operator names in weights; "
                             f"expected subset of {OPERATOR_NAMES}")
        if any(w < 0 for w in self.operator_weights.values()):
            raise ValueError("operator weights must be nonnegative")
        if not any(self.operator_weights.values()):
            raise ValueError("at least one operator weight must be positive")
        if self.accept_polarity not in ACCEPT_POLARITIES:
            raise ValueError(f"accept_polarity must be one of "
                             f"{ACCEPT_POLARITIES}")

    def accepts(self, sim: float) -> bool:
        if self.accept_polarity == "below_threshold":
            return sim < self.threshold
        return sim > self.threshold


@dataclass
class BlockOutcome:
    index: int
    attempts: int
    accepted: bool
    similarity: float
    operators: list[str]

    def to_dict(self) -> dict:
        return {"index": self.index, "attempts": self.attempts,
                "accepted": self.accepted, "similarity": self.similarity,
                "operators": list(self.operators)}


@dataclass
class MutationReport:
    seed_id: str
    mutant_id: str
    blocks_total: int
    blocks_changed: int
    outcomes: list[BlockOutcome]

    def to_dict(self) -> dict:
        return {"seed_id": self.seed_id, "mutant_id": self.mutant_id,
                "blocks_total": self.blocks_total,
                "blocks_changed": self.blocks_changed,
                "blocks": [o.to_dict() for o in self.outcomes]}


def _pools(cfg: MutationConfig):
    encs = [e for e in isa.ENCODINGS if not e.cti]
    if cfg.executable_only:
        encs = [e for e in encs if e.executable]
    return encs


def _imm_range(fmt: isa.Format) -> tuple[int, int, int]:
    # (lo, hi, step)
    if fmt in (isa.Format.I, isa.Format.S):
        return -2048, 2047, 1
    if fmt is isa.Format.B:
        return -4096, 4094, 2
    if fmt is isa.Format.U:
        return -(1 << 31), (1 << 31) - 4096, 4096
    return -(1 << 20), (1 << 20) - 2, 2


def _scramble_operands(inst: Instruction, rng: random.Random) -> Instruction | None:
    names = [n for n in ("rd", "rs1", "rs2", "rs3", "imm")
             if getattr(inst, n) is not None]
    for _ in range(_SCRAMBLE_TRIES):
        chosen = rng.sample(names, rng.randint(1, len(names)))
        changes = {}
        for name in chosen:
            if name == "imm":
                lo, hi, step = _imm_range(inst.format)
                changes["imm"] = rng.randrange(lo, hi + 1, step)
            else:
                changes[name] = rng.randrange(32)
        candidate = isa.decode(isa.encode(replace(inst, **changes)))
        if isinstance(candidate, Instruction) and not isa.is_cti(candidate):
            return candidate
    return None


def _splice_registers(word: int, enc: isa.Encoding,
                      source: Instruction) -> int:
    # Copy register operands positionally wherever the target encoding
    # leaves the field free (its mask bits unset) and the target format
    # defines the field.
    target = isa.decode(word)
    assert isinstance(target, Instruction)
    for name, lo in (("rd", 7), ("rs1", 15), ("rs2", 20)):
        if getattr(source, name) is None or getattr(target, name) is None:
            continue
        if (enc.mask >> lo) & 0x1F:
            continue
        word = (word & ~(0x1F << lo)) | (getattr(source, name) & 0x1F) << lo
    return word


def _funct_walk(inst: Instruction, cfg: MutationConfig,
                rng: random.Random) -> Instruction | None:
    peers = [e for e in _pools(cfg)
             if e.opclass is inst.opclass and e.mnemonic != inst.mnemonic]
    if not peers:
        return None
    enc = rng.choice(peers)
    word = _splice_registers(isa.random_word(enc, rng), enc, inst)
    out = isa.decode(word)
    assert isinstance(out, Instruction) and not isa.is_cti(out)
    return out


def _unit_peer(inst: Instruction, cfg: MutationConfig,
               rng: random.Random) -> Instruction | None:
    peers = [e for e in _pools(cfg)
             if e.unit is inst.unit and e.mnemonic != inst.mnemonic]
    if not peers:
        return None
    enc = rng.choice(peers)
    word = _splice_registers(isa.random_word(enc, rng), enc, inst)
    out = isa.decode(word)
    assert isinstance(out, Instruction) and not isa.is_cti(out)
    return out


def _fresh_draw(cfg: MutationConfig, rng: random.Random) -> Instruction:
    enc = rng.choice(_pools(cfg))
    out = isa.decode(isa.random_word(enc, rng))
    assert isinstance(out, Instruction)
    return out


def _mutate_traced(inst: Instruction, cfg: MutationConfig,
                   rng: random.Random) -> tuple[Instruction, str]:
    names = [n for n in OPERATOR_NAMES if cfg.operator_weights.get(n, 0) > 0]
    weights = [cfg.operator_weights[n] for n in names]
    op = rng.choices(names, weights)[0]
    result = None
    if op == "operand-scramble":
        result = _scramble_operands(inst, rng)
    elif op == "funct-walk":
        result = _funct_walk(inst, cfg, rng)
    elif op == "unit-peer":
        result = _unit_peer(inst, cfg, rng)
    if result is None:
        return _fresh_draw(cfg, rng), "fresh-draw"
    return result, op


def mutate_instruction(inst: Instruction, cfg: MutationConfig,
                       rng: random.Random) -> Instruction:
    """Apply one weighted-random operator; the result always decodes and
    is never a CTI.  The input must itself be a decodable non-CTI."""
    if isa.is_cti(inst):
        raise ValueError("CTIs are never mutated")
    return _mutate_traced(inst, cfg, rng)[0]


def _block_mutation_traced(block: Block, cfg: MutationConfig,
                           rng: random.Random) -> tuple[Block, list[str]]:
    mutable = [i for i, e in enumerate(block.entries)
               if isinstance(e, Instruction)]
    if not mutable:
        return block, []
    k = rng.randint(1, min(len(mutable), cfg.mutations_per_instruction_max))
    picked = sorted(rng.sample(mutable, k))
    entries = list(block.entries)
    ops: list[str] = []
    for i in picked:
        entries[i], op = _mutate_traced(entries[i], cfg, rng)
        ops.append(op)
    return replace(block, entries=tuple(entries)), ops


def block_mutation(block: Block, cfg: MutationConfig,
                   rng: random.Random) -> Block:
    """Replace 1..max instructions inside the body; the terminator and
    any opaque words stay byte-identical.  Blocks with nothing mutable
    are returned unchanged."""
    return _block_mutation_traced(block, cfg, rng)[0]


def mutate_seed(seed: Seed, cfg: MutationConfig, simcfg: SimilarityConfig,
                rng: random.Random) -> tuple[Seed, MutationReport]:
    """Per-block retry loop: mutate, score against the original, keep the
    first attempt the acceptance predicate admits, else retain the
    original block.  Block count and terminators are always preserved."""
    out_blocks: list[Block] = []
    outcomes: list[BlockOutcome] = []
    changed = 0
    for index, block in enumerate(seed.blocks):
        chosen = block
        accepted = False
        attempts = 0
        ops_used: list[str] = []
        for _ in range(cfg.retries):
            attempts += 1
            candidate, ops = _block_mutation_traced(block, cfg, rng)
            sim = block_similarity(block, candidate, simcfg)
            if cfg.accepts(sim):
                chosen, accepted, ops_used = candidate, True, ops
                break
        final_sim = block_similarity(block, chosen, simcfg) \
            if chosen.elements() else 0.0
        if chosen.words() != block.words():
            changed += 1
        out_blocks.append(chosen)
        outcomes.append(BlockOutcome(index=index, attempts=attempts,
                                     accepted=accepted, similarity=final_sim,
                                     operators=ops_used))
    mutant = Seed.from_blocks(out_blocks, meta={"parent_id": seed.id})
    report = MutationReport(seed_id=seed.id, mutant_id=mutant.id,
                            blocks_total=len(seed.blocks),
                            blocks_changed=changed, outcomes=outcomes)
    return mutant, report


def derive_rng(base_seed: int, *parts) -> random.Random:
    """A deterministic child stream keyed by the base seed and any
    hashable identifiers (seed ids, round numbers)."""
    h = hashlib.sha256(repr((base_seed,) + parts).encode()).digest()
    return random.Random(int.from_bytes(h[:8], "big"))
