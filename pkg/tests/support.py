"""Shared helpers for building random instructions, seeds and programs."""

import random
import struct

from blockfuzz import isa
from blockfuzz.isa import Instruction
from blockfuzz.mutation import Block, Seed, seed_from_bytes

NON_CTI = tuple(e for e in isa.ENCODINGS if not e.cti)
CTI = tuple(e for e in isa.ENCODINGS if e.cti)
EXECUTABLE_NON_CTI = tuple(e for e in NON_CTI if e.executable)


def random_instruction(rng: random.Random, pool=isa.ENCODINGS) -> Instruction:
    enc = rng.choice(pool)
    inst = isa.decode(isa.random_word(enc, rng))
    assert isinstance(inst, Instruction)
    return inst


def random_block(rng: random.Random, length: int, pool=NON_CTI,
                 with_terminator: bool = True) -> Block:
    body = tuple(random_instruction(rng, pool)
                 for _ in range(length - (1 if with_terminator else 0)))
    term = random_instruction(rng, CTI) if with_terminator else None
    return Block(body, term)


def random_seed_bytes(rng: random.Random, n_words: int,
                      pool=NON_CTI, cti_every: int = 5) -> bytes:
    """A plausible seed: mostly pool draws with periodic CTIs."""
    words = []
    for i in range(n_words):
        if i % cti_every == cti_every - 1:
            words.append(isa.random_word(rng.choice(CTI), rng))
        else:
            words.append(isa.random_word(rng.choice(pool), rng))
    return struct.pack(f"<{len(words)}I", *words)


def random_seed(rng: random.Random, n_words: int, pool=NON_CTI) -> Seed:
    return seed_from_bytes(random_seed_bytes(rng, n_words, pool))


def asm_program(*lines) -> bytes:
    """Pack ('mnemonic', {fields}) pairs into a little-endian stream."""
    words = []
    for line in lines:
        if isinstance(line, int):
            words.append(line)
        else:
            mnemonic, fields = line
            words.append(isa.assemble(mnemonic, **fields))
    return struct.pack(f"<{len(words)}I", *words)
