"""Similarity-guided block-level mutation fuzzing for RV64 instruction
streams, with a built-in reference interpreter and differential trace
checking."""

from .isa import (
    DecodedStream, Instruction, Opaque, decode, decode_stream, encode,
    is_cti,
)
from .mutation import (
    Block, MutationConfig, MutationReport, Seed, block_mutation,
    mutate_instruction, mutate_seed, reassemble, seed_from_bytes,
    segment_seed,
)
from .similarity import (
    SimilarityConfig, SimilarityScore, block_similarity,
    instruction_similarity,
)

__version__ = "0.1.0"

__all__ = [
    "Block", "DecodedStream", "Instruction", "MutationConfig",
    "MutationReport", "Opaque", "Seed", "SimilarityConfig",
    "SimilarityScore", "block_mutation", "block_similarity", "decode",
    "decode_stream", "encode", "instruction_similarity", "is_cti",
    "mutate_instruction", "mutate_seed", "reassemble", "seed_from_bytes",
    "segment_seed",
]
