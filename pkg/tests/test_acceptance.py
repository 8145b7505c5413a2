"""Acceptance suite: one test per release criterion, each printing a
PASS line with its measured numbers (run with -s to see them live)."""

import json
import random
import time
from pathlib import Path

import support
from blockfuzz import cli, isa
from blockfuzz.corpus import read_testcase
from blockfuzz.difftest import (
    builtin_backend_config, campaign, compare, run_external,
)
from blockfuzz.interp import ExecLimits, run_reference, run_reference_with_bug
from blockfuzz.isa import Instruction, decode, encode
from blockfuzz.mutation import (
    Block, MutationConfig, derive_rng, mutate_seed, reassemble,
    seed_from_bytes,
)
from blockfuzz.probes import PROBES
from blockfuzz.similarity import (
    SimilarityConfig, block_similarity, instruction_similarity,
)

REPO = Path(__file__).resolve().parent.parent
SIM = SimilarityConfig()


def _report(name: str, detail: str) -> None:
    print(f"ACCEPTANCE PASS: {name} ({detail})")


def test_acceptance_encode_decode_round_trip():
    """Exhaustive over the encoding table, 1,000 random fills each."""
    started = time.monotonic()
    rng = random.Random(0xC0DE)
    failures = 0
    checked = 0
    for enc in isa.ENCODINGS:
        for _ in range(1000):
            word = isa.random_word(enc, rng)
            inst = decode(word)
            checked += 1
            if not isinstance(inst, Instruction) or encode(inst) != word:
                failures += 1
    elapsed = time.monotonic() - started
    assert failures == 0
    assert elapsed < 60.0
    _report("encode/decode round trip",
            f"{checked} words over {len(isa.ENCODINGS)} encodings, "
            f"0 failures, {elapsed:.1f}s")


def test_acceptance_similarity_metric_laws():
    rng = random.Random(0x51A1)
    violations = 0
    for _ in range(10_000):
        a = support.random_instruction(rng)
        b = support.random_instruction(rng)
        sab = instruction_similarity(a, b, SIM)
        sba = instruction_similarity(b, a, SIM)
        if sab.value != sba.value:
            violations += 1
        if not 0.0 <= sab.value <= 1.0:
            violations += 1
        if instruction_similarity(a, a, SIM).value != 1.0:
            violations += 1
        recon = (SIM.w_tp * sab.breakdown["type"]
                 + SIM.w_op * sab.breakdown["opcode"]
                 + SIM.w_sm * sab.breakdown["subsemantic"]
                 + SIM.w_f * sab.breakdown["field"])
        if abs(sab.value - recon) > 1e-12:
            violations += 1
    assert violations == 0
    _report("similarity metric laws",
            "10000 pairs: symmetry, identity, bounds, breakdown all exact")


def test_acceptance_block_similarity_oracle():
    def oracle(b1, b2):
        e1, e2 = b1.elements(), b2.elements()
        size = min(len(e1), len(e2))
        total = 0.0
        for i in range(size):
            total += instruction_similarity(e1[i], e2[i], SIM).value \
                * (e1[i].word != e2[i].word)
        return total / size

    rng = random.Random(0xB10C)
    mismatches = 0
    for _ in range(1000):
        b1 = support.random_block(rng, rng.randint(1, 16),
                                  with_terminator=rng.random() < 0.7)
        if rng.random() < 0.5:
            entries = list(b1.entries)
            for i in range(len(entries)):
                if rng.random() < 0.3:
                    entries[i] = support.random_instruction(
                        rng, support.NON_CTI)
            b2 = Block(tuple(entries), b1.terminator)
        else:
            b2 = support.random_block(rng, rng.randint(1, 16),
                                      with_terminator=rng.random() < 0.7)
        if block_similarity(b1, b2, SIM) != oracle(b1, b2):
            mismatches += 1
        if block_similarity(b1, b1, SIM) != 0.0:
            mismatches += 1
    assert mismatches == 0
    _report("block similarity vs straight-line oracle",
            "1000 pairs exact, identical blocks score 0.0")


def test_acceptance_guided_mutation_fidelity():
    cfg = MutationConfig(threshold=0.5, retries=10, rng_seed=77,
                         executable_only=False)
    violations = 0
    for trial in range(500):
        seed_rng = derive_rng(1000, trial)
        data = support.random_seed_bytes(seed_rng, seed_rng.randint(8, 40))
        seed = seed_from_bytes(data)
        mutant, report = mutate_seed(seed, cfg, SIM,
                                     derive_rng(cfg.rng_seed, trial))
        if len(mutant.blocks) != len(seed.blocks):
            violations += 1
        if len(reassemble(mutant)) != len(data):
            violations += 1
        for before, after, outcome in zip(seed.blocks, mutant.blocks,
                                          report.outcomes):
            t_before = before.terminator.word if before.terminator else None
            t_after = after.terminator.word if after.terminator else None
            if t_before != t_after:
                violations += 1
            if outcome.accepted:
                if not block_similarity(before, after, SIM) < cfg.threshold:
                    violations += 1
            elif after.words() != before.words():
                violations += 1
        identity, _ = mutate_seed(
            seed, MutationConfig(threshold=0.5, retries=0), SIM,
            derive_rng(2000, trial))
        if reassemble(identity) != data:
            violations += 1
    assert violations == 0
    _report("similarity-guided mutation at T=0.5",
            "500 seeds: acceptance predicate, block count, byte length, "
            "terminators, R=0 identity all hold")


def test_acceptance_differential_harness_soundness():
    started = time.monotonic()
    rng = random.Random(0xD1FF)
    seeds = []
    for k in range(10):
        seeds.append((f"s{k}", support.random_seed_bytes(
            rng, 24, support.EXECUTABLE_NON_CTI)))
    mcfg = MutationConfig(rng_seed=5, executable_only=True)
    limits = ExecLimits(max_steps=400)
    clean = campaign(seeds, mcfg, SIM, ("builtin", None), ("builtin", None),
                     rounds=20, limits=limits)
    assert clean["mutants"] == 200
    assert clean["divergent_cases"] == 0
    assert clean["error_cases"] == 0

    for bug, (_, expected_field) in PROBES.items():
        probe = read_testcase(REPO / "probes" / f"{bug}.hex")
        report = campaign([(bug, probe)], MutationConfig(retries=0), SIM,
                          ("builtin", None), ("builtin", bug),
                          rounds=1, limits=limits)
        assert report["divergent_cases"] >= 1, bug
        assert report["unique_divergences"][0]["field"] == expected_field, bug
    elapsed = time.monotonic() - started
    assert elapsed < 120.0
    _report("differential harness soundness",
            f"200 clean-vs-clean mutants diverged 0 times; all 4 probe "
            f"programs diverged with the expected field; {elapsed:.1f}s")


def test_acceptance_fuzz_run_determinism(tmp_path, capsys):
    seed_path = REPO / "probes" / "sltu-flip.hex"
    reports = []
    for name in ("one.json", "two.json"):
        out = tmp_path / name
        code = cli.main(["--rng-seed", "123", "fuzz", str(seed_path),
                         "--rounds", "5", "--executable-only",
                         "--backend-b", "builtin:sltu-flip",
                         "--report", str(out)])
        assert code in (0, 1)
        reports.append(out.read_bytes())
    capsys.readouterr()
    assert reports[0] == reports[1]
    _report("fuzz determinism",
            "two identical runs produced byte-identical reports "
            f"({len(reports[0])} bytes)")


def test_acceptance_external_adapter_self_hosting():
    backend = builtin_backend_config(max_steps=300)
    limits = ExecLimits(max_steps=300)
    rng = random.Random(0x5E1F)
    exact = 0
    for k in range(50):
        if k % 2:
            data = support.random_seed_bytes(
                rng, rng.randint(4, 24), support.EXECUTABLE_NON_CTI)
        else:
            # Include traps and opaque words in the mix.
            data = support.random_seed_bytes(rng, rng.randint(4, 24))
        direct = run_reference(data, limits)
        external = run_external(data, backend, limits)
        assert external.records == direct.records
        assert external.final == direct.final
        exact += 1
    _report("external adapter self-hosting",
            f"{exact}/50 programs reproduced the in-process traces exactly")
