"""Command-line entry point.

Subcommands: segment, sim, mutate, fuzz, corpus (add|stats|import),
difftest and exec (the raw trace mode external adapters can drive).

Exit codes: 0 success / no divergence, 1 divergence found, 2 operational
error (bad input, unreadable files, config problems).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import isa
from .config import (
    ConfigError, load_config_file, mutation_config_from_dict,
    similarity_config_from_dict,
)
from .corpus import Corpus, read_testcase
from .difftest import (
    BackendConfig, BackendError, ComparePolicy, campaign, compare,
    run_backend,
)
from .interp import (
    ExecLimits, INJECTABLE_BUGS, UnknownBugId, format_trace,
    run_reference, run_reference_with_bug,
)
from .mutation import derive_rng, mutate_seed, reassemble, seed_from_bytes
from .similarity import instruction_similarity

EXIT_OK = 0
EXIT_DIVERGENCE = 1
EXIT_ERROR = 2


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_ERROR


def _emit(obj: dict, args) -> None:
    print(json.dumps(obj, sort_keys=True))


def _parse_word(text: str) -> int:
    word = int(text, 16)
    if not 0 <= word <= 0xFFFFFFFF:
        raise ValueError(f"{text}: not a 32-bit word")
    return word


def _parse_backend(spec: str):
    if spec == "builtin":
        return ("builtin", None)
    if spec.startswith("builtin:"):
        bug = spec.split(":", 1)[1]
        if bug not in INJECTABLE_BUGS:
            raise ValueError(f"unknown bug id {bug!r}; "
                             f"known: {sorted(INJECTABLE_BUGS)}")
        return ("builtin", bug)
    return ("external", BackendConfig.from_file(spec))


def _configs(args):
    doc = load_config_file(args.config)
    simcfg = similarity_config_from_dict(doc.get("similarity", {}))
    overrides = dict(
        threshold=getattr(args, "threshold", None),
        retries=getattr(args, "retries", None),
        mutations_per_instruction_max=getattr(args, "max_per_block", None),
        accept_polarity=getattr(args, "polarity", None),
        rng_seed=args.rng_seed,
    )
    if getattr(args, "executable_only", None):
        overrides["executable_only"] = True
    mcfg = mutation_config_from_dict(doc.get("mutation", {}), **overrides)
    return simcfg, mcfg


# --- subcommands -------------------------------------------------------------

def cmd_segment(args) -> int:
    try:
        data = read_testcase(args.input)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    seed = seed_from_bytes(data)
    for index, block in enumerate(seed.blocks):
        term = block.terminator.mnemonic if block.terminator else "-"
        if args.output == "structured":
            _emit({"index": index, "offset": block.start_offset,
                   "entries": len(block.entries), "terminator": term,
                   "size_bytes": block.size_bytes()}, args)
        else:
            print(f"block {index}: offset=0x{block.start_offset:08x} "
                  f"entries={len(block.entries)} terminator={term}")
    if args.output == "text":
        print(f"{len(seed.blocks)} blocks")
    return EXIT_OK


def cmd_sim(args) -> int:
    doc = load_config_file(args.config)
    simcfg = similarity_config_from_dict(doc.get("similarity", {}))
    try:
        words = [_parse_word(args.word_a), _parse_word(args.word_b)]
    except ValueError as exc:
        return _fail(str(exc))
    insts = [isa.decode(w) for w in words]
    for word, inst in zip(words, insts):
        if isinstance(inst, isa.Opaque):
            return _fail(f"0x{word:08x} does not decode to a supported "
                         f"instruction")
    score = instruction_similarity(insts[0], insts[1], simcfg)
    if args.output == "structured":
        _emit({**score.breakdown, "total": score.value,
               "a": isa.format_entry(insts[0]),
               "b": isa.format_entry(insts[1])}, args)
    else:
        print(f"a           {isa.format_entry(insts[0])}")
        print(f"b           {isa.format_entry(insts[1])}")
        for name in ("type", "opcode", "subsemantic", "field"):
            print(f"{name:<11} {score.breakdown[name]:.6f}")
        print(f"{'total':<11} {score.value:.6f}")
    return EXIT_OK


def cmd_mutate(args) -> int:
    try:
        simcfg, mcfg = _configs(args)
        data = read_testcase(args.input)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    seed = seed_from_bytes(data)
    out_dir = Path(args.out_dir) if args.out_dir \
        else Path(str(args.input) + ".mutants")
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.input).stem
    reports = []
    for rnd in range(args.rounds):
        rng = derive_rng(mcfg.rng_seed, seed.id, rnd)
        mutant, report = mutate_seed(seed, mcfg, simcfg, rng)
        out_path = out_dir / f"{stem}.r{rnd:03d}.bin"
        out_path.write_bytes(reassemble(mutant))
        reports.append(report.to_dict())
        if args.output == "structured":
            _emit({"round": rnd, "path": str(out_path),
                   **report.to_dict()}, args)
        else:
            print(f"round {rnd}: mutant={mutant.id[:12]} "
                  f"blocks_changed={report.blocks_changed}/"
                  f"{report.blocks_total} -> {out_path}")
    if args.report:
        Path(args.report).write_text(
            json.dumps({"seed_id": seed.id, "rounds": args.rounds,
                        "reports": reports}, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_exec(args) -> int:
    try:
        data = read_testcase(args.input)
        limits = ExecLimits(max_steps=args.max_steps, mem_size=args.mem_size)
        if args.bug:
            trace = run_reference_with_bug(data, limits, args.bug)
        else:
            trace = run_reference(data, limits)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    sys.stdout.write(format_trace(trace))
    return EXIT_OK


def cmd_difftest(args) -> int:
    try:
        data = read_testcase(args.input)
        spec_a = _parse_backend(args.backend_a)
        spec_b = _parse_backend(args.backend_b)
        limits = ExecLimits(max_steps=args.max_steps, mem_size=args.mem_size)
        trace_a = run_backend(spec_a, data, limits)
        trace_b = run_backend(spec_b, data, limits)
    except (OSError, ValueError, BackendError, UnknownBugId) as exc:
        return _fail(str(exc))
    policy = ComparePolicy(final_state=not args.no_final_state)
    divergence = compare(trace_a, trace_b, policy)
    if divergence is None:
        if args.output == "structured":
            _emit({"divergence": None}, args)
        else:
            print("traces match")
        return EXIT_OK
    if args.output == "structured":
        _emit({"divergence": divergence.to_dict()}, args)
    else:
        print(f"divergence at step {divergence.step}: field="
              f"{divergence.field} pc=0x{divergence.pc:x}")
        print(f"  a: {divergence.value_a!r}")
        print(f"  b: {divergence.value_b!r}")
        for label, ctx in (("a", divergence.context_a),
                           ("b", divergence.context_b)):
            for line in ctx:
                print(f"  [{label}] {line}")
    return EXIT_DIVERGENCE


def cmd_fuzz(args) -> int:
    try:
        simcfg, mcfg = _configs(args)
        spec_a = _parse_backend(args.backend_a)
        spec_b = _parse_backend(args.backend_b)
        seeds: list[tuple[str, bytes]] = []
        if args.corpus:
            store = Corpus(args.corpus)
            for record, data in store.iter_seeds():
                seeds.append((record.id, data))
        for path in args.seeds:
            data = read_testcase(path)
            seeds.append((seed_from_bytes(data).id, data))
        if not seeds:
            return _fail("no seeds: pass seed files or --corpus")
    except (OSError, ValueError, BackendError) as exc:
        return _fail(str(exc))
    limits = ExecLimits(max_steps=args.max_steps, mem_size=args.mem_size)
    policy = ComparePolicy(final_state=not args.no_final_state)
    started = time.monotonic()
    report = campaign(seeds, mcfg, simcfg, spec_a, spec_b, args.rounds,
                      limits=limits, policy=policy, jobs=args.jobs)
    elapsed = time.monotonic() - started
    if args.verbose:
        print(f"campaign wall time: {elapsed:.2f}s", file=sys.stderr)
    if args.report:
        Path(args.report).write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n")
    if args.output == "structured":
        _emit(report, args)
    else:
        print(f"seeds {report['seeds']}  rounds {report['rounds']}  "
              f"mutants {report['mutants']}")
        print(f"divergent {report['divergent_cases']}  "
              f"errors {report['error_cases']}")
        for entry in report["unique_divergences"]:
            print(f"  pc={entry['pc']} field={entry['field']} "
                  f"count={entry['count']}")
    return EXIT_DIVERGENCE if report["divergent_cases"] else EXIT_OK


def cmd_corpus(args) -> int:
    store = Corpus(args.corpus)
    try:
        if args.corpus_cmd == "add":
            data = read_testcase(args.input)
            record = store.add_seed(
                data, origin=args.origin,
                source_processor=args.source_processor,
                report_url=args.report_url,
                resource_class=args.resource_class,
                parent_id=args.parent_id)
            if args.output == "structured":
                _emit({"id": record.id, "path": record.path,
                       "origin": record.origin}, args)
            else:
                print(f"added {record.id[:12]} -> {record.path}")
        elif args.corpus_cmd == "stats":
            stats = store.stats()
            if args.output == "structured":
                _emit(stats, args)
            else:
                print(f"seeds {stats['seeds']}  pending {stats['pending']}")
                for title, key in (("origin", "by_origin"),
                                   ("resource", "by_resource_class"),
                                   ("opclass", "by_opclass"),
                                   ("unit", "by_unit")):
                    for name, count in stats[key].items():
                        print(f"  {title} {name}: {count}")
        elif args.corpus_cmd == "import":
            summary = store.import_records(args.input)
            if args.output == "structured":
                _emit(summary, args)
            else:
                print(f"added {summary['added']}  duplicates "
                      f"{summary['duplicates']}  pending {summary['pending']}")
    except (OSError, ValueError) as exc:
        return _fail(str(exc))
    return EXIT_OK


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockfuzz",
        description="Similarity-guided block-level mutation fuzzing for "
                    "RV64 instruction streams")
    parser.add_argument("--config", help="JSON config file with similarity "
                                         "and mutation sections")
    parser.add_argument("--rng-seed", type=int, default=None,
                        help="seed for all randomized operations")
    parser.add_argument("--output", choices=("text", "structured"),
                        default="text",
                        help="structured prints newline-delimited JSON")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="list a seed's blocks")
    p.add_argument("input")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("sim", help="score two instruction words")
    p.add_argument("word_a")
    p.add_argument("word_b")
    p.set_defaults(func=cmd_sim)

    def mutation_flags(p):
        p.add_argument("--threshold", type=float, default=None)
        p.add_argument("--retries", type=int, default=None)
        p.add_argument("--max-per-block", type=int, default=None,
                       help="instructions mutated per attempt, at most")
        p.add_argument("--polarity",
                       choices=("below_threshold", "above_threshold"),
                       default=None)
        p.add_argument("--executable-only", action="store_true",
                       help="draw replacements only from the subset the "
                            "built-in interpreter executes")

    p = sub.add_parser("mutate", help="emit mutants of one seed")
    p.add_argument("input")
    p.add_argument("--rounds", type=int, default=10,
                   help="number of mutants to produce")
    p.add_argument("--out-dir")
    p.add_argument("--report", help="write the mutation report JSON here")
    mutation_flags(p)
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("exec", help="run one test case on the built-in "
                                    "interpreter and print its trace")
    p.add_argument("input")
    p.add_argument("--bug", choices=sorted(INJECTABLE_BUGS), default=None)
    p.add_argument("--max-steps", type=int, default=10_000)
    p.add_argument("--mem-size", type=int, default=1 << 20)
    p.set_defaults(func=cmd_exec)

    p = sub.add_parser("difftest", help="compare two backends on one "
                                        "test case")
    p.add_argument("input")
    p.add_argument("--backend-a", default="builtin",
                   help="'builtin', 'builtin:<bug>' or a backend config file")
    p.add_argument("--backend-b", default="builtin")
    p.add_argument("--max-steps", type=int, default=10_000)
    p.add_argument("--mem-size", type=int, default=1 << 20)
    p.add_argument("--no-final-state", action="store_true",
                   help="compare commit records only")
    p.set_defaults(func=cmd_difftest)

    p = sub.add_parser("fuzz", help="mutation campaign with differential "
                                    "checking")
    p.add_argument("seeds", nargs="*", help="seed files (raw, hex or ELF)")
    p.add_argument("--corpus", help="corpus directory to draw seeds from")
    p.add_argument("--backend-a", default="builtin")
    p.add_argument("--backend-b", default="builtin")
    p.add_argument("--rounds", type=int, default=10,
                   help="mutants per seed")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-steps", type=int, default=10_000)
    p.add_argument("--mem-size", type=int, default=1 << 20)
    p.add_argument("--no-final-state", action="store_true")
    p.add_argument("--report", help="write the campaign report JSON here")
    mutation_flags(p)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("corpus", help="manage the seed corpus")
    csub = p.add_subparsers(dest="corpus_cmd", required=True)
    c = csub.add_parser("add")
    c.add_argument("input")
    c.add_argument("--corpus", required=True)
    c.add_argument("--origin", choices=("historical-bug", "generated",
                                        "mutant"), default="generated")
    c.add_argument("--source-processor")
    c.add_argument("--report-url")
    c.add_argument("--resource-class",
                   choices=("executable", "partial-snippet",
                            "description-only"))
    c.add_argument("--parent-id")
    c.set_defaults(func=cmd_corpus)
    c = csub.add_parser("stats")
    c.add_argument("--corpus", required=True)
    c.set_defaults(func=cmd_corpus)
    c = csub.add_parser("import")
    c.add_argument("input")
    c.add_argument("--corpus", required=True)
    c.set_defaults(func=cmd_corpus)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help; keep both.
        return exc.code if isinstance(exc.code, int) else EXIT_ERROR
    if args.rng_seed is None:
        args.rng_seed = 0
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(str(exc))
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
