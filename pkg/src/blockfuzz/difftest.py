"""Differential execution: run one test case on two executors and flag
the first behavioral difference.

Backends are either the built-in interpreter (optionally with a named
bug injected) or an external command described by a small config: a
command template, a regex with named groups that parses each trace line,
and a timeout.  Traces are compared lockstep record by record; if all
shared records match, differing lengths and then the final architectural
state are checked.  A campaign mutates every seed a number of rounds,
runs each mutant on both backends and aggregates divergences,
deduplicated by (first divergent pc, differing field).
"""

from __future__ import annotations

import json
import re
import subprocess
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .interp import (
    ArchState, CommitRecord, CommitTrace, ExecLimits, format_record,
    run_reference, run_reference_with_bug,
)
from .mutation import (
    MutationConfig, derive_rng, mutate_seed, reassemble, seed_from_bytes,
)
from .similarity import SimilarityConfig


class BackendError(Exception):
    pass


class SpawnFailure(BackendError):
    pass


class Timeout(BackendError):
    pass


class ParseError(BackendError):
    pass


class NonZeroExit(BackendError):
    def __init__(self, returncode: int, stderr: str):
        super().__init__(f"backend exited with {returncode}: {stderr.strip()}")
        self.returncode = returncode
        self.stderr = stderr


@dataclass(frozen=True)
class BackendConfig:
    command: list[str]
    trace_pattern: str
    timeout_secs: float = 30.0
    final_pattern: str | None = None

    def __post_init__(self):
        names = re.compile(self.trace_pattern).groupindex
        for required in ("step", "pc", "instr"):
            if required not in names:
                raise ValueError(
                    f"trace_pattern must define a named group {required!r}")
        if not any("{testcase}" in arg for arg in self.command):
            raise ValueError("command must reference {testcase}")

    @classmethod
    def from_dict(cls, doc: dict) -> "BackendConfig":
        return cls(command=list(doc["command"]),
                   trace_pattern=doc["trace_pattern"],
                   timeout_secs=float(doc.get("timeout_secs", 30.0)),
                   final_pattern=doc.get("final_pattern"))

    @classmethod
    def from_file(cls, path: str | Path) -> "BackendConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


def builtin_backend_config(max_steps: int = 10_000,
                           bug: str | None = None) -> BackendConfig:
    """Config that drives this package's own trace CLI as an external
    backend; used for adapter self-checks."""
    command = [sys.executable, "-m", "blockfuzz", "exec", "{testcase}",
               "--max-steps", str(max_steps)]
    if bug:
        command += ["--bug", bug]
    return BackendConfig(
        command=command,
        trace_pattern=(r"^commit step=(?P<step>\d+) pc=0x(?P<pc>[0-9a-f]+) "
                       r"insn=0x(?P<instr>[0-9a-f]+)"
                       r"(?: rd=(?P<reg>\d+) val=0x(?P<value>[0-9a-f]+))?$"),
        final_pattern=(r"^halt cause=(?P<cause>[a-z_]+)(?::(?P<code>\d+))? "
                       r"pc=0x(?P<pc>[0-9a-f]+) steps=\d+$"),
        timeout_secs=60.0,
    )


def run_external(data: bytes, backend: BackendConfig,
                 limits: ExecLimits | None = None) -> CommitTrace:
    """Spawn the backend on a temp copy of the test case and parse its
    stdout into a commit trace.  Every non-empty, non-comment line must
    match the trace pattern (or the final pattern)."""
    limits = limits or ExecLimits()
    trace_re = re.compile(backend.trace_pattern)
    final_re = re.compile(backend.final_pattern) if backend.final_pattern \
        else None
    with tempfile.NamedTemporaryFile(suffix=".bin", delete=False) as tmp:
        tmp.write(data)
        path = tmp.name
    try:
        command = [arg.replace("{testcase}", path)
                   .replace("{max_steps}", str(limits.max_steps))
                   .replace("{mem_size}", str(limits.mem_size))
                   for arg in backend.command]
        try:
            proc = subprocess.run(command, capture_output=True, text=True,
                                  timeout=backend.timeout_secs)
        except subprocess.TimeoutExpired as exc:
            raise Timeout(f"backend exceeded {backend.timeout_secs}s") from exc
        except OSError as exc:
            raise SpawnFailure(f"cannot spawn {command[0]!r}: {exc}") from exc
        if proc.returncode != 0:
            raise NonZeroExit(proc.returncode, proc.stderr)
    finally:
        Path(path).unlink(missing_ok=True)

    records: list[CommitRecord] = []
    final_groups: dict | None = None
    for lineno, line in enumerate(proc.stdout.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        m = trace_re.match(line)
        if m:
            g = m.groupdict()
            records.append(CommitRecord(
                step=int(g["step"]), pc=int(g["pc"], 16),
                word=int(g["instr"], 16),
                wb_reg=int(g["reg"]) if g.get("reg") else None,
                wb_value=int(g["value"], 16) if g.get("value") else None))
            continue
        if final_re:
            m = final_re.match(line)
            if m:
                final_groups = m.groupdict()
                continue
        raise ParseError(f"line {lineno}: unparseable trace line: {line!r}")
    steps = [r.step for r in records]
    if steps != list(range(len(records))):
        raise ParseError("trace steps are not consecutive from 0")
    return CommitTrace(records=records,
                       final=_synthesize_final(records, final_groups))


def _synthesize_final(records: list[CommitRecord],
                      groups: dict | None) -> ArchState:
    regs = [0] * 32
    for record in records:
        if record.wb_reg is not None:
            regs[record.wb_reg] = record.wb_value
    pc = records[-1].pc if records else 0
    cause = None
    code = None
    if groups:
        cause = groups.get("cause")
        code = int(groups["code"]) if groups.get("code") else None
        if groups.get("pc") is not None:
            pc = int(groups["pc"], 16)
    return ArchState(pc=pc, xregs=tuple(regs), halted=True,
                     halt_cause=cause, trap_code=code)


# --- comparison --------------------------------------------------------------

@dataclass(frozen=True)
class ComparePolicy:
    pc: bool = True
    instruction: bool = True
    writeback: bool = True
    final_state: bool = True


@dataclass
class Divergence:
    step: int
    field: str  # pc | instruction | writeback | trace-length | final-state
    pc: int
    value_a: object
    value_b: object
    context_a: list[str] = field(default_factory=list)
    context_b: list[str] = field(default_factory=list)

    def key(self) -> tuple[int, str]:
        return (self.pc, self.field)

    def to_dict(self) -> dict:
        return {"step": self.step, "field": self.field,
                "pc": f"0x{self.pc:x}",
                "value_a": repr(self.value_a), "value_b": repr(self.value_b),
                "context_a": self.context_a, "context_b": self.context_b}


def _context(trace: CommitTrace, step: int) -> list[str]:
    lo = max(0, step - 4)
    return [format_record(r) for r in trace.records[lo:step + 5]]


def compare(trace_a: CommitTrace, trace_b: CommitTrace,
            policy: ComparePolicy | None = None) -> Divergence | None:
    """First behavioral difference between two traces, if any."""
    policy = policy or ComparePolicy()
    n = min(len(trace_a.records), len(trace_b.records))
    for i in range(n):
        ra, rb = trace_a.records[i], trace_b.records[i]
        checks = []
        if policy.pc:
            checks.append(("pc", ra.pc, rb.pc))
        if policy.instruction:
            checks.append(("instruction", ra.word, rb.word))
        if policy.writeback:
            checks.append(("writeback", (ra.wb_reg, ra.wb_value),
                           (rb.wb_reg, rb.wb_value)))
        for name, va, vb in checks:
            if va != vb:
                return Divergence(step=i, field=name, pc=ra.pc,
                                  value_a=va, value_b=vb,
                                  context_a=_context(trace_a, i),
                                  context_b=_context(trace_b, i))
    if len(trace_a.records) != len(trace_b.records):
        longer = trace_a if len(trace_a.records) > n else trace_b
        return Divergence(step=n, field="trace-length", pc=longer.records[n].pc,
                          value_a=len(trace_a.records),
                          value_b=len(trace_b.records),
                          context_a=_context(trace_a, n),
                          context_b=_context(trace_b, n))
    if policy.final_state:
        fa, fb = trace_a.final, trace_b.final
        diff = _final_state_diff(fa, fb)
        if diff is not None:
            name, va, vb = diff
            return Divergence(step=n, field="final-state", pc=fa.pc,
                              value_a=f"{name}={va}", value_b=f"{name}={vb}",
                              context_a=_context(trace_a, n),
                              context_b=_context(trace_b, n))
    return None


def _final_state_diff(fa: ArchState, fb: ArchState):
    if fa.pc != fb.pc:
        return ("pc", hex(fa.pc), hex(fb.pc))
    # Halt causes are compared only when both backends report one; an
    # external backend without a final line leaves it unknown.
    if fa.halt_cause is not None and fb.halt_cause is not None:
        if (fa.halt_cause, fa.trap_code) != (fb.halt_cause, fb.trap_code):
            return ("halt_cause", f"{fa.halt_cause}:{fa.trap_code}",
                    f"{fb.halt_cause}:{fb.trap_code}")
    for i in range(32):
        if fa.xregs[i] != fb.xregs[i]:
            return (f"x{i}", hex(fa.xregs[i]), hex(fb.xregs[i]))
    return None


# --- backends and campaigns ---------------------------------------------------

def run_backend(spec, data: bytes,
                limits: ExecLimits | None = None) -> CommitTrace:
    """spec: ('builtin', bug_or_None) or ('external', config_dict)."""
    kind, arg = spec
    if kind == "builtin":
        if arg:
            return run_reference_with_bug(data, limits, arg)
        return run_reference(data, limits)
    if kind == "external":
        cfg = arg if isinstance(arg, BackendConfig) \
            else BackendConfig.from_dict(arg)
        return run_external(data, cfg, limits)
    raise ValueError(f"unknown backend kind {kind!r}")


def _run_case(args) -> dict:
    (seed_id, data, rnd, mcfg, simcfg, spec_a, spec_b, limits, policy) = args
    rng = derive_rng(mcfg.rng_seed, seed_id, rnd)
    seed = seed_from_bytes(data)
    mutant, _ = mutate_seed(seed, mcfg, simcfg, rng)
    mutant_bytes = reassemble(mutant)
    result = {"seed_id": seed_id, "round": rnd, "mutant_id": mutant.id,
              "error": None, "divergence": None, "steps": 0}
    try:
        trace_a = run_backend(spec_a, mutant_bytes, limits)
        trace_b = run_backend(spec_b, mutant_bytes, limits)
    except BackendError as exc:
        result["error"] = f"{type(exc).__name__}: {exc}"
        return result
    result["steps"] = len(trace_a.records) + len(trace_b.records)
    divergence = compare(trace_a, trace_b, policy)
    if divergence is not None:
        result["divergence"] = divergence.to_dict()
        result["divergence_key"] = list(divergence.key())
    return result


def campaign(seeds: list[tuple[str, bytes]], mcfg: MutationConfig,
             simcfg: SimilarityConfig, spec_a, spec_b, rounds: int,
             limits: ExecLimits | None = None,
             policy: ComparePolicy | None = None, jobs: int = 1) -> dict:
    """Mutate every seed `rounds` times, difftest each mutant, aggregate.

    Backend errors are tallied per case and never abort the run.  The
    report contains only deterministic quantities so identical inputs
    and seeds reproduce it byte for byte.
    """
    if not seeds:
        raise ValueError("campaign requires at least one seed")
    tasks = [(seed_id, data, rnd, mcfg, simcfg, spec_a, spec_b,
              limits, policy)
             for seed_id, data in seeds for rnd in range(rounds)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_case, tasks, chunksize=4))
    else:
        results = [_run_case(t) for t in tasks]

    per_seed: dict[str, dict] = {}
    unique: dict[tuple, dict] = {}
    divergent = errors = 0
    for res in results:
        stats = per_seed.setdefault(res["seed_id"], {
            "mutants": 0, "divergent": 0, "errors": 0, "steps": 0})
        stats["mutants"] += 1
        stats["steps"] += res["steps"]
        if res["error"]:
            errors += 1
            stats["errors"] += 1
        elif res["divergence"]:
            divergent += 1
            stats["divergent"] += 1
            key = tuple(res["divergence_key"])
            entry = unique.setdefault(key, {
                "pc": res["divergence"]["pc"],
                "field": res["divergence"]["field"],
                "count": 0,
                "example": {"seed_id": res["seed_id"],
                            "round": res["round"],
                            "mutant_id": res["mutant_id"]},
            })
            entry["count"] += 1
    return {
        "seeds": len(seeds),
        "rounds": rounds,
        "mutants": len(tasks),
        "divergent_cases": divergent,
        "error_cases": errors,
        "unique_divergences": [unique[k] for k in sorted(unique)],
        "per_seed": {sid: per_seed[sid] for sid in sorted(per_seed)},
        "cases": [
            {k: v for k, v in res.items() if k != "divergence_key"}
            for res in results if res["divergence"] or res["error"]
        ],
    }
