"""Directory-backed seed corpus with a JSON manifest.

Layout under the corpus root:

  manifest.json   all stored seeds, one record each (schema below)
  seeds/<id>.bin  raw little-endian instruction stream, named by the
                  sha256 of its contents
  pending.jsonl   imported report entries that still need a test case
                  constructed by hand (no seed bytes yet)

A record's ``id`` is a pure function of the seed bytes, so adding the
same bytes twice returns the existing record.  Import files are JSON
Lines; each line either carries inline ``seed_hex`` / a ``seed_path``,
or is marked ``needs_manual_testcase``.
"""

from __future__ import annotations

import json
import re
import struct
from collections import Counter
from dataclasses import dataclass, asdict
from pathlib import Path

from . import elf, isa
from .isa import Instruction, TrailingBytes
from .mutation import content_id

SCHEMA_VERSION = 1

ORIGINS = ("historical-bug", "generated", "mutant")
RESOURCE_CLASSES = ("executable", "partial-snippet", "description-only")

_HEX_LINE = re.compile(r"^(0x)?([0-9a-fA-F]{1,8})$")


@dataclass
class SeedRecord:
    id: str
    path: str
    origin: str
    source_processor: str | None = None
    report_url: str | None = None
    resource_class: str | None = None
    parent_id: str | None = None

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"origin must be one of {ORIGINS}")
        if self.resource_class is not None \
                and self.resource_class not in RESOURCE_CLASSES:
            raise ValueError(f"resource_class must be one of {RESOURCE_CLASSES}")
        if self.origin == "mutant" and not self.parent_id:
            raise ValueError("mutant records require parent_id")
        if self.origin == "historical-bug" and not self.report_url:
            raise ValueError("historical-bug records require report_url "
                             "(use 'manual' when none exists)")


@dataclass
class CorpusManifest:
    records: list[SeedRecord]
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("manifest ids must be unique")

    def to_json(self) -> str:
        doc = {"schema_version": self.schema_version,
               "records": [asdict(r) for r in self.records]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CorpusManifest":
        doc = json.loads(text)
        return cls(records=[SeedRecord(**r) for r in doc["records"]],
                   schema_version=doc["schema_version"])


def parse_hex_text(text: str) -> bytes:
    """One hexadecimal word per line; '#' starts a comment."""
    words = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _HEX_LINE.match(line)
        if not m:
            raise ValueError(f"line {lineno}: not a hex word: {raw!r}")
        words.append(int(m.group(2), 16))
    return struct.pack(f"<{len(words)}I", *words)


def format_hex_text(data: bytes) -> str:
    if len(data) % 4:
        raise TrailingBytes(f"length {len(data)} not a multiple of 4")
    words = struct.unpack(f"<{len(data) // 4}I", data)
    return "".join(f"0x{w:08x}\n" for w in words)


def _looks_like_hex_text(data: bytes) -> str | None:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError:
        return None
    lines = [l.split("#", 1)[0].strip() for l in text.splitlines()]
    lines = [l for l in lines if l]
    if lines and all(_HEX_LINE.match(l) for l in lines):
        return text
    return None


def read_testcase(path: str | Path) -> bytes:
    """Load a seed from raw binary, hex text or an ELF64 .text section."""
    data = Path(path).read_bytes()
    if data[:4] == b"\x7fELF":
        data = elf.extract_text_section(data)
    else:
        text = _looks_like_hex_text(data)
        if text is not None:
            data = parse_hex_text(text)
    if len(data) % 4:
        raise TrailingBytes(f"{path}: length {len(data)} not a multiple of 4")
    return data


class Corpus:
    """Single-writer view of a corpus directory."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.seeds_dir = self.root / "seeds"
        self.manifest_path = self.root / "manifest.json"
        self.pending_path = self.root / "pending.jsonl"
        if self.manifest_path.exists():
            self.manifest = CorpusManifest.from_json(
                self.manifest_path.read_text())
        else:
            self.manifest = CorpusManifest(records=[])

    def _save(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest_path.write_text(self.manifest.to_json())

    def find(self, seed_id: str) -> SeedRecord | None:
        for r in self.manifest.records:
            if r.id == seed_id:
                return r
        return None

    def add_seed(self, data: bytes, origin: str = "generated",
                 source_processor: str | None = None,
                 report_url: str | None = None,
                 resource_class: str | None = None,
                 parent_id: str | None = None) -> SeedRecord:
        """Content-addressed add; duplicate bytes return the old record."""
        if len(data) % 4:
            raise TrailingBytes(f"length {len(data)} not a multiple of 4")
        seed_id = content_id(data)
        existing = self.find(seed_id)
        if existing is not None:
            return existing
        self.seeds_dir.mkdir(parents=True, exist_ok=True)
        rel = f"seeds/{seed_id}.bin"
        (self.root / rel).write_bytes(data)
        record = SeedRecord(id=seed_id, path=rel, origin=origin,
                            source_processor=source_processor,
                            report_url=report_url,
                            resource_class=resource_class,
                            parent_id=parent_id)
        self.manifest.records.append(record)
        self._save()
        return record

    def seed_bytes(self, record: SeedRecord) -> bytes:
        return (self.root / record.path).read_bytes()

    def iter_seeds(self):
        for record in self.manifest.records:
            yield record, self.seed_bytes(record)

    def import_records(self, import_file: str | Path) -> dict:
        """Consume a JSON-Lines import file (the crawler's output format).

        Entries with seed bytes are stored; needs_manual_testcase entries
        are appended to pending.jsonl for later hand construction.
        """
        added, duplicates, pending = 0, 0, 0
        pending_lines = []
        known_pending = set()
        if self.pending_path.exists():
            for line in self.pending_path.read_text().splitlines():
                if line.strip():
                    known_pending.add(json.loads(line).get("report_url"))
        base = Path(import_file).parent
        for lineno, raw in enumerate(
                Path(import_file).read_text().splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                entry = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{import_file}:{lineno}: bad JSON: {exc}")
            if entry.get("needs_manual_testcase"):
                url = entry.get("report_url")
                if url is None or url not in known_pending:
                    pending_lines.append(json.dumps(entry, sort_keys=True))
                    known_pending.add(url)
                pending += 1
                continue
            if "seed_hex" in entry:
                data = bytes.fromhex(entry["seed_hex"])
                if len(data) % 4:
                    raise TrailingBytes(
                        f"{import_file}:{lineno}: seed_hex length not a "
                        f"multiple of 4 bytes")
            elif "seed_path" in entry:
                data = read_testcase(base / entry["seed_path"])
            else:
                raise ValueError(f"{import_file}:{lineno}: entry carries "
                                 f"neither seed bytes nor a manual marker")
            before = len(self.manifest.records)
            self.add_seed(
                data,
                origin=entry.get("origin", "historical-bug"),
                source_processor=entry.get("source_processor"),
                report_url=entry.get("report_url"),
                resource_class=entry.get("resource_class"),
                parent_id=entry.get("parent_id"))
            if len(self.manifest.records) > before:
                added += 1
            else:
                duplicates += 1
        if pending_lines:
            self.root.mkdir(parents=True, exist_ok=True)
            with self.pending_path.open("a") as fh:
                for line in pending_lines:
                    fh.write(line + "\n")
        return {"added": added, "duplicates": duplicates, "pending": pending}

    def stats(self) -> dict:
        """Counts by origin and resource class, an instruction-class
        histogram over all stored seeds, and per-seed CTI density."""
        by_origin = Counter()
        by_resource = Counter()
        by_opclass = Counter()
        by_unit = Counter()
        cti_density = {}
        total_words = 0
        total_decoded = 0
        for record, data in self.iter_seeds():
            by_origin[record.origin] += 1
            if record.resource_class:
                by_resource[record.resource_class] += 1
            stream = isa.decode_stream(data)
            ctis = 0
            for item in stream.items:
                total_words += 1
                if isinstance(item, Instruction):
                    total_decoded += 1
                    by_opclass[item.opclass.value] += 1
                    by_unit[item.unit.value] += 1
                    if isa.is_cti(item):
                        ctis += 1
            cti_density[record.id] = ctis / len(stream) if len(stream) else 0.0
        pending = 0
        if self.pending_path.exists():
            pending = sum(1 for line in
                          self.pending_path.read_text().splitlines()
                          if line.strip())
        return {
            "seeds": len(self.manifest.records),
            "pending": pending,
            "by_origin": dict(sorted(by_origin.items())),
            "by_resource_class": dict(sorted(by_resource.items())),
            "by_opclass": dict(sorted(by_opclass.items())),
            "by_unit": dict(sorted(by_unit.items())),
            "total_words": total_words,
            "total_decoded": total_decoded,
            "cti_density": dict(sorted(cti_density.items())),
        }
