import assert from "node:assert/strict";
import { execFile } from "node:child_process";
import { mkdtemp, readFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { test } from "node:test";
import { fileURLToPath } from "node:url";
import { promisify } from "node:util";

import { classify } from "../src/classify.js";
import { loadConfig } from "../src/config.js";
import { fetchCves } from "../src/cve.js";
import { fetchIssues } from "../src/github.js";
import { ClassifiedReport, emitManifestRecords } from "../src/emit.js";

const run = promisify(execFile);

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)),
  "../../fixtures");

async function classifiedFixtureSet(): Promise<ClassifiedReport[]> {
  const config = await loadConfig(join(FIXTURES, "config.json"));
  const reports = [];
  for (const project of config.projects) {
    reports.push(...await fetchIssues(project, config.since,
      { offlineDir: FIXTURES }));
  }
  reports.push(...await fetchCves(config.projects, config.since,
    { offlineDir: FIXTURES }));
  return reports.map((report) => ({
    report,
    classification: classify(report, config.rules),
  }));
}

test("emit writes one record per relevant report", async () => {
  const items = await classifiedFixtureSet();
  const dir = await mkdtemp(join(tmpdir(), "emit-"));
  const out = join(dir, "import.jsonl");
  const summary = await emitManifestRecords(items, out,
    { offlineDir: FIXTURES });
  assert.deepEqual(summary, { withSeeds: 3, manual: 8, skipped: 2 });
  const lines = (await readFile(out, "utf8")).trim().split("\n");
  assert.equal(lines.length, 11);
  for (const line of lines) {
    const record = JSON.parse(line);
    assert.equal(record.origin, "historical-bug");
    assert.ok(record.report_url.length > 0);
    assert.ok(record.seed_path || record.needs_manual_testcase);
  }
});

test("attachments are copied, never synthesized", async () => {
  const items = await classifiedFixtureSet();
  const dir = await mkdtemp(join(tmpdir(), "emit-"));
  const out = join(dir, "import.jsonl");
  await emitManifestRecords(items, out, { offlineDir: FIXTURES });
  const copied = await readFile(join(dir, "artifacts", "testcase101.bin"));
  const original = await readFile(
    join(FIXTURES, "attachments", "testcase101.bin"));
  assert.deepEqual(copied, original);
  // The complete-program report (102) has no attachment: it must carry
  // the manual marker rather than invented bytes.
  const lines = (await readFile(out, "utf8")).trim().split("\n")
    .map((l) => JSON.parse(l));
  const program = lines.find((r) => r.report_url.endsWith("/issues/102"));
  assert.equal(program.needs_manual_testcase, true);
  assert.equal(program.seed_path, undefined);
});

test("emit output is deterministic across runs", async () => {
  const items = await classifiedFixtureSet();
  const bytes: string[] = [];
  for (const label of ["a", "b"]) {
    const dir = await mkdtemp(join(tmpdir(), `emit-${label}-`));
    const out = join(dir, "import.jsonl");
    await emitManifestRecords(items, out, { offlineDir: FIXTURES });
    bytes.push(await readFile(out, "utf8"));
  }
  assert.equal(bytes[0], bytes[1]);
});

test("empty input produces a valid empty import file", async () => {
  const dir = await mkdtemp(join(tmpdir(), "emit-"));
  const out = join(dir, "import.jsonl");
  const summary = await emitManifestRecords([], out);
  assert.deepEqual(summary, { withSeeds: 0, manual: 0, skipped: 0 });
  assert.equal(await readFile(out, "utf8"), "");
});

test("emitted file parses cleanly through the corpus importer", async () => {
  const items = await classifiedFixtureSet();
  const dir = await mkdtemp(join(tmpdir(), "emit-"));
  const out = join(dir, "import.jsonl");
  await emitManifestRecords(items, out, { offlineDir: FIXTURES });
  const corpusDir = join(dir, "corpus");
  const imported = await run("python3",
    ["-m", "blockfuzz", "--output", "structured",
     "corpus", "import", out, "--corpus", corpusDir]);
  const summary = JSON.parse(imported.stdout);
  assert.deepEqual(summary, { added: 3, duplicates: 0, pending: 8 });
  const stats = await run("python3",
    ["-m", "blockfuzz", "--output", "structured",
     "corpus", "stats", "--corpus", corpusDir]);
  const parsed = JSON.parse(stats.stdout);
  assert.equal(parsed.seeds, 3);
  assert.equal(parsed.pending, 8);
  assert.equal(parsed.by_origin["historical-bug"], 3);
});
