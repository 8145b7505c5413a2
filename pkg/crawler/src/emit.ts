import { mkdir, readFile, writeFile } from "node:fs/promises";
import { basename, dirname, join } from "node:path";

import { BugReport, Classification, NetworkError } from "./types.js";

export interface ClassifiedReport {
  report: BugReport;
  classification: Classification;
}

interface ImportRecord {
  origin: "historical-bug";
  source_processor: string;
  report_url: string;
  resource_class: string;
  seed_path?: string;
  needs_manual_testcase?: true;
}

function artifactLink(classification: Classification): string | null {
  const signal = classification.signals.find(
    (s) => s.rule === "attached-artifact");
  return signal ? signal.matched : null;
}

async function resolveArtifact(link: string,
                               offlineDir?: string): Promise<Buffer> {
  const name = basename(new URL(link).pathname);
  if (offlineDir) {
    return readFile(join(offlineDir, "attachments", name));
  }
  const response = await fetch(link);
  if (!response.ok) {
    throw new NetworkError(`GET ${link}: status ${response.status}`);
  }
  return Buffer.from(await response.arrayBuffer());
}

/**
 * Writes classified reports as a corpus import file (JSON Lines).
 *
 * Only downloadable attachments ever become seed bytes; they are copied
 * into an artifacts/ directory next to the output file and referenced
 * by seed_path.  Everything else relevant, complete programs that exist
 * only as text included, is emitted with a needs_manual_testcase marker
 * so a human can construct the test case.  Output ordering and content
 * are deterministic for a fixed input set.
 */
export async function emitManifestRecords(items: ClassifiedReport[],
                                          outPath: string,
                                          options: { offlineDir?: string } = {},
): Promise<{ withSeeds: number; manual: number; skipped: number }> {
  const sorted = [...items].sort((x, y) =>
    x.report.url < y.report.url ? -1 : x.report.url > y.report.url ? 1 : 0);
  const lines: string[] = [];
  let withSeeds = 0;
  let manual = 0;
  let skipped = 0;
  for (const { report, classification } of sorted) {
    if (!classification.relevant || !classification.resourceClass) {
      skipped += 1;
      continue;
    }
    const record: ImportRecord = {
      origin: "historical-bug",
      source_processor: report.project,
      report_url: report.url,
      resource_class: classification.resourceClass,
    };
    const link = artifactLink(classification);
    if (classification.resourceClass === "executable" && link !== null) {
      const name = basename(new URL(link).pathname);
      const data = await resolveArtifact(link, options.offlineDir);
      await mkdir(join(dirname(outPath), "artifacts"), { recursive: true });
      await writeFile(join(dirname(outPath), "artifacts", name), data);
      record.seed_path = join("artifacts", name);
      withSeeds += 1;
    } else {
      record.needs_manual_testcase = true;
      manual += 1;
    }
    lines.push(JSON.stringify(record));
  }
  await mkdir(dirname(outPath), { recursive: true });
  await writeFile(outPath, lines.join("\n") + (lines.length ? "\n" : ""));
  return { withSeeds, manual, skipped };
}
