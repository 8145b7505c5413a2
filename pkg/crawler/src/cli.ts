#!/usr/bin/env node
import { parseArgs } from "node:util";

import { classify } from "./classify.js";
import { loadConfig } from "./config.js";
import { fetchCves } from "./cve.js";
import { fetchIssues } from "./github.js";
import { ClassifiedReport, emitManifestRecords } from "./emit.js";
import { BugReport } from "./types.js";

async function main(): Promise<number> {
  const { values } = parseArgs({
    options: {
      config: { type: "string" },
      offline: { type: "string" },
      out: { type: "string" },
      source: { type: "string", default: "all" },
    },
  });
  if (!values.config || !values.out) {
    console.error("usage: bugreport-crawler --config config.json "
      + "--out import.jsonl [--offline fixtures/] [--source github|cve|all]");
    return 2;
  }
  const config = await loadConfig(values.config);
  const offlineDir = values.offline;
  const token = process.env.GITHUB_TOKEN;

  const reports: BugReport[] = [];
  if (values.source === "github" || values.source === "all") {
    for (const project of config.projects) {
      reports.push(...await fetchIssues(project, config.since,
        { offlineDir, token }));
    }
  }
  if (values.source === "cve" || values.source === "all") {
    reports.push(...await fetchCves(config.projects, config.since,
      { offlineDir }));
  }

  const classified: ClassifiedReport[] = reports.map((report) => ({
    report,
    classification: classify(report, config.rules),
  }));
  const summary = await emitManifestRecords(classified, values.out,
    { offlineDir });
  console.error(`reports ${reports.length}  with-seeds ${summary.withSeeds}  `
    + `manual ${summary.manual}  irrelevant ${summary.skipped}`);
  return 0;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    process.exit(2);
  },
);
