import { readFile } from "node:fs/promises";

import { CrawlerConfig } from "./types.js";

export async function loadConfig(path: string): Promise<CrawlerConfig> {
  const doc = JSON.parse(await readFile(path, "utf8"));
  if (!Array.isArray(doc.projects) || doc.projects.length === 0) {
    throw new Error(`${path}: config needs a non-empty projects list`);
  }
  for (const project of doc.projects) {
    for (const key of ["name", "owner", "repo", "productKeywords"]) {
      if (!(key in project)) {
        throw new Error(`${path}: project missing ${key}`);
      }
    }
  }
  const rules = doc.rules ?? {};
  for (const key of ["relevantLabels", "relevantKeywords",
                     "entryPointMarkers", "artifactExtensions"]) {
    if (!Array.isArray(rules[key])) {
      throw new Error(`${path}: rules.${key} must be a list`);
    }
  }
  if (typeof doc.since !== "string") {
    throw new Error(`${path}: since must be an ISO date string`);
  }
  return doc as CrawlerConfig;
}
