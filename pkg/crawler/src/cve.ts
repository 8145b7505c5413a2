import { readFile } from "node:fs/promises";
import { join } from "node:path";

import { checkResponse, extractLinks } from "./github.js";
import { BugReport, NetworkError, ProjectConfig } from "./types.js";

/** Shape of the public CVE JSON feed (API 2.0) entries we consume. */
interface CveFeed {
  vulnerabilities: Array<{
    cve: {
      id: string;
      published: string;
      descriptions: Array<{ lang: string; value: string }>;
      references?: Array<{ url: string }>;
    };
  }>;
}

function englishDescription(entry: CveFeed["vulnerabilities"][0]): string {
  const match = entry.cve.descriptions.find((d) => d.lang === "en");
  return match ? match.value : entry.cve.descriptions[0]?.value ?? "";
}

function matchProject(projects: ProjectConfig[],
                      description: string): ProjectConfig | null {
  const lower = description.toLowerCase();
  for (const project of projects) {
    if (project.productKeywords.some((k) => lower.includes(k.toLowerCase()))) {
      return project;
    }
  }
  return null;
}

function feedToReports(feed: CveFeed, projects: ProjectConfig[],
                       since: string): BugReport[] {
  const reports: BugReport[] = [];
  for (const entry of feed.vulnerabilities) {
    const description = englishDescription(entry);
    const project = matchProject(projects, description);
    if (project === null) continue;
    if (entry.cve.published < since) continue;
    const refs = (entry.cve.references ?? []).map((r) => r.url);
    reports.push({
      source: "cve",
      project: project.name,
      url: `https://www.cve.org/CVERecord?id=${entry.cve.id}`,
      title: entry.cve.id,
      body: description,
      labels: [],
      artifactLinks: [...new Set([...refs, ...extractLinks(description)])],
      date: entry.cve.published,
    });
  }
  return reports;
}

/**
 * Pulls CVE entries whose description mentions one of the configured
 * product keywords, within the date window.  Offline mode reads cached
 * feed pages `cve/feed_page<N>.json` from the fixture directory.
 */
export async function fetchCves(projects: ProjectConfig[], since: string,
                                options: { offlineDir?: string } = {},
): Promise<BugReport[]> {
  const reports: BugReport[] = [];
  if (options.offlineDir) {
    for (let page = 1; page <= 50; page += 1) {
      const path = join(options.offlineDir, "cve", `feed_page${page}.json`);
      let text: string;
      try {
        text = await readFile(path, "utf8");
      } catch {
        break;
      }
      reports.push(...feedToReports(JSON.parse(text) as CveFeed,
        projects, since));
    }
    return reports;
  }
  for (const project of projects) {
    for (const keyword of project.productKeywords) {
      const url = "https://services.nvd.nist.gov/rest/json/cves/2.0"
        + `?keywordSearch=${encodeURIComponent(keyword)}`
        + `&pubStartDate=${since}T00:00:00.000`;
      let response: Response;
      try {
        response = await fetch(url);
      } catch (err) {
        throw new NetworkError(`GET ${url} failed: ${err}`);
      }
      checkResponse(response.status, response.headers, `GET ${url}`);
      const feed = (await response.json()) as CveFeed;
      reports.push(...feedToReports(feed, [project], since));
    }
  }
  return reports;
}
