import { readFile } from "node:fs/promises";
import { join } from "node:path";

import {
  AuthError, BugReport, NetworkError, ProjectConfig, RateLimited,
} from "./types.js";

const PER_PAGE = 100;
const MAX_PAGES = 50;

/** Shape of the GitHub REST issue objects we consume. */
interface GithubIssue {
  html_url: string;
  title: string;
  body: string | null;
  labels: Array<{ name?: string } | string>;
  created_at: string;
  pull_request?: unknown;
}

function labelNames(issue: GithubIssue): string[] {
  return issue.labels
    .map((l) => (typeof l === "string" ? l : l.name ?? ""))
    .filter((n) => n.length > 0);
}

const LINK_RE = /https?:\/\/[^\s)>"\]]+/g;

export function extractLinks(body: string): string[] {
  return [...new Set(body.match(LINK_RE) ?? [])];
}

export function issueToReport(project: ProjectConfig,
                              issue: GithubIssue): BugReport {
  const body = issue.body ?? "";
  return {
    source: "issue-tracker",
    project: project.name,
    url: issue.html_url,
    title: issue.title,
    body,
    labels: labelNames(issue),
    artifactLinks: extractLinks(body),
    date: issue.created_at,
  };
}

export function checkResponse(status: number,
                              headers: { get(name: string): string | null },
                              context: string): void {
  if (status === 401) {
    throw new AuthError(`${context}: authentication rejected (401)`);
  }
  const remaining = headers.get("x-ratelimit-remaining");
  if (status === 429 || (status === 403 && remaining === "0")) {
    const retry = headers.get("retry-after");
    throw new RateLimited(`${context}: rate limited (${status})`,
      retry === null ? null : Number(retry));
  }
  if (status !== 200) {
    throw new NetworkError(`${context}: unexpected status ${status}`);
  }
}

async function fetchPage(project: ProjectConfig, since: string, page: number,
                         token: string | undefined): Promise<GithubIssue[]> {
  const url = `https://api.github.com/repos/${project.owner}/${project.repo}`
    + `/issues?state=all&since=${since}&per_page=${PER_PAGE}&page=${page}`;
  const headers: Record<string, string> = {
    accept: "application/vnd.github+json",
  };
  if (token) headers.authorization = `token ${token}`;
  let response: Response;
  try {
    response = await fetch(url, { headers });
  } catch (err) {
    throw new NetworkError(`GET ${url} failed: ${err}`);
  }
  checkResponse(response.status, response.headers, `GET ${url}`);
  const data = await response.json();
  if (!Array.isArray(data)) {
    throw new NetworkError(`GET ${url}: expected an array`);
  }
  return data as GithubIssue[];
}

async function readFixturePages(dir: string,
                                project: ProjectConfig): Promise<GithubIssue[]> {
  const issues: GithubIssue[] = [];
  for (let page = 1; page <= MAX_PAGES; page += 1) {
    const path = join(dir, "github", `${project.name}_page${page}.json`);
    let text: string;
    try {
      text = await readFile(path, "utf8");
    } catch {
      break;
    }
    issues.push(...(JSON.parse(text) as GithubIssue[]));
  }
  return issues;
}

/**
 * Paginated retrieval of one project's issues, newest API ordering.
 * Offline mode replays cached response pages from a fixture directory
 * and must produce the same reports a recorded live run produced.
 * Sequential requests only; rate-limit responses surface as RateLimited.
 */
export async function fetchIssues(project: ProjectConfig, since: string,
                                  options: { offlineDir?: string;
                                             token?: string } = {},
): Promise<BugReport[]> {
  let issues: GithubIssue[];
  if (options.offlineDir) {
    issues = await readFixturePages(options.offlineDir, project);
  } else {
    issues = [];
    for (let page = 1; page <= MAX_PAGES; page += 1) {
      const batch = await fetchPage(project, since, page, options.token);
      issues.push(...batch);
      if (batch.length < PER_PAGE) break;
    }
  }
  return issues
    .filter((issue) => issue.pull_request === undefined)
    .filter((issue) => issue.created_at >= since)
    .map((issue) => issueToReport(project, issue));
}
