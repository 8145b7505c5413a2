export type ReportSource = "issue-tracker" | "cve";

export type ResourceClass = "executable" | "partial-snippet" | "description-only";

export interface BugReport {
  source: ReportSource;
  project: string;
  url: string;
  title: string;
  body: string;
  labels: string[];
  artifactLinks: string[];
  date: string; // ISO 8601
}

export interface Signal {
  rule: string;
  matched: string;
}

export interface Classification {
  relevant: boolean;
  resourceClass?: ResourceClass;
  signals: Signal[];
}

export interface ProjectConfig {
  name: string;
  owner: string;
  repo: string;
  /** Keywords matched against CVE descriptions for this project. */
  productKeywords: string[];
}

export interface RuleConfig {
  /** Issue labels that mark a report as relevant. */
  relevantLabels: string[];
  /** Title/body keywords that mark a report as relevant. */
  relevantKeywords: string[];
  /** Markers whose presence makes a code fence a complete program. */
  entryPointMarkers: string[];
  /** Link suffixes treated as downloadable test-case artifacts. */
  artifactExtensions: string[];
}

export interface CrawlerConfig {
  projects: ProjectConfig[];
  rules: RuleConfig;
  /** ISO date; reports older than this are ignored. */
  since: string;
}

export class AuthError extends Error {}

export class NetworkError extends Error {}

export class RateLimited extends Error {
  constructor(message: string, public retryAfterSecs: number | null) {
    super(message);
  }
}
