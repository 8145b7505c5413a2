import { BugReport, Classification, RuleConfig, Signal } from "./types.js";

const FENCE_RE = /```([a-zA-Z]*)\n([\s\S]*?)```/g;

function codeFences(body: string): string[] {
  const fences: string[] = [];
  for (const match of body.matchAll(FENCE_RE)) {
    fences.push(match[2]);
  }
  return fences;
}

function relevanceSignals(report: BugReport, rules: RuleConfig): Signal[] {
  const signals: Signal[] = [];
  for (const label of report.labels) {
    if (rules.relevantLabels.some(
      (want) => label.toLowerCase() === want.toLowerCase())) {
      signals.push({ rule: "label-match", matched: label });
    }
  }
  const haystack = `${report.title}\n${report.body}`.toLowerCase();
  for (const keyword of rules.relevantKeywords) {
    if (haystack.includes(keyword.toLowerCase())) {
      signals.push({ rule: "keyword-match", matched: keyword });
    }
  }
  // CVE entries are vetted vulnerability reports by construction.
  if (report.source === "cve") {
    signals.push({ rule: "cve-entry", matched: report.title });
  }
  return signals;
}

function artifactSignal(report: BugReport, rules: RuleConfig): Signal | null {
  for (const link of report.artifactLinks) {
    const path = link.split("?")[0].toLowerCase();
    if (rules.artifactExtensions.some((ext) => path.endsWith(ext))) {
      return { rule: "attached-artifact", matched: link };
    }
  }
  return null;
}

function completeProgramSignal(report: BugReport,
                               rules: RuleConfig): Signal | null {
  for (const fence of codeFences(report.body)) {
    for (const marker of rules.entryPointMarkers) {
      if (fence.includes(marker)) {
        return { rule: "complete-program", matched: marker };
      }
    }
  }
  return null;
}

/**
 * Two-stage rule pipeline.  Stage one decides relevance from labels and
 * keywords; stage two grades the available testing resource: a
 * downloadable artifact or a complete program in a code fence counts as
 * executable, a code fence without an entry point as a partial snippet,
 * anything else as description only.  Every fired rule is recorded.
 */
export function classify(report: BugReport,
                         rules: RuleConfig): Classification {
  const signals = relevanceSignals(report, rules);
  if (signals.length === 0) {
    return { relevant: false, signals: [] };
  }
  const artifact = artifactSignal(report, rules);
  if (artifact) {
    return { relevant: true, resourceClass: "executable",
             signals: [...signals, artifact] };
  }
  const program = completeProgramSignal(report, rules);
  if (program) {
    return { relevant: true, resourceClass: "executable",
             signals: [...signals, program] };
  }
  const fences = codeFences(report.body);
  if (fences.length > 0) {
    return { relevant: true, resourceClass: "partial-snippet",
             signals: [...signals,
                       { rule: "code-fence", matched: fences[0].slice(0, 40) }] };
  }
  return { relevant: true, resourceClass: "description-only",
           signals: [...signals, { rule: "prose-only", matched: "" }] };
}
