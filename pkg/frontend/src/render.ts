/** DOM rendering. Every figure shown comes verbatim from API fields; the
 * diff and the objective delta are presentation derived from those fields. */

import type { OutcomePayload } from "./api.js";
import { diffLines } from "./diff.js";
import {
  formatDelta,
  formatImpact,
  formatNged,
  formatObjective,
  ngedGaugePercent,
} from "./format.js";
import type { Round } from "./state.js";

const MARKER_LINES = new Set([
  "# EOR DATA BEGIN",
  "# EOR DATA END",
  "# EOR CONSTRAINT BEGIN",
  "# EOR CONSTRAINT END",
]);

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** The model panel: source text with marker lines highlighted and the
 * editable regions tinted. */
export function renderModelPanel(source: string): HTMLElement {
  const panel = el("pre", "model-source");
  let inData = false;
  let inConstraints = false;
  for (const line of source.split("\n")) {
    const stripped = line.trim();
    const row = el("div");
    if (MARKER_LINES.has(stripped)) {
      row.className = "marker-line";
      if (stripped === "# EOR DATA BEGIN") inData = true;
      if (stripped === "# EOR DATA END") inData = false;
      if (stripped === "# EOR CONSTRAINT BEGIN") inConstraints = true;
      if (stripped === "# EOR CONSTRAINT END") inConstraints = false;
    } else if (inData || inConstraints) {
      row.className = "editable-region";
    }
    row.textContent = line === "" ? " " : line;
    panel.appendChild(row);
  }
  return panel;
}

export function renderDiff(before: string, after: string): HTMLElement {
  const container = el("pre", "diff-view");
  for (const line of diffLines(before, after)) {
    const row = el("div", `diff-${line.kind}`);
    const prefix = line.kind === "add" ? "+" : line.kind === "del" ? "-" : " ";
    row.textContent = `${prefix} ${line.text}`;
    container.appendChild(row);
  }
  return container;
}

function explanationPanel(title: string, body: string | null): HTMLElement {
  const panel = el("section", "explanation");
  panel.appendChild(el("h3", undefined, title));
  panel.appendChild(el("p", "explanation-body", body ?? "(none)"));
  return panel;
}

/** One completed round: diff, objective movement, distance gauge, impact
 * badge, and the two explanation panels. */
export function renderRound(round: Round): HTMLElement {
  const { outcome } = round;
  const card = el("article", "round");
  card.appendChild(el("h2", undefined, `Round ${round.index}`));
  card.appendChild(el("p", "round-query", outcome.query));

  if (outcome.status === "failed") {
    const badge = el(
      "p",
      "failed-badge",
      `Failed at ${outcome.failure_stage}: ${outcome.failure_reason}`,
    );
    card.appendChild(badge);
    const link = el("details", "transcript");
    link.appendChild(el("summary", undefined, "transcript"));
    for (const entry of outcome.transcript) {
      link.appendChild(el("pre", "transcript-entry", `[${entry.role}]\n${entry.response}`));
    }
    card.appendChild(link);
    return card;
  }

  card.appendChild(renderDiff(round.baseSource, outcome.updated_source ?? ""));

  const before = outcome.original_solution?.objective ?? null;
  const after = outcome.updated_solution?.objective ?? null;
  const objectives = el("p", "objectives");
  const beforeSpan = el("span", "objective-before", formatObjective(before));
  const afterSpan = el("span", "objective-after", formatObjective(after));
  const deltaSpan = el("span", "objective-delta", `Δ ${formatDelta(before, after)}`);
  objectives.append(beforeSpan, " → ", afterSpan, " ", deltaSpan);
  card.appendChild(objectives);

  if (outcome.ged_report) {
    const gauge = el("div", "nged-gauge");
    const fill = el("div", "nged-fill");
    fill.style.width = `${ngedGaugePercent(outcome.ged_report.nged)}%`;
    gauge.appendChild(fill);
    const label = el("span", "nged-label", `NGED ${formatNged(outcome.ged_report.nged)}`);
    const wrap = el("div", "nged");
    wrap.append(label, gauge);
    card.appendChild(wrap);
  }

  card.appendChild(el("span", "impact-badge", formatImpact(outcome.impact_rating)));
  card.appendChild(
    explanationPanel("Explanation of Correctness", outcome.explanation_correctness),
  );
  card.appendChild(
    explanationPanel("Explanation of the Results", outcome.explanation_results),
  );
  return card;
}

export function renderHistory(rounds: Round[], onSelect: (round: Round) => void): HTMLElement {
  const list = el("ol", "history");
  for (const round of rounds) {
    const item = el("li");
    const button = el("button", "history-entry");
    const objective = round.outcome.updated_solution?.objective ?? null;
    const status = round.outcome.status === "done" ? formatObjective(objective) : "failed";
    button.textContent = `Round ${round.index}: ${status}`;
    button.addEventListener("click", () => onSelect(round));
    item.appendChild(button);
    list.appendChild(item);
  }
  return list;
}

const PHASES = ["WriterPatch", "SafeguardCheck", "Debug", "Solve", "Interpret"];

export function renderPhaseIndicator(active: string | null): HTMLElement {
  const bar = el("div", "phase-bar");
  for (const phase of PHASES) {
    const chip = el("span", phase === active ? "phase active" : "phase", phase);
    bar.appendChild(chip);
  }
  if (active === "Done" || active === "Failed") {
    bar.appendChild(el("span", `phase terminal ${active.toLowerCase()}`, active));
  }
  return bar;
}
