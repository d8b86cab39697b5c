/** Wiring for the three-column explorer page. */

import { ApiError, createClient } from "./api.js";
import {
  renderHistory,
  renderModelPanel,
  renderPhaseIndicator,
  renderRound,
} from "./render.js";
import { watchPhases } from "./sse.js";
import * as state from "./state.js";

const client = createClient("");
let current = state.initialState();
let stopWatching: (() => void) | null = null;

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function redraw(selected?: state.Round) {
  const modelPanel = byId<HTMLElement>("model-panel");
  modelPanel.replaceChildren(renderModelPanel(state.modelPanelSource(current)));
  byId<HTMLElement>("model-toggle-label").textContent = current.showBaseModel
    ? "showing base model"
    : "showing current model";

  const phasePanel = byId<HTMLElement>("phase-panel");
  phasePanel.replaceChildren(renderPhaseIndicator(current.phase));

  const detail = byId<HTMLElement>("round-panel");
  const round = selected ?? current.rounds[current.rounds.length - 1];
  detail.replaceChildren(round ? renderRound(round) : document.createTextNode(""));

  const history = byId<HTMLElement>("history-panel");
  history.replaceChildren(renderHistory(current.rounds, (r) => redraw(r)));

  const error = byId<HTMLElement>("error-panel");
  error.textContent = current.error ?? "";

  const input = byId<HTMLTextAreaElement>("query-input");
  const submit = byId<HTMLButtonElement>("query-submit");
  input.disabled = current.inFlight || current.sessionId === null;
  submit.disabled = !state.canSubmit(current, input.value);
}

async function openSession() {
  const source = byId<HTMLTextAreaElement>("model-input").value;
  try {
    const created = await client.createSession(source);
    current = state.openSession(current, source, created);
    stopWatching?.();
    stopWatching = watchPhases("", created.session_id, (event) => {
      current = state.setPhase(current, event.phase);
      redraw();
    });
    byId<HTMLElement>("base-objective").textContent = String(
      created.base_solution.objective ?? created.base_solution.status,
    );
  } catch (err) {
    current = state.failQuery(current, describe(err));
  }
  redraw();
}

async function submitQuery() {
  const input = byId<HTMLTextAreaElement>("query-input");
  const query = input.value.trim();
  const sessionId = current.sessionId;
  if (!state.canSubmit(current, query) || sessionId === null) return;
  current = state.beginQuery(current);
  redraw();
  try {
    const outcome = await client.submitQuery(sessionId, query);
    current = state.finishQuery(current, query, outcome);
    input.value = "";
  } catch (err) {
    current = state.failQuery(current, describe(err));
  }
  redraw();
}

function describe(err: unknown): string {
  if (err instanceof ApiError) {
    return `request failed (${err.status}): ${JSON.stringify(err.detail)}`;
  }
  return String(err);
}

export function boot() {
  byId<HTMLButtonElement>("session-open").addEventListener("click", openSession);
  byId<HTMLButtonElement>("query-submit").addEventListener("click", submitQuery);
  byId<HTMLInputElement>("model-toggle").addEventListener("change", () => {
    current = state.toggleBaseModel(current);
    redraw();
  });
  byId<HTMLTextAreaElement>("query-input").addEventListener("input", () => redraw());
  redraw();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
