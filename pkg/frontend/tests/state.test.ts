import { describe, expect, it } from "vitest";

import created from "../fixtures/session_create.json";
import outcome from "../fixtures/outcome_q5.json";
import record from "../fixtures/session_record.json";
import type { OutcomePayload, SessionCreatePayload } from "../src/api.js";
import * as state from "../src/state.js";

const q5 = outcome as unknown as OutcomePayload;
const base = record.base_source as string;

function opened() {
  return state.openSession(
    state.initialState(),
    base,
    created as SessionCreatePayload,
  );
}

describe("session state", () => {
  it("opens with the base model in the panel", () => {
    const s = opened();
    expect(s.sessionId).toBe("fixture-session");
    expect(state.modelPanelSource(s)).toBe(base);
    expect(s.rounds).toHaveLength(0);
  });

  it("cannot submit while a query is in flight", () => {
    let s = opened();
    expect(state.canSubmit(s, "what if?")).toBe(true);
    s = state.beginQuery(s);
    expect(state.canSubmit(s, "what if?")).toBe(false);
  });

  it("empty queries are rejected client-side", () => {
    const s = opened();
    expect(state.canSubmit(s, "   ")).toBe(false);
  });

  it("a successful round advances the model panel to the updated source", () => {
    let s = state.beginQuery(opened());
    s = state.finishQuery(s, q5.query, q5);
    expect(s.inFlight).toBe(false);
    expect(state.modelPanelSource(s)).toBe(q5.updated_source);
    expect(state.modelPanelSource(s)).toContain("MaxTypeA");
  });

  it("the revert toggle restores the base source without losing the update", () => {
    let s = state.finishQuery(state.beginQuery(opened()), q5.query, q5);
    s = state.toggleBaseModel(s);
    expect(state.modelPanelSource(s)).toBe(base);
    s = state.toggleBaseModel(s);
    expect(state.modelPanelSource(s)).toBe(q5.updated_source);
  });

  it("history preserves all rounds in order", () => {
    let s = state.finishQuery(state.beginQuery(opened()), "first", q5);
    const failed: OutcomePayload = { ...q5, status: "failed", updated_source: null };
    s = state.finishQuery(state.beginQuery(s), "second", failed);
    expect(s.rounds.map((round) => round.index)).toEqual([1, 2]);
    expect(s.rounds[0].query).toBe("first");
    // a failed round does not advance the model
    expect(state.modelPanelSource(s)).toBe(q5.updated_source);
  });

  it("errors surface inline and clear on the next attempt", () => {
    let s = state.failQuery(state.beginQuery(opened()), "request failed (409)");
    expect(s.error).toContain("409");
    expect(s.inFlight).toBe(false);
    s = state.beginQuery(s);
    expect(s.error).toBeNull();
  });
});
