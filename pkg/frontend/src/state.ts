/** Client-side session state: rounds, chaining, and the model panel. */

import type { OutcomePayload, SessionCreatePayload } from "./api.js";

export type Round = {
  index: number;
  query: string;
  outcome: OutcomePayload;
  /** the model source the round was asked against */
  baseSource: string;
};

export type ExplorerState = {
  sessionId: string | null;
  baseSource: string;
  /** source the next query builds on (last successful round's update) */
  currentSource: string;
  showBaseModel: boolean;
  inFlight: boolean;
  phase: string | null;
  rounds: Round[];
  error: string | null;
};

export function initialState(): ExplorerState {
  return {
    sessionId: null,
    baseSource: "",
    currentSource: "",
    showBaseModel: false,
    inFlight: false,
    phase: null,
    rounds: [],
    error: null,
  };
}

export function openSession(
  state: ExplorerState,
  modelSource: string,
  created: SessionCreatePayload,
): ExplorerState {
  return {
    ...initialState(),
    sessionId: created.session_id,
    baseSource: modelSource,
    currentSource: modelSource,
  };
}

export function beginQuery(state: ExplorerState): ExplorerState {
  return { ...state, inFlight: true, phase: null, error: null };
}

export function finishQuery(
  state: ExplorerState,
  query: string,
  outcome: OutcomePayload,
): ExplorerState {
  const round: Round = {
    index: state.rounds.length + 1,
    query,
    outcome,
    baseSource: state.currentSource,
  };
  const advanced =
    outcome.status === "done" && outcome.updated_source !== null
      ? outcome.updated_source
      : state.currentSource;
  return {
    ...state,
    inFlight: false,
    rounds: [...state.rounds, round],
    currentSource: advanced,
  };
}

export function failQuery(state: ExplorerState, message: string): ExplorerState {
  return { ...state, inFlight: false, error: message };
}

export function setPhase(state: ExplorerState, phase: string): ExplorerState {
  return { ...state, phase };
}

export function toggleBaseModel(state: ExplorerState): ExplorerState {
  return { ...state, showBaseModel: !state.showBaseModel };
}

/** What the model panel shows: the chained source, or the base on toggle. */
export function modelPanelSource(state: ExplorerState): string {
  return state.showBaseModel ? state.baseSource : state.currentSource;
}

export function canSubmit(state: ExplorerState, query: string): boolean {
  return state.sessionId !== null && !state.inFlight && query.trim().length > 0;
}
