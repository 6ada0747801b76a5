// Pure state transitions: every event maps (state, payload) -> new state,
// so the whole query loop is snapshot-testable without a DOM.

import type { QueryViewState, ResultCard, SearchResponse, SignalDetail } from "./types.js";

export const HISTORY_LIMIT = 20;

export function initialState(): QueryViewState {
  return {
    query: "",
    k: 10,
    loading: false,
    results: [],
    error: null,
    history: [],
    detail: null,
  };
}

export function canSubmit(state: QueryViewState): boolean {
  return state.query.trim().length > 0;
}

export function setQuery(state: QueryViewState, query: string): QueryViewState {
  return { ...state, query };
}

export function setK(state: QueryViewState, k: number): QueryViewState {
  return { ...state, k: Math.min(100, Math.max(1, Math.floor(k))) };
}

export function submitStarted(state: QueryViewState): QueryViewState {
  const q = state.query.trim();
  const history = [q, ...state.history.filter((h) => h !== q)].slice(0, HISTORY_LIMIT);
  return { ...state, loading: true, error: null, history };
}

export function searchSucceeded(state: QueryViewState, response: SearchResponse): QueryViewState {
  // response order is the display order; the UI never re-sorts or filters
  const results: ResultCard[] = response.results.map((r) => ({
    id: r.id,
    score: r.score.toFixed(4),
    values: r.values ?? [],
    caption: r.caption ?? "",
    captionRevealed: false,
  }));
  return { ...state, loading: false, error: null, results };
}

export function searchFailed(state: QueryViewState, message: string): QueryViewState {
  // keep the previous results on screen so a failed refinement is recoverable
  return { ...state, loading: false, error: message };
}

export function toggleCaption(state: QueryViewState, id: string): QueryViewState {
  return {
    ...state,
    results: state.results.map((r) =>
      r.id === id ? { ...r, captionRevealed: !r.captionRevealed } : r
    ),
  };
}

export function detailOpened(state: QueryViewState, detail: SignalDetail): QueryViewState {
  return { ...state, detail };
}

export function detailClosed(state: QueryViewState): QueryViewState {
  return { ...state, detail: null };
}
