export interface SearchResult {
  id: string;
  score: number;
  values?: number[];
  caption?: string;
}

export interface SearchResponse {
  results: SearchResult[];
  model_fingerprint: number;
  latency_ms: number;
}

export interface SignalDetail {
  id: string;
  values: number[];
  caption: string;
  labels: { trend: string; periodic: string; fluctuation: string };
}

export interface ResultCard {
  id: string;
  score: string; // pre-formatted to 4 decimals
  values: number[];
  caption: string;
  captionRevealed: boolean;
}

export interface QueryViewState {
  query: string;
  k: number;
  loading: boolean;
  results: ResultCard[];
  error: string | null;
  history: string[];
  detail: SignalDetail | null;
}
