// Thin client for the search service. A newer search aborts the pending one,
// so at most one request is in flight.

import type { SearchResponse, SignalDetail } from "./types.js";

export type FetchLike = typeof fetch;

export class ApiClient {
  private inflight: AbortController | null = null;

  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args)
  ) {}

  async search(queryText: string, k: number): Promise<SearchResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const resp = await this.fetchFn(`${this.baseUrl}/api/search`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ query_text: queryText, k }),
        signal: controller.signal,
      });
      if (!resp.ok) {
        throw new Error(`search failed: HTTP ${resp.status}`);
      }
      return (await resp.json()) as SearchResponse;
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  async signal(id: string): Promise<SignalDetail> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/signal/${encodeURIComponent(id)}`);
    if (!resp.ok) {
      throw new Error(`signal lookup failed: HTTP ${resp.status}`);
    }
    return (await resp.json()) as SignalDetail;
  }
}

export function isAbortError(err: unknown): boolean {
  return err instanceof DOMException && err.name === "AbortError";
}
