/** Thin client for the kgforge JSON API. All state lives on the server. */

import type { EditRequest, SearchResponse, SessionPayload } from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;
  /** Pipeline stage for construction failures (500 payloads). */
  readonly stage: string | null;
  /** Current server revision for stale-edit conflicts (409 payloads). */
  readonly revision: number | null;

  constructor(
    status: number,
    message: string,
    stage: string | null = null,
    revision: number | null = null,
  ) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.stage = stage;
    this.revision = revision;
  }
}

async function raiseFor(response: Response): Promise<never> {
  let message = `${response.status}`;
  let stage: string | null = null;
  let revision: number | null = null;
  try {
    const body = await response.json();
    const detail = body && typeof body === "object" ? body.detail : null;
    if (typeof detail === "string") {
      message = detail;
    } else if (detail && typeof detail === "object") {
      if (typeof detail.message === "string") message = detail.message;
      if (typeof detail.stage === "string") stage = detail.stage;
      if (typeof detail.revision === "number") revision = detail.revision;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, message, stage, revision);
}

export class ApiClient {
  private readonly fetchFn: FetchLike;
  private readonly base: string;

  constructor(fetchFn?: FetchLike, base = "") {
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
    this.base = base;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) await raiseFor(response);
    return (await response.json()) as T;
  }

  construct(text: string): Promise<SessionPayload> {
    return this.json<SessionPayload>("/api/construct", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  getGraph(sessionId: string): Promise<SessionPayload> {
    return this.json<SessionPayload>(`/api/graph/${sessionId}`);
  }

  applyEdit(sessionId: string, edit: EditRequest): Promise<SessionPayload> {
    return this.json<SessionPayload>(`/api/graph/${sessionId}`, {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(edit),
    });
  }

  searchEntities(query: string): Promise<SearchResponse> {
    return this.json<SearchResponse>(
      `/api/entities?q=${encodeURIComponent(query)}`,
    );
  }

  searchProperties(query: string): Promise<SearchResponse> {
    return this.json<SearchResponse>(
      `/api/properties?q=${encodeURIComponent(query)}`,
    );
  }

  /** Raw N-Triples bytes; the server is the source of truth for the file. */
  async downloadNtriples(sessionId: string): Promise<string> {
    const response = await this.fetchFn(
      `${this.base}/api/graph/${sessionId}/ntriples`,
    );
    if (!response.ok) await raiseFor(response);
    return response.text();
  }
}
