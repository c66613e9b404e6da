// Thin typed client over the engine service. The fetch implementation is
// injectable so tests can replay recorded payloads without a server.

import type {
  EventsPayload,
  MemoryPayload,
  QueryResponse,
  SessionInfo,
  TracePayload,
  TurnResponse,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = 'ApiError';
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = '',
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { 'Content-Type': 'application/json' } };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      const detail = await resp.text().catch(() => '');
      throw new ApiError(resp.status, `${method} ${path} failed (${resp.status}): ${detail}`);
    }
    return (await resp.json()) as T;
  }

  createSession(sessionId?: string, config: Record<string, unknown> = {}): Promise<SessionInfo> {
    return this.request('POST', '/sessions', { session_id: sessionId ?? null, config });
  }

  listSessions(): Promise<{ sessions: string[] }> {
    return this.request('GET', '/sessions');
  }

  postTurn(sessionId: string, userText: string, assistantText = ''): Promise<TurnResponse> {
    return this.request('POST', `/sessions/${sessionId}/turns`, {
      user_text: userText,
      assistant_text: assistantText,
    });
  }

  postQuery(sessionId: string, text: string): Promise<QueryResponse> {
    return this.request('POST', `/sessions/${sessionId}/queries`, { text });
  }

  getMemory(sessionId: string): Promise<MemoryPayload> {
    return this.request('GET', `/sessions/${sessionId}/memory`);
  }

  getEvents(sessionId: string): Promise<EventsPayload> {
    return this.request('GET', `/sessions/${sessionId}/events`);
  }

  getTrace(sessionId: string, traceId: string): Promise<TracePayload> {
    return this.request('GET', `/sessions/${sessionId}/traces/${traceId}`);
  }
}
