// Thin session API client over an injectable transport, so tests can run
// against a faked server.

import type { SessionView, Split } from './types.js';

export interface TransportResponse {
  status: number;
  body: unknown;
}

export interface Transport {
  request(method: string, path: string, body?: unknown): Promise<TransportResponse>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(detail);
  }
}

export class HttpTransport implements Transport {
  constructor(private readonly base: string = '') {}

  async request(method: string, path: string, body?: unknown): Promise<TransportResponse> {
    const response = await fetch(this.base + path, {
      method,
      headers: body === undefined ? undefined : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let parsed: unknown = null;
    try {
      parsed = await response.json();
    } catch {
      parsed = null;
    }
    return { status: response.status, body: parsed };
  }
}

function unwrap(response: TransportResponse): SessionView {
  if (response.status >= 400) {
    const detail =
      typeof response.body === 'object' && response.body !== null && 'detail' in response.body
        ? String((response.body as { detail: unknown }).detail)
        : `request failed with status ${response.status}`;
    throw new ApiError(response.status, detail);
  }
  return response.body as SessionView;
}

export class SessionApi {
  constructor(private readonly transport: Transport) {}

  async create(nfaText: string, m: number): Promise<SessionView> {
    return unwrap(await this.transport.request('POST', '/api/sessions', { nfa: nfaText, m }));
  }

  async get(id: string): Promise<SessionView> {
    return unwrap(await this.transport.request('GET', `/api/sessions/${id}`));
  }

  async move(id: string, split: Split): Promise<SessionView> {
    return unwrap(await this.transport.request('POST', `/api/sessions/${id}/move`, { split }));
  }

  async undo(id: string): Promise<SessionView> {
    return unwrap(await this.transport.request('POST', `/api/sessions/${id}/undo`));
  }
}
