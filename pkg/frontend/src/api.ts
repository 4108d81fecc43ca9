import type { DesignDescriptor, Enrollment, SessionSummary, SessionView } from "./model.js";

/** HTTP failure with the server's detail text preserved for inline display. */
export class ApiError extends Error {
  status: number;

  constructor(status: number, detail: string) {
    super(detail);
    this.status = status;
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(base + path, init);
  if (!res.ok) {
    let detail = `HTTP ${res.status}`;
    try {
      const body = await res.json();
      if (body.detail) {
        detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
      }
    } catch {
      // non-JSON error body; keep the status line
    }
    throw new ApiError(res.status, detail);
  }
  return res.json() as Promise<T>;
}

function post<T>(base: string, path: string, body?: unknown): Promise<T> {
  return request<T>(base, path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: body === undefined ? undefined : JSON.stringify(body),
  });
}

export type CreateSessionBody = {
  design: DesignDescriptor;
  arms?: number;
  seed?: number;
  name?: string;
};

export function createSession(base: string, body: CreateSessionBody): Promise<SessionView> {
  return post<SessionView>(base, "/sessions", body);
}

export async function listSessions(base: string): Promise<SessionSummary[]> {
  const body = await request<{ sessions: SessionSummary[] }>(base, "/sessions");
  return body.sessions;
}

export function getSession(base: string, id: string): Promise<SessionView> {
  return request<SessionView>(base, `/sessions/${id}`);
}

export function enroll(base: string, id: string): Promise<Enrollment> {
  return post<Enrollment>(base, `/sessions/${id}/enroll`);
}

export function recordOutcome(
  base: string,
  id: string,
  subject: number,
  success: boolean,
): Promise<SessionView> {
  return post<SessionView>(base, `/sessions/${id}/subjects/${subject}/outcome`, { success });
}
