/** Thin typed client over the session service; every call is one endpoint. */

import type {
  CreatedDoc,
  JournalRecord,
  SessionStateDoc,
  SolveResponseDoc,
  UpdateDoc,
  UpdateResponseDoc,
} from "./types.js";

export class ApiError extends Error {
  status: number;
  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

async function readJson(res: Response): Promise<any> {
  const text = await res.text();
  let data: any = null;
  try {
    data = text ? JSON.parse(text) : null;
  } catch {
    data = { raw: text };
  }
  if (!res.ok) {
    const message = data && data.error ? data.error : `HTTP ${res.status}`;
    throw new ApiError(res.status, message);
  }
  return data;
}

export class ApiClient {
  base: string;

  constructor(base: string) {
    this.base = base.replace(/\/+$/, "");
  }

  private async post(path: string, body: unknown): Promise<any> {
    const res = await fetch(`${this.base}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    return readJson(res);
  }

  private async get(path: string): Promise<Response> {
    return fetch(`${this.base}${path}`);
  }

  async createSession(problem: unknown): Promise<CreatedDoc> {
    return this.post("/sessions", { problem });
  }

  async getSession(id: string): Promise<SessionStateDoc> {
    return readJson(await this.get(`/sessions/${id}`));
  }

  async applyUpdate(id: string, update: UpdateDoc): Promise<UpdateResponseDoc> {
    return this.post(`/sessions/${id}/updates`, { update });
  }

  async solve(id: string, maxHorizon?: number): Promise<SolveResponseDoc> {
    const body = maxHorizon === undefined ? {} : { max_horizon: maxHorizon };
    return this.post(`/sessions/${id}/solve`, body);
  }

  async journal(id: string): Promise<JournalRecord[]> {
    const res = await this.get(`/sessions/${id}/journal`);
    if (!res.ok) {
      throw new ApiError(res.status, `HTTP ${res.status}`);
    }
    const text = await res.text();
    return text
      .split("\n")
      .filter((line) => line.trim().length > 0)
      .map((line) => JSON.parse(line) as JournalRecord);
  }
}
