/**
 * Typed client for the authentication service's /v1 endpoints.
 *
 * The two failure channels stay distinct so the UI can render them
 * differently: NetworkError means the service was unreachable, ApiError
 * carries the HTTP status plus the service's machine-readable error body
 * ({"error": code, "detail": text, "reason"?: text}).
 */

import type { SessionDocument } from "./session";

export interface RiskThresholds {
  t1: number;
  t2: number;
}

export interface RiskReport {
  global_pass: boolean;
  degree: string;
  recluster_k: number;
  context_cluster: number | null;
  distance: number | null;
  thresholds: RiskThresholds | null;
}

export type ChallengeKind = "otp" | "oob";

export interface ChallengeRef {
  id: string;
  kind: ChallengeKind;
}

export type AttemptResult =
  | { outcome: "granted"; risk: RiskReport }
  | { outcome: "challenge"; challenge: ChallengeRef; risk: RiskReport };

export class NetworkError extends Error {
  constructor(message = "could not reach the authentication service") {
    super(message);
    this.name = "NetworkError";
  }
}

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: string;
  readonly reason?: string;

  constructor(status: number, code: string, detail: string, reason?: string) {
    super(`${code}: ${detail}`);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.detail = detail;
    this.reason = reason;
  }
}

/** The subset of the client the UI depends on; stubbed in tests. */
export interface AuthClient {
  usernameExists(username: string): Promise<boolean>;
  submitAttempt(doc: SessionDocument): Promise<AttemptResult>;
  answerOtp(challengeId: string, code: string): Promise<void>;
  approveOob(challengeId: string, token: string): Promise<void>;
  enroll(username: string, password: string, sessions: SessionDocument[]): Promise<number>;
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class AuthApi implements AuthClient {
  private readonly baseUrl: string;
  private readonly fetchFn: FetchLike;

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async post(path: string, body: unknown): Promise<any> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(body),
      });
    } catch {
      throw new NetworkError();
    }
    let payload: any = null;
    try {
      payload = await response.json();
    } catch {
      payload = null;
    }
    if (!response.ok) {
      const code = payload?.error ?? `http-${response.status}`;
      const detail = payload?.detail ?? `request failed with status ${response.status}`;
      throw new ApiError(response.status, code, detail, payload?.reason);
    }
    return payload;
  }

  async usernameExists(username: string): Promise<boolean> {
    const payload = await this.post("/v1/login/username", { username });
    return payload?.exists === true;
  }

  async submitAttempt(doc: SessionDocument): Promise<AttemptResult> {
    return (await this.post("/v1/login/attempt", doc)) as AttemptResult;
  }

  async answerOtp(challengeId: string, code: string): Promise<void> {
    await this.post(`/v1/challenge/${encodeURIComponent(challengeId)}/otp`, { code });
  }

  async approveOob(challengeId: string, token: string): Promise<void> {
    await this.post(`/v1/challenge/${encodeURIComponent(challengeId)}/oob`, { token });
  }

  async enroll(
    username: string,
    password: string,
    sessions: SessionDocument[],
  ): Promise<number> {
    const payload = await this.post("/v1/enroll", { username, password, sessions });
    return Number(payload?.trained ?? 0);
  }
}
