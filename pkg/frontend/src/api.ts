/**
 * Typed fetch client for the documented endpoints. Server error bodies
 * ({error, detail}) are surfaced verbatim as ServerError so every view can
 * show the stable error code. Credentials (temp password, admin token)
 * live in caller memory only, never in storage.
 */

import {
  ApiError,
  Progress,
  SystemConfig,
  TransactionRecord,
  UserSummary,
  WireSample,
} from "./wire.js";

export class ServerError extends Error {
  code: string;
  detail: string;
  status: number;

  constructor(status: number, body: ApiError) {
    super(`${body.error}: ${body.detail || ""}`);
    this.code = body.error;
    this.detail = body.detail || "";
    this.status = status;
  }
}

async function request<T>(
  base: string,
  method: string,
  path: string,
  body?: unknown,
  adminToken?: string,
): Promise<T> {
  const headers: Record<string, string> = {};
  if (body !== undefined) headers["Content-Type"] = "application/json";
  if (adminToken) headers["X-Admin-Token"] = adminToken;
  const response = await fetch(base + path, {
    method,
    headers,
    body: body === undefined ? undefined : JSON.stringify(body),
  });
  const text = await response.text();
  let parsed: unknown;
  try {
    parsed = text ? JSON.parse(text) : {};
  } catch {
    throw new ServerError(response.status, { error: "BadResponse", detail: text.slice(0, 120) });
  }
  if (!response.ok) {
    const err = parsed as ApiError;
    throw new ServerError(response.status, {
      error: err.error ?? `HTTP${response.status}`,
      detail: err.detail ?? "",
    });
  }
  return parsed as T;
}

export class ApiClient {
  constructor(public base: string = "") {}

  challenge(username: string): Promise<{ nonce: string; expires_at: number }> {
    return request(this.base, "POST", "/api/v1/challenge", { username });
  }

  enrollStatus(username: string): Promise<Progress> {
    return request(this.base, "GET", `/api/v1/enroll/status?username=${encodeURIComponent(username)}`);
  }

  enroll(username: string, tempPassword: string, sample: WireSample, nonce: string): Promise<Progress> {
    return request(this.base, "POST", "/api/v1/enroll", {
      username,
      temp_password: tempPassword,
      sample,
      nonce,
    });
  }

  verify(username: string, sample: WireSample, nonce: string): Promise<{ accepted: boolean; score: number }> {
    return request(this.base, "POST", "/api/v1/verify", { username, sample, nonce });
  }

  // -- admin --

  authorize(token: string, username: string, displayName = ""): Promise<{ username: string; temp_password: string }> {
    return request(this.base, "POST", "/api/v1/admin/authorize", { username, display_name: displayName }, token);
  }

  users(token: string): Promise<{ users: UserSummary[] }> {
    return request(this.base, "GET", "/api/v1/admin/users", undefined, token);
  }

  unblock(token: string, username: string): Promise<{ user: UserSummary }> {
    return request(this.base, "POST", "/api/v1/admin/unblock", { username }, token);
  }

  getConfig(token: string): Promise<SystemConfig> {
    return request(this.base, "GET", "/api/v1/admin/config", undefined, token);
  }

  putConfig(token: string, delta: Partial<SystemConfig>): Promise<SystemConfig> {
    return request(this.base, "PUT", "/api/v1/admin/config", delta, token);
  }

  transactions(token: string, last = 50): Promise<{ transactions: TransactionRecord[] }> {
    return request(this.base, "GET", `/api/v1/admin/transactions?last=${last}`, undefined, token);
  }
}
