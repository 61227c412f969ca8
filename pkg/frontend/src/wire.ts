/**
 * Wire types shared with the verification server (docs/wire-format.md) and
 * a client-side validator mirroring the server's sample contract, so a bad
 * body is caught before it leaves the browser. Runtime code is dependency
 * free; the test suite re-validates fixtures against the canonical JSON
 * Schema with an independent implementation.
 */

export interface WirePoint {
  t: number;
  x: number;
  y: number;
  p: number;
  pen: boolean;
}

export interface WireSample {
  device_id: string;
  points: WirePoint[];
}

export interface Progress {
  phase: "authorized" | "session1" | "await_session2" | "session2" | "enrolled";
  collected: number;
  remaining: number;
  enrolled: boolean;
}

export interface UserSummary {
  username: string;
  display_name: string;
  phase: string;
  last_success_at: number | null;
  consecutive_failures: number;
  blocked: boolean;
}

export interface TransactionRecord {
  seq: number;
  timestamp: number;
  username: string;
  kind: string;
  outcome: string;
  normalized_score: number | null;
  detail: string;
}

export interface SystemConfig {
  data_dir: string;
  log_path: string;
  max_failures: number;
  accept_threshold: number;
  update_rule: "none" | "replace_oldest";
  enroll_count: number;
  session_split: number;
  min_session_gap: number;
  bind_address: string;
  nonce_ttl: number;
  attended_enrollment: boolean;
}

export interface ApiError {
  error: string;
  detail: string;
}

/** Validate a sample against the wire contract; returns problems, [] when clean. */
export function sampleProblems(sample: WireSample): string[] {
  const problems: string[] = [];
  if (typeof sample.device_id !== "string") problems.push("device_id must be a string");
  if (!Array.isArray(sample.points)) return [...problems, "points must be an array"];
  let prevT = -1;
  let penDown = 0;
  sample.points.forEach((pt, i) => {
    if (!Number.isInteger(pt.t) || pt.t < 0) problems.push(`point ${i}: t must be an integer >= 0`);
    if (pt.t <= prevT) problems.push(`point ${i}: t not strictly increasing`);
    prevT = pt.t;
    for (const key of ["x", "y", "p"] as const) {
      if (typeof pt[key] !== "number" || !Number.isFinite(pt[key]))
        problems.push(`point ${i}: ${key} must be a finite number`);
    }
    if (pt.p < 0 || pt.p > 1) problems.push(`point ${i}: p out of [0,1]`);
    if (typeof pt.pen !== "boolean") problems.push(`point ${i}: pen must be boolean`);
    if (pt.pen) penDown += 1;
  });
  if (penDown < 2) problems.push("need at least 2 pen-down points");
  return problems;
}

/** Config invariants enforced client-side before PUT (mirrors the server). */
export function configProblems(cfg: Partial<SystemConfig>): string[] {
  const problems: string[] = [];
  if (cfg.max_failures !== undefined && (!Number.isInteger(cfg.max_failures) || cfg.max_failures < 1))
    problems.push("max_failures must be an integer >= 1");
  if (cfg.enroll_count !== undefined && (!Number.isInteger(cfg.enroll_count) || cfg.enroll_count < 2))
    problems.push("enroll_count must be an integer >= 2");
  if (cfg.session_split !== undefined) {
    const r = cfg.enroll_count;
    if (!Number.isInteger(cfg.session_split) || cfg.session_split < 1)
      problems.push("session_split must be an integer >= 1");
    else if (r !== undefined && cfg.session_split >= r)
      problems.push("session_split must be < enroll_count");
  }
  if (cfg.accept_threshold !== undefined && !(cfg.accept_threshold > 0))
    problems.push("accept_threshold must be > 0");
  if (cfg.update_rule !== undefined && !["none", "replace_oldest"].includes(cfg.update_rule))
    problems.push("update_rule must be none or replace_oldest");
  if (cfg.min_session_gap !== undefined && !(cfg.min_session_gap >= 0))
    problems.push("min_session_gap must be >= 0");
  if (cfg.nonce_ttl !== undefined && !(cfg.nonce_ttl > 0)) problems.push("nonce_ttl must be > 0");
  return problems;
}
