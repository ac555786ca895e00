// Poll a submitted tool run until it settles, then summarize the
// post-run verification for the badge.

import type { ApiClient } from "./api.js";
import type { RunRecordJson } from "./types.js";

export interface PollOptions {
  intervalMs?: number;
  maxAttempts?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export async function pollRun(
  api: Pick<ApiClient, "getRun">,
  runId: string,
  options: PollOptions = {},
): Promise<RunRecordJson> {
  const intervalMs = options.intervalMs ?? 1000;
  const maxAttempts = options.maxAttempts ?? 600;
  const sleep = options.sleep ?? defaultSleep;
  let record = await api.getRun(runId);
  for (let attempt = 0; record.status === "running" && attempt < maxAttempts; attempt++) {
    await sleep(intervalMs);
    record = await api.getRun(runId);
  }
  return record;
}

export type VerificationBadge = "ok" | "mismatch" | "unknown";

export function verificationBadge(record: RunRecordJson): VerificationBadge {
  const verification = record.result?.post_verification;
  if (!verification) return "unknown";
  return verification.ok ? "ok" : "mismatch";
}
