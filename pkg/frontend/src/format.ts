/**
 * Timestamp rendering. Agent-phase messages only carry an iteration
 * index, so they render as relative "Xh ago" values: the newest
 * iteration on the platform reads as one hour old, each earlier
 * iteration one hour more. Participant messages carry wall-clock
 * seconds and render as just-now/minutes.
 */

import type { FeedComment } from "./api.js";

export function iterationHoursAgo(
  createdIteration: number,
  latestIteration: number,
): string {
  const hours = Math.max(1, latestIteration - createdIteration + 1);
  return `${hours}h ago`;
}

export function wallClockAgo(createdAt: number, nowSeconds: number): string {
  const elapsed = Math.max(0, nowSeconds - createdAt);
  if (elapsed < 60) return "just now";
  return `${Math.floor(elapsed / 60)}m ago`;
}

export function messageTimestamp(
  message: Pick<FeedComment, "created_iteration" | "created_at">,
  latestIteration: number,
  nowSeconds: number,
): string {
  if (message.created_iteration !== null && message.created_iteration !== undefined) {
    return iterationHoursAgo(message.created_iteration, latestIteration);
  }
  if (message.created_at !== null && message.created_at !== undefined) {
    return wallClockAgo(message.created_at, nowSeconds);
  }
  return "";
}

export function formatTimer(remainingSeconds: number): string {
  const clamped = Math.max(0, Math.ceil(remainingSeconds));
  const minutes = Math.floor(clamped / 60);
  const seconds = clamped % 60;
  return `${minutes}:${seconds.toString().padStart(2, "0")}`;
}
