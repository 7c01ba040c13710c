/** Console view state: the latest server snapshot plus transient banners.
 *
 * The state holds server responses verbatim. A failed request never mutates
 * the held snapshot (the banner is the only change), so the view always shows
 * numbers from the most recent successful response.
 */

import type { DrawPayload, HistoryPayload, SnapshotPayload } from "./types.js";

export interface Banner {
  kind: "conflict" | "network" | "validation";
  message: string;
}

export interface ConsoleState {
  snapshot: SnapshotPayload | null;
  history: HistoryPayload | null;
  lastDraw: DrawPayload | null;
  banner: Banner | null;
}

export function initialState(): ConsoleState {
  return { snapshot: null, history: null, lastDraw: null, banner: null };
}

export function withSnapshot(
  state: ConsoleState,
  snapshot: SnapshotPayload,
  history: HistoryPayload | null = null,
): ConsoleState {
  return { snapshot, history: history ?? state.history, lastDraw: state.lastDraw, banner: null };
}

export function withDraw(state: ConsoleState, draw: DrawPayload): ConsoleState {
  return { ...state, lastDraw: draw, banner: null };
}

export function withBanner(state: ConsoleState, banner: Banner): ConsoleState {
  return { ...state, banner };
}

/** Map an API failure to the banner the UI must show. */
export function bannerFor(status: number, code: string, message: string): Banner {
  if (status === 409) return { kind: "conflict", message };
  if (status === 0) return { kind: "network", message };
  return { kind: "validation", message };
}
