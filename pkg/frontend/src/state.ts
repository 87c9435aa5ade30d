// Console state as a pure fold over (initial snapshot, event sequence).
// Replaying the same sequence always yields identical state; events at or
// below the cursor are ignored so reconnect replays cannot duplicate rows.

import type { ControlEvent, MetadataDiffPayload, PendingApproval, PinView, StateSnapshot } from "./types.js";

export interface FeedEntry {
  id: number;
  kind: string;
  timestamp: string;
  summary: string;
  payload: Record<string, unknown>;
}

export interface ConsoleState {
  connected: boolean;
  cursor: number;
  pending: PendingApproval[];
  pins: PinView[];
  collisions: FeedEntry[];
  resultFlags: FeedEntry[];
  danglings: FeedEntry[];
}

export function initialState(): ConsoleState {
  return {
    connected: false,
    cursor: 0,
    pending: [],
    pins: [],
    collisions: [],
    resultFlags: [],
    danglings: [],
  };
}

export function seedFromSnapshot(state: ConsoleState, snapshot: StateSnapshot): ConsoleState {
  return {
    ...state,
    cursor: snapshot.cursor,
    pending: [...snapshot.pending],
    pins: [...snapshot.pins],
  };
}

function feedEntry(event: ControlEvent, summary: string): FeedEntry {
  return {
    id: event.id,
    kind: event.kind,
    timestamp: event.timestamp,
    summary,
    payload: event.payload,
  };
}

export function applyEvent(state: ConsoleState, event: ControlEvent): ConsoleState {
  if (event.id <= state.cursor) {
    return state; // already applied (cursor idempotence)
  }
  const next: ConsoleState = { ...state, cursor: event.id };

  switch (event.kind) {
    case "pending_approval": {
      const row: PendingApproval = {
        event_id: event.id,
        qualified: String(event.payload.qualified ?? ""),
        arguments: (event.payload.arguments as Record<string, unknown>) ?? {},
        created: event.timestamp,
        state: "pending",
      };
      if (!next.pending.some((p) => p.event_id === row.event_id)) {
        next.pending = [...next.pending, row];
      }
      return next;
    }
    case "approval_resolved": {
      const resolved = Number(event.payload.event_id);
      next.pending = next.pending.filter((p) => p.event_id !== resolved);
      return next;
    }
    case "metadata_diff": {
      const payload = event.payload as unknown as MetadataDiffPayload;
      const existing = next.pins.find((p) => p.qualified === payload.qualified);
      const updated: PinView = existing
        ? { ...existing, demoted: true, diff: { before: payload.before, after: payload.after } }
        : {
            qualified: payload.qualified,
            digest: "",
            first_seen: event.timestamp,
            demoted: true,
            absent: false,
            diff: { before: payload.before, after: payload.after },
          };
      next.pins = [...next.pins.filter((p) => p.qualified !== payload.qualified), updated].sort((a, b) =>
        a.qualified.localeCompare(b.qualified),
      );
      return next;
    }
    case "collision_warning": {
      const servers = (event.payload.servers as string[]) ?? [];
      next.collisions = [
        ...next.collisions,
        feedEntry(event, `tool "${event.payload.tool_name}" offered by: ${servers.join(", ")}`),
      ];
      return next;
    }
    case "result_flagged": {
      next.resultFlags = [
        ...next.resultFlags,
        feedEntry(event, `instruction-like result from ${event.payload.qualified}`),
      ];
      return next;
    }
    case "dangling_rejected": {
      next.danglings = [
        ...next.danglings,
        feedEntry(event, `rejected dangling call to ${event.payload.name}`),
      ];
      return next;
    }
    default:
      return next;
  }
}

export function replay(snapshot: StateSnapshot, events: ControlEvent[]): ConsoleState {
  let state = seedFromSnapshot(initialState(), snapshot);
  for (const event of events) {
    state = applyEvent(state, event);
  }
  return state;
}

export function clearPinDemotion(state: ConsoleState, qualified: string): ConsoleState {
  return {
    ...state,
    pins: state.pins.map((p) =>
      p.qualified === qualified ? { ...p, demoted: false, diff: undefined } : p,
    ),
  };
}

export function removePending(state: ConsoleState, eventId: number): ConsoleState {
  return { ...state, pending: state.pending.filter((p) => p.event_id !== eventId) };
}
