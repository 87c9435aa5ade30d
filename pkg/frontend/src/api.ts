// ConsoleSession: live connection to a proxy control endpoint.
//
// On connect it fetches /state, then applies the event stream incrementally;
// a dropped stream reconnects with the cursor so no row is lost or
// duplicated. All mutating actions are fire-and-acknowledge against
// idempotent endpoints.

import { applyEvent, clearPinDemotion, ConsoleState, initialState, removePending, seedFromSnapshot } from "./state.js";
import { parseSseStream } from "./sse.js";
import type { ControlEvent, Decision, StateSnapshot } from "./types.js";

export type StateListener = (state: ConsoleState) => void;

const INITIAL_BACKOFF_MS = 200;
const MAX_BACKOFF_MS = 5000;

export class ConsoleSession {
  readonly endpoint: string;
  state: ConsoleState = initialState();

  private listeners: StateListener[] = [];
  private stopped = false;
  private abort: AbortController | null = null;
  private backoff = INITIAL_BACKOFF_MS;

  constructor(endpoint: string) {
    this.endpoint = endpoint.replace(/\/$/, "");
  }

  onChange(listener: StateListener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private setState(state: ConsoleState): void {
    this.state = state;
    this.emit();
  }

  connect(): void {
    this.stopped = false;
    void this.runLoop();
  }

  close(): void {
    this.stopped = true;
    this.abort?.abort();
  }

  private async runLoop(): Promise<void> {
    while (!this.stopped) {
      try {
        const snapshot = await this.fetchSnapshot();
        // resume from whichever cursor is further along: the snapshot's, or
        // the one we already applied before the drop
        const cursor = Math.max(this.state.cursor, snapshot.cursor);
        let seeded = seedFromSnapshot(this.state, snapshot);
        seeded = { ...seeded, cursor, connected: true };
        this.setState(seeded);
        this.backoff = INITIAL_BACKOFF_MS;
        await this.consumeEvents(cursor);
      } catch {
        // fall through to the offline path below
      }
      if (this.stopped) return;
      if (this.state.connected) {
        this.setState({ ...this.state, connected: false });
      }
      await sleep(this.backoff);
      this.backoff = Math.min(this.backoff * 2, MAX_BACKOFF_MS);
    }
  }

  private async fetchSnapshot(): Promise<StateSnapshot> {
    const resp = await fetch(`${this.endpoint}/state`);
    if (!resp.ok) throw new Error(`state fetch failed: ${resp.status}`);
    return (await resp.json()) as StateSnapshot;
  }

  private async consumeEvents(cursor: number): Promise<void> {
    this.abort = new AbortController();
    const resp = await fetch(`${this.endpoint}/events?cursor=${cursor}`, {
      signal: this.abort.signal,
      headers: { Accept: "text/event-stream" },
    });
    if (!resp.ok || !resp.body) throw new Error(`event stream failed: ${resp.status}`);
    for await (const frame of parseSseStream(resp.body)) {
      const event = JSON.parse(frame.data) as ControlEvent;
      this.setState(applyEvent(this.state, event));
      if (this.stopped) return;
    }
    throw new Error("event stream ended");
  }

  // -- operator actions -----------------------------------------------------

  async decide(eventId: number, decision: Decision): Promise<void> {
    const resp = await fetch(`${this.endpoint}/approvals/${eventId}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ decision }),
    });
    if (resp.status === 404) {
      // stale entry: the proxy no longer knows this id; drop the row
      this.setState(removePending(this.state, eventId));
      return;
    }
    if (!resp.ok) throw new Error(`decision failed: ${resp.status}`);
    // row removal arrives via the approval_resolved event; removing here too
    // keeps the UI snappy and stays idempotent
    this.setState(removePending(this.state, eventId));
  }

  async repin(qualified: string): Promise<void> {
    const resp = await fetch(`${this.endpoint}/pins/repin`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ qualified }),
    });
    if (!resp.ok) throw new Error(`re-pin failed: ${resp.status}`);
    this.setState(clearPinDemotion(this.state, qualified));
  }

  async refresh(trigger = "on_reenable"): Promise<void> {
    const resp = await fetch(`${this.endpoint}/refresh`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ trigger }),
    });
    if (!resp.ok) throw new Error(`refresh failed: ${resp.status}`);
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
