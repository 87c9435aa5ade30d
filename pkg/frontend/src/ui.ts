// DOM rendering. Decisions always require an explicit click; there is no
// keyboard default that approves.

import type { ConsoleSession } from "./api.js";
import { insertedText, wordDiff } from "./diff.js";
import type { ConsoleState, FeedEntry } from "./state.js";
import type { PinView } from "./types.js";

export function renderApp(root: HTMLElement, session: ConsoleSession): void {
  const render = (state: ConsoleState) => {
    root.replaceChildren(
      banner(state),
      section("Approval queue", approvalRows(state, session)),
      section("Pins", pinRows(state, session)),
      section("Collisions", feed(state.collisions)),
      section("Flagged results", feed(state.resultFlags)),
      section("Rejected dangling calls", feed(state.danglings)),
    );
  };
  session.onChange(render);
  render(session.state);
}

function banner(state: ConsoleState): HTMLElement {
  const div = el("div", state.connected ? "banner online" : "banner offline");
  div.textContent = state.connected
    ? `connected — cursor ${state.cursor}`
    : "offline — retrying…";
  return div;
}

function section(title: string, body: HTMLElement): HTMLElement {
  const wrap = el("section");
  const heading = el("h2");
  heading.textContent = title;
  wrap.append(heading, body);
  return wrap;
}

function approvalRows(state: ConsoleState, session: ConsoleSession): HTMLElement {
  const list = el("div", "approvals");
  if (state.pending.length === 0) {
    list.textContent = "nothing pending";
    return list;
  }
  for (const pending of state.pending) {
    const row = el("div", "approval-row");
    const label = el("code");
    label.textContent = `#${pending.event_id} ${pending.qualified} ${JSON.stringify(pending.arguments)}`;
    const approve = button("Approve", () => void session.decide(pending.event_id, "approve"));
    approve.classList.add("approve");
    const deny = button("Deny", () => void session.decide(pending.event_id, "deny"));
    deny.classList.add("deny");
    row.append(label, approve, deny);
    list.append(row);
  }
  return list;
}

function pinRows(state: ConsoleState, session: ConsoleSession): HTMLElement {
  const list = el("div", "pins");
  for (const pin of state.pins) {
    const row = el("div", pin.demoted ? "pin-row demoted" : "pin-row");
    const label = el("code");
    label.textContent = `${pin.qualified}${pin.absent ? " (absent)" : ""}`;
    row.append(label);
    if (pin.demoted) {
      row.append(badge("metadata changed"), diffView(pin), button("Re-pin", () => void session.repin(pin.qualified)));
    }
    list.append(row);
  }
  if (state.pins.length === 0) list.textContent = "no pins yet";
  return list;
}

function diffView(pin: PinView): HTMLElement {
  const wrap = el("div", "diff");
  const before = pin.diff?.before.description ?? "";
  const after = pin.diff?.after.description ?? "";
  for (const segment of wordDiff(before, after)) {
    const span = el("span", `seg ${segment.kind}`);
    span.textContent = segment.text + " ";
    wrap.append(span);
  }
  const inserted = insertedText(wordDiff(before, after));
  if (inserted) {
    wrap.title = `inserted: ${inserted}`;
  }
  return wrap;
}

function feed(entries: FeedEntry[]): HTMLElement {
  const list = el("ul", "feed");
  for (const entry of entries.slice(-50)) {
    const item = el("li");
    item.textContent = `[${entry.timestamp}] ${entry.summary}`;
    list.append(item);
  }
  if (entries.length === 0) {
    const item = el("li");
    item.textContent = "—";
    list.append(item);
  }
  return list;
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}

function button(label: string, onClick: () => void): HTMLButtonElement {
  const node = document.createElement("button");
  node.type = "button";
  node.textContent = label;
  node.addEventListener("click", onClick);
  return node;
}

function badge(text: string): HTMLElement {
  const node = el("span", "badge");
  node.textContent = text;
  return node;
}
