// Wire types for the proxy control API.

export interface ControlEvent {
  id: number;
  kind: string;
  timestamp: string;
  payload: Record<string, unknown>;
}

export interface PendingApproval {
  event_id: number;
  qualified: string;
  arguments: Record<string, unknown>;
  created: string;
  state: string;
}

export interface MetadataDiffPayload {
  qualified: string;
  before: ToolMetadata;
  after: ToolMetadata;
}

export interface ToolMetadata {
  name?: string;
  description?: string;
  inputSchema?: unknown;
}

export interface PinView {
  qualified: string;
  digest: string;
  first_seen: string;
  demoted: boolean;
  absent: boolean;
  diff?: { before: ToolMetadata; after: ToolMetadata };
}

export interface StateSnapshot {
  pending: PendingApproval[];
  pins: PinView[];
  cursor: number;
}

export type Decision = "approve" | "deny";
