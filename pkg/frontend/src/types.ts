// Payload shapes returned by the engine service HTTP API.

export type MemoryKind = 'short_term' | 'long_term' | 'unclassified';

export interface MemoryItem {
  concept_id: string;
  text: string;
  kind: MemoryKind;
  seq: number;
  item_no: number;
  image_ref?: string;
}

export interface MemoryPayload {
  session_id: string;
  tau: number;
  dynamic: MemoryItem[];
  static: MemoryItem[];
}

export interface OpDoc {
  concept_id: string;
  op: 'add' | 'modify' | 'remove';
  memory?: string;
  target_id?: number;
}

export interface PlanDoc {
  dynamic_ops: OpDoc[];
  static_ops: OpDoc[];
}

export interface EvictedDoc {
  concept_id: string;
  text: string;
  kind: MemoryKind;
  seq: number;
}

export interface IngestRecord {
  step: number;
  kind: string;
  turn_id: number;
  status: string;
  ops: OpDoc[];
  plan: PlanDoc | null;
  evicted: EvictedDoc[];
  forced_transition?: PlanDoc;
  kinds?: [number, MemoryKind][];
  degradations?: string[];
  reason?: string;
}

export interface EventsPayload {
  session_id: string;
  events: IngestRecord[];
}

export interface TraceEvent {
  step: number;
  name: string;
  [key: string]: unknown;
}

export interface TraceContext {
  concept_id: string;
  bullets: string[];
  degraded: boolean;
}

export interface TracePayload {
  trace_id: string;
  session_id: string;
  query: { text: string; has_image: boolean };
  events: TraceEvent[];
  crops: number;
  resolved: string[];
  selected: unknown[];
  contexts: TraceContext[];
  degradations: string[];
  answer?: string;
}

export interface TurnResponse {
  turn_id: number;
  events: IngestRecord;
}

export interface QueryResponse {
  answer: string;
  trace_id: string;
  trace: TracePayload;
}

export interface SessionInfo {
  session_id: string;
  config: Record<string, unknown>;
}

export interface ChatMessage {
  role: 'user' | 'assistant';
  text: string;
  traceId?: string;
}
