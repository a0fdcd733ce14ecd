// Typed client for the /v1 HTTP API plus the resumable event stream.
// The console performs no reasoning of its own: everything it shows comes
// from these endpoints and the WebSocket feed.

export interface ParamRecord {
  key: string;
  flavor: 'required' | 'optional' | 'inferred';
  element?: string;
  type?: string;
  default?: unknown;
}

export interface ConditionRecord {
  kind: string;
  name: string;
  predicate?: string;
  property?: string;
  subject?: string;
  object?: string;
  param?: string;
  op?: string;
  value?: unknown;
  desired: boolean;
}

export interface SkillRecord {
  name: string;
  manager: string;
  robot: string;
  params: ParamRecord[];
  pre: ConditionRecord[];
  hold: ConditionRecord[];
  post: ConditionRecord[];
  implementations: string[];
}

export interface PoseRecord {
  position: number[];
  orientation: number[];
}

export interface ElementRecord {
  id: string;
  type: string;
  label: string;
  properties: Record<string, unknown[]>;
  pose: PoseRecord | null;
  parent: string | null;
}

export interface RelationRecord {
  subject: string;
  predicate: string;
  object: string;
}

export interface WmRecord {
  version: number;
  elements: ElementRecord[];
  relations: RelationRecord[];
}

export interface TreeDump {
  kind: string;
  name: string;
  state: string | null;
  message: string;
  failure_code: string | null;
  children: TreeDump[];
}

export interface TaskRecord {
  id: string;
  skill: string;
  implementation: string;
  params: Record<string, unknown>;
  state: string;
  message: string;
  failure_code: string | null;
  ticks: number;
  tree?: TreeDump;
}

export interface MissionStepRecord {
  index: number;
  skill: string;
  args: string[];
  bindings: Record<string, string>;
  manager: string | null;
  task: string | null;
  state: string;
}

export interface MissionRecord {
  id: string;
  goal: string;
  state: string;
  steps: MissionStepRecord[];
  replans: number;
  detail: string;
  events?: Record<string, unknown>[];
}

export interface ApiEvent {
  seq: number;
  type: 'wm' | 'task' | 'mission';
  manager?: string;
  event: Record<string, any>;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail: string;
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly body: ApiErrorBody) {
    super(body.message);
  }
}

async function unwrap<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let body: ApiErrorBody;
    try {
      body = (await response.json()) as ApiErrorBody;
    } catch {
      body = { code: 'http_error', message: response.statusText, detail: '' };
    }
    throw new ApiError(response.status, body);
  }
  if (response.status === 204) {
    return undefined as T;
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(readonly base: string = '') {}

  private url(path: string): string {
    return this.base + path;
  }

  private get<T>(path: string): Promise<T> {
    return fetch(this.url(path)).then((r) => unwrap<T>(r));
  }

  private send<T>(method: string, path: string, body?: unknown): Promise<T> {
    return fetch(this.url(path), {
      method,
      headers: body === undefined ? {} : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    }).then((r) => unwrap<T>(r));
  }

  skills(): Promise<SkillRecord[]> {
    return this.get('/v1/skills');
  }

  wm(): Promise<WmRecord> {
    return this.get('/v1/wm');
  }

  instancesOf(concept: string): Promise<string[]> {
    return this.get(`/v1/wm/instances?concept=${encodeURIComponent(concept)}`);
  }

  addElement(record: Partial<ElementRecord>): Promise<ElementRecord> {
    return this.send('POST', '/v1/wm/elements', record);
  }

  patchElement(id: string, patch: Partial<ElementRecord>): Promise<ElementRecord> {
    return this.send('PATCH', `/v1/wm/elements/${encodeURIComponent(id)}`, patch);
  }

  deleteElement(id: string, recursive = false): Promise<void> {
    const suffix = recursive ? '?recursive=true' : '';
    return this.send('DELETE', `/v1/wm/elements/${encodeURIComponent(id)}${suffix}`);
  }

  setRelation(subject: string, predicate: string, object: string, state = true):
      Promise<{ version: number }> {
    return this.send('PUT', '/v1/wm/relations', { subject, predicate, object, state });
  }

  startTask(skill: string, params: Record<string, unknown>,
            implementation?: string): Promise<TaskRecord> {
    const body: Record<string, unknown> = { skill, params };
    if (implementation) {
      body.implementation = implementation;
    }
    return this.send('POST', '/v1/tasks', body);
  }

  task(id: string): Promise<TaskRecord> {
    return this.get(`/v1/tasks/${encodeURIComponent(id)}`);
  }

  tasks(): Promise<TaskRecord[]> {
    return this.get('/v1/tasks');
  }

  stopTask(id: string): Promise<TaskRecord> {
    return this.send('DELETE', `/v1/tasks/${encodeURIComponent(id)}`);
  }

  submitMission(goal: string): Promise<MissionRecord> {
    return this.send('POST', '/v1/missions', { goal });
  }

  mission(id: string): Promise<MissionRecord> {
    return this.get(`/v1/missions/${encodeURIComponent(id)}`);
  }

  missions(): Promise<MissionRecord[]> {
    return this.get('/v1/missions');
  }

  eventHistory(from: number): Promise<ApiEvent[]> {
    return this.get(`/v1/events/history?from=${from}`);
  }
}

// Minimal WebSocket surface so tests can plug in the `ws` package.
export interface SocketLike {
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

/**
 * Resumable event stream: reconnects with the last seen sequence number so
 * nothing is lost within the server's history horizon. Events are handed
 * to the sink strictly in sequence order.
 */
export class EventStream {
  lastSeq = -1;
  private socket: SocketLike | null = null;
  private closed = false;
  private retryMs: number;

  constructor(
    private readonly wsUrl: string,
    private readonly makeSocket: SocketFactory,
    private readonly sink: (event: ApiEvent) => void,
    private readonly baseRetryMs = 500,
  ) {
    this.retryMs = baseRetryMs;
  }

  connect(): void {
    if (this.closed) {
      return;
    }
    const socket = this.makeSocket(`${this.wsUrl}?from=${this.lastSeq}`);
    this.socket = socket;
    socket.onmessage = (ev) => {
      const event = JSON.parse(String(ev.data)) as ApiEvent;
      if (event.seq <= this.lastSeq) {
        return; // duplicate after resume
      }
      this.lastSeq = event.seq;
      this.retryMs = this.baseRetryMs;
      this.sink(event);
    };
    const reconnect = () => {
      if (this.closed) {
        return;
      }
      this.socket = null;
      setTimeout(() => this.connect(), this.retryMs);
      this.retryMs = Math.min(this.retryMs * 2, 10_000);
    };
    socket.onclose = reconnect;
    socket.onerror = () => socket.close();
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}

export function wsUrlFor(base: string, path = '/v1/events'): string {
  if (base.startsWith('http')) {
    return base.replace(/^http/, 'ws') + path;
  }
  const proto = location.protocol === 'https:' ? 'wss' : 'ws';
  return `${proto}://${location.host}${path}`;
}
