// Client-side view model. State derives only from API snapshots and the
// event stream; reducers here mirror the server's event kinds 1:1 and do
// no reasoning of their own.

import type {
  ApiEvent,
  ElementRecord,
  MissionRecord,
  RelationRecord,
  SkillRecord,
  TaskRecord,
  WmRecord,
} from './api.js';

export interface NodeStateChange {
  task: string;
  path: string;
  state: string | null;
  message: string;
}

export interface MissionView {
  id: string;
  goal: string;
  state: string;
  plan: string[];
  steps: { index: number; skill: string; state: string }[];
  replans: number;
  detail: string;
}

export interface TreeRow {
  element: ElementRecord;
  depth: number;
}

export class Store {
  skills: SkillRecord[] = [];
  elements = new Map<string, ElementRecord>();
  relations: RelationRecord[] = [];
  tasks = new Map<string, TaskRecord>();
  nodeStates = new Map<string, Map<string, NodeStateChange>>();
  missions = new Map<string, MissionView>();
  log: ApiEvent[] = [];
  version = 0;
  listeners: (() => void)[] = [];

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) {
      listener();
    }
  }

  loadSkills(skills: SkillRecord[]): void {
    this.skills = skills;
    this.notify();
  }

  loadWm(wm: WmRecord): void {
    this.version = wm.version;
    this.elements = new Map(wm.elements.map((e) => [e.id, e]));
    this.relations = [...wm.relations];
    this.notify();
  }

  loadTasks(tasks: TaskRecord[]): void {
    for (const task of tasks) {
      this.tasks.set(task.id, task);
    }
    this.notify();
  }

  loadMissions(missions: MissionRecord[]): void {
    for (const mission of missions) {
      this.missions.set(mission.id, {
        id: mission.id,
        goal: mission.goal,
        state: mission.state,
        plan: mission.steps.map((s) => s.skill),
        steps: mission.steps.map((s) => ({
          index: s.index, skill: s.skill, state: s.state,
        })),
        replans: mission.replans,
        detail: mission.detail,
      });
    }
    this.notify();
  }

  /** Events must arrive in sequence order; rendering follows that order. */
  apply(event: ApiEvent): void {
    this.log.push(event);
    if (event.type === 'wm') {
      this.applyWm(event.event);
    } else if (event.type === 'task') {
      this.applyTask(event.event);
    } else {
      this.applyMission(event.event);
    }
    this.notify();
  }

  private applyWm(ev: Record<string, any>): void {
    this.version = ev.version;
    const kind = ev.kind as string;
    if (kind === 'element_added' || kind === 'element_updated') {
      const record = ev.element as ElementRecord;
      this.elements.set(record.id, record);
      if (kind === 'element_added' && record.parent) {
        this.upsertRelation(record.parent, 'skiros:contain', record.id);
      }
    } else if (kind === 'element_removed') {
      this.elements.delete(ev.subject);
      this.relations = this.relations.filter(
        (r) => r.subject !== ev.subject && r.object !== ev.subject);
    } else if (kind === 'relation_set') {
      this.upsertRelation(ev.subject, ev.predicate, ev.object);
      if (ev.predicate === 'skiros:contain') {
        const child = this.elements.get(ev.object);
        if (child) {
          this.elements.set(ev.object, { ...child, parent: ev.subject });
        }
      }
    } else if (kind === 'relation_cleared') {
      this.relations = this.relations.filter(
        (r) => !(r.subject === ev.subject && r.predicate === ev.predicate
                 && r.object === ev.object));
      if (ev.predicate === 'skiros:contain') {
        const child = this.elements.get(ev.object);
        if (child && child.parent === ev.subject) {
          this.elements.set(ev.object, { ...child, parent: null });
        }
      }
    }
  }

  private upsertRelation(subject: string, predicate: string, object: string): void {
    const exists = this.relations.some(
      (r) => r.subject === subject && r.predicate === predicate && r.object === object);
    if (!exists) {
      this.relations.push({ subject, predicate, object });
    }
  }

  private applyTask(ev: Record<string, any>): void {
    const kind = ev.kind as string;
    if (kind === 'task_started' || kind === 'task_finished') {
      const record = ev.task as TaskRecord;
      const existing = this.tasks.get(record.id);
      this.tasks.set(record.id, { ...existing, ...record });
    } else if (kind === 'node_state') {
      let byPath = this.nodeStates.get(ev.task);
      if (!byPath) {
        byPath = new Map();
        this.nodeStates.set(ev.task, byPath);
      }
      byPath.set(ev.path, {
        task: ev.task, path: ev.path, state: ev.state, message: ev.message,
      });
    }
  }

  private applyMission(ev: Record<string, any>): void {
    const kind = ev.kind as string;
    if (kind === 'planned') {
      const current = this.missions.get(ev.mission) ?? {
        id: ev.mission, goal: '', state: 'executing', plan: [], steps: [],
        replans: 0, detail: '',
      };
      current.plan = ev.plan as string[];
      current.steps = (ev.plan as string[]).map((line, index) => ({
        index,
        skill: line.replace(/^\(/, '').split(' ')[0],
        state: 'pending',
      }));
      current.state = 'executing';
      this.missions.set(ev.mission, current);
    } else if (kind === 'step_started' || kind === 'step_finished') {
      const mission = this.missions.get(ev.mission);
      if (mission) {
        const step = mission.steps[ev.step.index];
        if (step) {
          step.state = ev.step.state;
        }
      }
    } else if (kind === 'replanning') {
      const mission = this.missions.get(ev.mission);
      if (mission) {
        mission.replans = ev.attempt;
      }
    } else if (kind === 'mission_finished') {
      const record = ev.mission as Record<string, any>;
      const mission = this.missions.get(record.id);
      if (mission) {
        mission.state = record.state;
        mission.detail = record.detail;
      } else {
        this.missions.set(record.id, {
          id: record.id, goal: record.goal, state: record.state, plan: [],
          steps: [], replans: record.replans, detail: record.detail,
        });
      }
    }
  }

  /** Containment rows for the tree browser, depth-first by parent links. */
  treeRows(): TreeRow[] {
    const children = new Map<string | null, ElementRecord[]>();
    for (const element of this.elements.values()) {
      const key = element.parent && this.elements.has(element.parent)
        ? element.parent : null;
      const bucket = children.get(key) ?? [];
      bucket.push(element);
      children.set(key, bucket);
    }
    for (const bucket of children.values()) {
      bucket.sort((a, b) => a.id.localeCompare(b.id));
    }
    const rows: TreeRow[] = [];
    const visit = (parent: string | null, depth: number) => {
      for (const element of children.get(parent) ?? []) {
        rows.push({ element, depth });
        visit(element.id, depth + 1);
      }
    };
    visit(null, 0);
    return rows;
  }

  relationsOf(id: string): RelationRecord[] {
    return this.relations.filter((r) => r.subject === id || r.object === id);
  }

  nodeStateList(taskId: string): NodeStateChange[] {
    const byPath = this.nodeStates.get(taskId);
    if (!byPath) {
      return [];
    }
    return [...byPath.values()].sort((a, b) => a.path.localeCompare(b.path));
  }
}
