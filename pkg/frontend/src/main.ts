// Console bootstrap: load snapshots, subscribe to the event stream, and
// re-render the active tab whenever the store changes.

import { ApiClient, ApiError, EventStream, wsUrlFor } from './api.js';
import type { SkillRecord, TaskRecord } from './api.js';
import { buildForm, collectParams, missingRequired } from './forms.js';
import type { FieldModel } from './forms.js';
import {
  el,
  renderElementEditor,
  renderEventLog,
  renderMissionComposer,
  renderMissions,
  renderSkillForm,
  renderSkillList,
  renderTaskList,
  renderTaskTree,
  renderWmTree,
} from './render.js';
import { Store } from './state.js';

export class ConsoleApp {
  store = new Store();
  stream: EventStream | null = null;
  currentSkill: SkillRecord | null = null;
  fields: FieldModel[] = [];
  selectedElement: string | null = null;
  inspectedTask: TaskRecord | null = null;
  statusText = '';
  instanceCache = new Map<string, string[]>();

  constructor(
    readonly client: ApiClient,
    readonly root: HTMLElement,
  ) {
    this.store.onChange(() => this.render());
  }

  async boot(): Promise<void> {
    const [skills, wm, tasks, missions] = await Promise.all([
      this.client.skills(), this.client.wm(), this.client.tasks(),
      this.client.missions(),
    ]);
    this.store.loadSkills(skills);
    this.store.loadWm(wm);
    this.store.loadTasks(tasks);
    this.store.loadMissions(missions);
    this.stream?.connect();
    this.render();
  }

  private status(text: string): void {
    this.statusText = text;
    this.render();
  }

  private guard(promise: Promise<unknown>): void {
    promise.catch((error) => {
      const message = error instanceof ApiError
        ? `${error.body.code}: ${error.body.message}`
        : String(error);
      this.status(message);
    });
  }

  async pickSkill(name: string): Promise<void> {
    const skill = this.store.skills.find((s) => s.name === name) ?? null;
    this.currentSkill = skill;
    if (skill) {
      for (const param of skill.params) {
        if (param.element && !this.instanceCache.has(param.element)) {
          const options = await this.client.instancesOf(param.element);
          this.instanceCache.set(param.element, options);
        }
      }
      this.fields = buildForm(
        skill, (concept) => this.instanceCache.get(concept) ?? []);
    }
    this.render();
  }

  startCurrentSkill(): void {
    if (!this.currentSkill) {
      return;
    }
    const missing = missingRequired(this.fields);
    if (missing.length) {
      this.status(`missing required: ${missing.join(', ')}`);
      return;
    }
    const params = collectParams(this.fields);
    this.guard(this.client.startTask(this.currentSkill.name, params)
      .then((task) => {
        this.store.loadTasks([task]);
        this.status(`started ${task.id}`);
      }));
  }

  async inspect(taskId: string): Promise<void> {
    this.inspectedTask = await this.client.task(taskId);
    this.render();
  }

  render(): void {
    const store = this.store;
    this.root.replaceChildren();

    const status = el('div', { class: 'status', 'data-role': 'status' },
                      [this.statusText]);
    this.root.append(status);

    // skills tab
    const skills = el('section', { class: 'tab skills', 'data-tab': 'skills' });
    skills.append(el('h2', {}, ['skills']));
    skills.append(renderSkillList(store.skills, (name) => {
      void this.pickSkill(name);
    }));
    if (this.currentSkill) {
      skills.append(renderSkillForm(this.currentSkill, this.fields,
                                    () => this.startCurrentSkill()));
    }
    skills.append(renderTaskList(
      [...store.tasks.values()],
      (id) => this.guard(this.client.stopTask(id).then((t) => store.loadTasks([t]))),
      (id) => this.guard(this.inspect(id)),
    ));
    if (this.inspectedTask?.tree) {
      const holder = el('ul', { class: 'task-tree', 'data-task': this.inspectedTask.id });
      holder.append(renderTaskTree(this.inspectedTask.tree));
      skills.append(holder);
    }
    this.root.append(skills);

    // world model tab
    const wm = el('section', { class: 'tab wm', 'data-tab': 'wm' });
    wm.append(el('h2', {}, [`world model (v${store.version})`]));
    wm.append(renderWmTree(store.treeRows(), (id) => {
      this.selectedElement = id;
      this.render();
    }));
    if (this.selectedElement) {
      wm.append(renderElementEditor(store, this.selectedElement, {
        onSetLabel: (id, label) =>
          this.guard(this.client.patchElement(id, { label })),
        onSetProperty: (id, prop, raw) => {
          let value: unknown = raw;
          try {
            value = JSON.parse(raw);
          } catch {
            // keep the raw string
          }
          this.guard(this.client.patchElement(id, {
            properties: {
              ...store.elements.get(id)?.properties,
              [prop]: [value],
            },
          }));
        },
        onAddRelation: (subject, predicate, object) =>
          this.guard(this.client.setRelation(subject, predicate, object, true)),
        onClearRelation: (subject, predicate, object) =>
          this.guard(this.client.setRelation(subject, predicate, object, false)),
        onDelete: (id) => this.guard(this.client.deleteElement(id)),
      }));
    }
    this.root.append(wm);

    // missions tab
    const missions = el('section', { class: 'tab missions', 'data-tab': 'missions' });
    missions.append(el('h2', {}, ['missions']));
    missions.append(renderMissionComposer((goal) =>
      this.guard(this.client.submitMission(goal)
        .then((m) => this.store.loadMissions([m])))));
    missions.append(renderMissions(store));
    this.root.append(missions);

    // event log
    const log = el('section', { class: 'tab events', 'data-tab': 'events' });
    log.append(el('h2', {}, ['events']));
    log.append(renderEventLog(store));
    this.root.append(log);
  }
}

export function mount(root: HTMLElement, base = ''): ConsoleApp {
  const client = new ApiClient(base);
  const app = new ConsoleApp(client, root);
  app.stream = new EventStream(
    wsUrlFor(base),
    (url) => new WebSocket(url) as unknown as import('./api.js').SocketLike,
    (event) => app.store.apply(event),
  );
  void app.boot();
  return app;
}

declare global {
  interface Window {
    skillkitConsole?: ConsoleApp;
  }
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  window.skillkitConsole = mount(document.getElementById('app')!);
}
