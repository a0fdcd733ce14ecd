// DOM construction for the console views. Everything renders from the
// store; handlers call back into the app (which talks to the API).

import type { SkillRecord, TaskRecord, TreeDump } from './api.js';
import type { FieldModel } from './forms.js';
import type { Store, TreeRow } from './state.js';

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === 'class') {
      node.className = value;
    } else {
      node.setAttribute(key, value);
    }
  }
  for (const child of children) {
    node.append(child);
  }
  return node;
}

// -- skill launcher -----------------------------------------------------------

export function renderSkillList(
  skills: SkillRecord[],
  onPick: (name: string) => void,
): HTMLElement {
  const list = el('ul', { class: 'skill-list' });
  for (const skill of skills) {
    const button = el('button', { 'data-skill': skill.name }, [skill.name]);
    button.addEventListener('click', () => onPick(skill.name));
    const impls = skill.implementations.join(', ');
    list.append(el('li', {}, [button, el('small', {}, [` ${impls}`])]));
  }
  return list;
}

export function renderSkillForm(
  skill: SkillRecord,
  fields: FieldModel[],
  onStart: () => void,
): HTMLElement {
  const form = el('div', { class: 'skill-form', 'data-skill': skill.name });
  form.append(el('h3', {}, [skill.name]));
  for (const field of fields) {
    const row = el('label', { class: `param param-${field.flavor}` });
    row.append(el('span', { class: 'param-key' }, [`${field.key} (${field.flavor})`]));
    if (field.kind === 'element') {
      const select = el('select', { 'data-param': field.key });
      select.append(el('option', { value: '' }, [field.placeholder]));
      for (const option of field.options) {
        select.append(el('option', { value: option }, [option]));
      }
      select.addEventListener('change', () => {
        field.value = select.value;
      });
      row.append(select);
    } else if (field.kind === 'bool') {
      const select = el('select', { 'data-param': field.key });
      for (const option of ['', 'true', 'false']) {
        select.append(el('option', { value: option }, [option || field.placeholder]));
      }
      select.addEventListener('change', () => {
        field.value = select.value;
      });
      row.append(select);
    } else {
      const input = el('input', { 'data-param': field.key,
                                  placeholder: field.placeholder });
      input.addEventListener('input', () => {
        field.value = input.value;
      });
      row.append(input);
    }
    form.append(row);
  }
  const conditions = skill.pre.length + skill.hold.length + skill.post.length;
  form.append(el('p', { class: 'conditions-note' },
                 [`${skill.pre.length} pre / ${skill.hold.length} hold / `
                  + `${skill.post.length} post conditions`]));
  const start = el('button', { class: 'start', 'data-action': 'start' }, ['start']);
  start.addEventListener('click', onStart);
  form.append(start);
  return form;
}

export function renderTaskList(
  tasks: TaskRecord[],
  onStop: (id: string) => void,
  onInspect: (id: string) => void,
): HTMLElement {
  const table = el('table', { class: 'task-list' });
  table.append(el('tr', {}, [
    el('th', {}, ['task']), el('th', {}, ['skill']), el('th', {}, ['state']),
    el('th', {}, ['params']), el('th', {}, ['']),
  ]));
  for (const task of [...tasks].reverse()) {
    const params = Object.entries(task.params)
      .map(([key, value]) => `${key}=${value}`).join(' ');
    const stop = el('button', { 'data-action': 'stop', 'data-task': task.id },
                    ['stop']);
    stop.addEventListener('click', () => onStop(task.id));
    const inspect = el('button', { 'data-action': 'inspect', 'data-task': task.id },
                       ['tree']);
    inspect.addEventListener('click', () => onInspect(task.id));
    table.append(el('tr', { class: `task-${task.state}`, 'data-task': task.id }, [
      el('td', {}, [task.id]),
      el('td', {}, [task.skill]),
      el('td', { class: 'state' }, [task.state + (task.message ? ` (${task.message})` : '')]),
      el('td', { class: 'params' }, [params]),
      el('td', {}, [stop, inspect]),
    ]));
  }
  return table;
}

export function renderTaskTree(tree: TreeDump): HTMLElement {
  const node = el('li', { class: `node node-${tree.state ?? 'idle'}` }, [
    el('span', { class: 'node-name' }, [`${tree.kind}:${tree.name}`]),
    el('span', { class: 'node-state' }, [tree.state ?? '-']),
  ]);
  if (tree.children.length) {
    const children = el('ul', { class: 'node-children' });
    for (const child of tree.children) {
      children.append(renderTaskTree(child));
    }
    node.append(children);
  }
  return node;
}

// -- world model editor ---------------------------------------------------------

export function renderWmTree(
  rows: TreeRow[],
  onSelect: (id: string) => void,
): HTMLElement {
  const list = el('ul', { class: 'wm-tree' });
  for (const row of rows) {
    const button = el('button', { 'data-element': row.element.id },
                      [`${row.element.id}`]);
    button.addEventListener('click', () => onSelect(row.element.id));
    const label = row.element.label ? ` — ${row.element.label}` : '';
    list.append(el('li', { style: `margin-left:${row.depth}rem` }, [
      button, el('small', {}, [` ${row.element.type}${label}`]),
    ]));
  }
  return list;
}

export interface ElementEditorHandlers {
  onSetLabel: (id: string, label: string) => void;
  onSetProperty: (id: string, prop: string, raw: string) => void;
  onAddRelation: (subject: string, predicate: string, object: string) => void;
  onClearRelation: (subject: string, predicate: string, object: string) => void;
  onDelete: (id: string) => void;
}

export function renderElementEditor(
  store: Store,
  id: string,
  handlers: ElementEditorHandlers,
): HTMLElement {
  const element = store.elements.get(id);
  const panel = el('div', { class: 'element-editor', 'data-element': id });
  if (!element) {
    panel.append(el('p', {}, ['select an element']));
    return panel;
  }
  panel.append(el('h3', {}, [element.id]),
               el('p', {}, [`type ${element.type}`]));

  const labelInput = el('input', { value: element.label, 'data-field': 'label' });
  const labelSave = el('button', { 'data-action': 'save-label' }, ['set label']);
  labelSave.addEventListener('click', () =>
    handlers.onSetLabel(id, labelInput.value));
  panel.append(el('div', { class: 'row' }, [labelInput, labelSave]));

  const props = el('ul', { class: 'properties' });
  for (const [prop, values] of Object.entries(element.properties)) {
    props.append(el('li', {}, [`${prop} = ${JSON.stringify(values)}`]));
  }
  panel.append(props);
  const propKey = el('input', { placeholder: 'skiros:Property', 'data-field': 'prop-key' });
  const propValue = el('input', { placeholder: 'value (JSON)', 'data-field': 'prop-value' });
  const propSave = el('button', { 'data-action': 'save-prop' }, ['set property']);
  propSave.addEventListener('click', () =>
    handlers.onSetProperty(id, propKey.value, propValue.value));
  panel.append(el('div', { class: 'row' }, [propKey, propValue, propSave]));

  const relations = el('ul', { class: 'relations' });
  for (const rel of store.relationsOf(id)) {
    const clear = el('button', { 'data-action': 'clear-relation' }, ['x']);
    clear.addEventListener('click', () =>
      handlers.onClearRelation(rel.subject, rel.predicate, rel.object));
    relations.append(el('li', {}, [
      `${rel.subject} ${rel.predicate} ${rel.object} `, clear,
    ]));
  }
  panel.append(relations);
  const predicate = el('input', { placeholder: 'skiros:hasA', 'data-field': 'rel-pred' });
  const object = el('input', { placeholder: 'skiros:gripper1', 'data-field': 'rel-obj' });
  const relSave = el('button', { 'data-action': 'add-relation' }, ['add relation']);
  relSave.addEventListener('click', () =>
    handlers.onAddRelation(id, predicate.value, object.value));
  panel.append(el('div', { class: 'row' }, [predicate, object, relSave]));

  const remove = el('button', { class: 'danger', 'data-action': 'delete' },
                    ['delete element']);
  remove.addEventListener('click', () => handlers.onDelete(id));
  panel.append(remove);
  return panel;
}

// -- missions ---------------------------------------------------------------------

export function renderMissionComposer(
  onSubmit: (goal: string) => void,
): HTMLElement {
  const panel = el('div', { class: 'mission-composer' });
  const area = el('textarea', {
    'data-field': 'goal',
    placeholder: 'skiros:contain skiros:locationB skiros:objectA',
    rows: '3',
  });
  const submit = el('button', { 'data-action': 'submit-goal' }, ['submit goal']);
  submit.addEventListener('click', () => onSubmit(area.value));
  panel.append(el('h3', {}, ['goal (one "pred subj obj" per line)']), area, submit);
  return panel;
}

export function renderMissions(store: Store): HTMLElement {
  const panel = el('div', { class: 'missions' });
  for (const mission of [...store.missions.values()].reverse()) {
    const card = el('div', { class: `mission mission-${mission.state}`,
                             'data-mission': mission.id });
    card.append(el('h4', {}, [`${mission.id}: ${mission.state}`]));
    if (mission.state === 'unsatisfiable' || mission.detail) {
      card.append(el('p', { class: 'detail' }, [mission.detail]));
    }
    if (mission.replans > 0) {
      card.append(el('p', { class: 'replanning-banner' },
                     [`replanned ×${mission.replans}`]));
    }
    if (!mission.steps.length && mission.state === 'succeeded') {
      card.append(el('p', { class: 'empty-plan' },
                     ['empty plan, mission succeeded']));
    }
    const steps = el('ol', { class: 'steps' });
    for (const step of mission.steps) {
      steps.append(el('li', { class: `step step-${step.state}` },
                      [`${step.skill} — ${step.state}`]));
    }
    card.append(steps);
    panel.append(card);
  }
  return panel;
}

// -- event log -----------------------------------------------------------------

export function renderEventLog(store: Store, limit = 50): HTMLElement {
  const list = el('ul', { class: 'event-log' });
  for (const event of store.log.slice(-limit).reverse()) {
    const summary = event.type === 'wm'
      ? `wm v${event.event.version} ${event.event.kind} ${event.event.subject ?? ''}`
      : `${event.type} ${event.event.kind ?? ''}`;
    list.append(el('li', { 'data-seq': String(event.seq) },
                   [`#${event.seq} ${summary}`]));
  }
  return list;
}
