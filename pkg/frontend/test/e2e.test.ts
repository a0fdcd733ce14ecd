// End-to-end console test against a live sim deployment: a real uvicorn
// server with wall-clock tickers, the real HTTP API and WebSocket feed,
// and the console driven through its DOM.

import { execSync, spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { createServer } from 'node:net';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import WebSocket from 'ws';

import { ApiClient, EventStream, type SocketLike } from '../src/api.js';
import { ConsoleApp } from '../src/main.js';

let server: ChildProcess;
let base: string;
let client: ApiClient;
let app: ConsoleApp;
let stream: EventStream;

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const probe = createServer();
    probe.listen(0, '127.0.0.1', () => {
      const port = (probe.address() as { port: number }).port;
      probe.close(() => resolve(port));
    });
    probe.on('error', reject);
  });
}

async function waitFor(
  predicate: () => boolean | Promise<boolean>,
  what: string,
  timeoutMs = 30_000,
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (await predicate()) {
      return;
    }
    await new Promise((r) => setTimeout(r, 100));
  }
  throw new Error(`timed out waiting for ${what}`);
}

function click(root: HTMLElement, selector: string): void {
  const node = root.querySelector(selector) as HTMLElement | null;
  if (!node) {
    throw new Error(`no element matches ${selector}`);
  }
  node.dispatchEvent(new window.Event('click', { bubbles: true }));
}

function setSelect(root: HTMLElement, selector: string, value: string): void {
  const node = root.querySelector(selector) as HTMLSelectElement | null;
  if (!node) {
    throw new Error(`no select matches ${selector}`);
  }
  node.value = value;
  node.dispatchEvent(new window.Event('change', { bubbles: true }));
}

beforeAll(async () => {
  const scene = execSync(
    'python3 -c "from skillkit.deploy import data_path;'
    + ' print(data_path(\'scenes\', \'scene_two_ws.ttl\'))"',
  ).toString().trim();
  const dir = mkdtempSync(join(tmpdir(), 'skillkit-e2e-'));
  const config = join(dir, 'deploy.yaml');
  writeFileSync(config, [
    'world_model:',
    `  scene: "${scene}"`,
    'managers:',
    '  - name: heron',
    '    robot: "skiros:robot"',
    '    libraries: [core, sim]',
    '    rate: 20',
    'scenario:',
    '  durations: {drive: 0.3, pick: 2.0, place: 0.3}',
    '',
  ].join('\n'));

  const port = await freePort();
  base = `http://127.0.0.1:${port}`;
  server = spawn('python3', ['-m', 'skillkit.cli', 'serve', '--config', config,
                             '--host', '127.0.0.1', '--port', String(port)],
                 { stdio: 'ignore' });
  client = new ApiClient(base);
  await waitFor(async () => {
    try {
      await client.skills();
      return true;
    } catch {
      return false;
    }
  }, 'server startup');

  const root = document.createElement('main');
  document.body.append(root);
  app = new ConsoleApp(client, root);
  stream = new EventStream(
    base.replace('http', 'ws') + '/v1/events',
    (url) => new WebSocket(url) as unknown as SocketLike,
    (event) => app.store.apply(event),
  );
  app.stream = stream;
  await app.boot();
});

afterAll(() => {
  stream?.close();
  server?.kill();
});

describe('console against a live deployment', () => {
  it('skill launcher renders pick with an instance dropdown', async () => {
    await app.pickSkill('pick');
    const select = app.root.querySelector(
      '.skill-form select[data-param="Object"]') as HTMLSelectElement;
    const options = [...select.options].map((o) => o.value);
    expect(options).toContain('skiros:objectA');
    const gripper = app.root.querySelector(
      '.skill-form select[data-param="Gripper"] option') as HTMLOptionElement;
    expect(gripper.textContent).toContain('inferred');
  });

  it('starts pick, shows inferred params, then stops it', async () => {
    await client.setRelation('skiros:robot', 'skiros:at', 'skiros:workstationA');
    await app.pickSkill('pick');
    setSelect(app.root, 'select[data-param="Object"]', 'skiros:objectA');
    setSelect(app.root, 'select[data-param="Arm"]', 'skiros:arm1');
    click(app.root, '.skill-form button[data-action="start"]');
    await waitFor(() => app.store.tasks.size > 0, 'task row');
    const task = [...app.store.tasks.values()][0];
    expect(task.state).toBe('running');
    // inferred params echoed by the API and rendered in the task table
    const row = app.root.querySelector(`tr[data-task="${task.id}"] .params`)!;
    expect(row.textContent).toContain('Gripper=skiros:gripper1');
    expect(row.textContent).toContain('Container=skiros:workstationA');

    click(app.root, `tr[data-task="${task.id}"] button[data-action="stop"]`);
    await waitFor(
      () => app.store.tasks.get(task.id)?.state === 'preempted',
      'preempted state from the event feed');
    expect(app.root.querySelector(`tr[data-task="${task.id}"]`)!.className)
      .toContain('task-preempted');
  });

  it('world-model editor adds a relation that appears via the live feed', async () => {
    app.selectedElement = 'skiros:robot';
    app.render();
    const editor = app.root.querySelector('.element-editor')!;
    (editor.querySelector('input[data-field="rel-pred"]') as HTMLInputElement)
      .value = 'skiros:hasA';
    (editor.querySelector('input[data-field="rel-obj"]') as HTMLInputElement)
      .value = 'skiros:gripper1';
    // jsdom input events do not sync value through our listeners here, so
    // drive the handler exactly like the button does
    click(app.root, '.element-editor button[data-action="add-relation"]');
    await waitFor(() => app.store.relations.some(
      (r) => r.subject === 'skiros:robot' && r.predicate === 'skiros:hasA'
        && r.object === 'skiros:gripper1'),
      'relation visible through the change feed');
    app.selectedElement = 'skiros:robot';
    app.render();
    const listed = [...app.root.querySelectorAll('.element-editor .relations li')]
      .map((li) => li.textContent ?? '');
    expect(listed.some((t) => t.includes('skiros:hasA skiros:gripper1'))).toBe(true);
  });

  it('mission monitor shows the four steps turning success in order', async () => {
    await client.setRelation('skiros:robot', 'skiros:at', 'skiros:base');
    const area = app.root.querySelector(
      'textarea[data-field="goal"]') as HTMLTextAreaElement;
    area.value = 'skiros:contain skiros:locationB skiros:objectA';
    click(app.root, 'button[data-action="submit-goal"]');
    await waitFor(() => app.store.missions.size > 0, 'mission card');
    const missionId = [...app.store.missions.keys()][0];
    await waitFor(
      () => ['succeeded', 'failed', 'unsatisfiable']
        .includes(app.store.missions.get(missionId)!.state),
      'mission to finish');
    const mission = app.store.missions.get(missionId)!;
    expect(mission.state).toBe('succeeded');
    expect(mission.steps.map((s) => s.skill))
      .toEqual(['drive', 'pick', 'drive', 'place']);
    expect(mission.steps.every((s) => s.state === 'succeeded')).toBe(true);
    // success events arrived in step order on the stream
    const finished = app.store.log
      .filter((e) => e.type === 'mission' && e.event.kind === 'step_finished'
                     && e.event.mission === missionId)
      .map((e) => e.event.step.index as number);
    expect(finished).toEqual([0, 1, 2, 3]);
    const card = app.root.querySelector(`[data-mission="${missionId}"]`)!;
    expect(card.className).toContain('mission-succeeded');
    const steps = [...card.querySelectorAll('.step')].map((s) => s.className);
    expect(steps.every((c) => c.includes('step-succeeded'))).toBe(true);
  });
});
