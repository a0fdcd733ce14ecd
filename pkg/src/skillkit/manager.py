"""Per-robot skill manager: loads libraries, owns tasks and their tick loop.

The manager's clock is logical (tick index over the configured rate); a
background ticker paces it against the wall clock when serving, while
tests and the sim stepper call :meth:`SkillManager.step` directly for
exact reproducibility.
"""

from __future__ import annotations

import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Optional

from .bt import NodeState, SkillNode, TickContext
from .library import (
    SkillRegistry,
    UnknownSkillError,
    build_skill_node,
    coerce_param_value,
    load_library,
    register_library,
)
from .ontology import HAS_SKILL, SKILL_CONCEPT, Iri, Literal
from .skills import Blackboard, infer_parameters
from .world import Subscription, WorldModel

DEVICE_CONCEPT = Iri("rparts", "Device")


class ManagerError(Exception):
    code = "manager_error"


class UnknownTaskError(ManagerError):
    code = "unknown_task"


class ResourceBusyError(ManagerError):
    code = "resource_busy"


class EventBus:
    """Ordered event fan-out with history, shared by managers and missions.

    ``horizon`` bounds retained history (resume loses nothing within it);
    sequence numbers keep counting past compaction.
    """

    def __init__(self, horizon: Optional[int] = None):
        self._lock = threading.Lock()
        self._history: deque = deque(maxlen=horizon)
        self._seq = -1
        self._subscribers: list = []

    def emit(self, record: dict) -> dict:
        with self._lock:
            record = dict(record)
            self._seq += 1
            record["seq"] = self._seq
            self._history.append(record)
            for sub in self._subscribers:
                sub._push(record)
            return record

    def subscribe(self, from_seq: int = -1) -> Subscription:
        with self._lock:
            sub = Subscription(self._unsubscribe)
            for record in self._history:
                if record["seq"] > from_seq:
                    sub._push(record)
            self._subscribers.append(sub)
            return sub

    def _unsubscribe(self, sub):
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def history(self) -> list[dict]:
        with self._lock:
            return list(self._history)


@dataclass
class ManagerConfig:
    name: str
    robot: Iri
    libraries: list = field(default_factory=list)
    rate: float = 20.0
    library_configs: dict = field(default_factory=dict)  # impl label -> config overrides

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("tick rate must be > 0")
        if isinstance(self.robot, str):
            self.robot = Iri.parse(self.robot)


@dataclass
class Task:
    id: str
    skill: str
    implementation: str
    params: dict
    root: SkillNode
    blackboard: Blackboard
    created_tick: int
    state: str = "running"  # running | succeeded | failed | preempted
    message: str = ""
    failure_code: Optional[str] = None
    ticks: int = 0
    guards: tuple = ()

    @property
    def terminal(self) -> bool:
        return self.state != "running"

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "skill": self.skill,
            "implementation": self.implementation,
            "params": {k: str(v) if isinstance(v, Iri) else v for k, v in self.params.items()},
            "state": self.state,
            "message": self.message,
            "failure_code": self.failure_code,
            "ticks": self.ticks,
        }


class SkillManager:
    """Loads skill libraries for one robot and executes its tasks."""

    def __init__(self, wm: WorldModel, config: ManagerConfig):
        self.wm = wm
        self.config = config
        self.registry = SkillRegistry(wm.ontology)
        self.events = EventBus()
        self.diagnostics: list[str] = []
        self._tasks: dict[str, Task] = {}
        self._counter = 0
        self._tick_index = 0
        self._lock = threading.RLock()
        self._node_states: dict[str, dict] = {}
        wm.element(config.robot)  # the robot element must exist at startup

    # -- loading -----------------------------------------------------------
    def load_skills(self) -> list[str]:
        """Load configured libraries and register skill semantics in the WM."""
        known = {}
        for source in self.config.libraries:
            manifest = load_library(source, known)
            for impl in manifest.implementations:
                overrides = self.config.library_configs.get(impl.label)
                if overrides:
                    impl.config.update(overrides)
            self.diagnostics.extend(register_library(self.registry, manifest))
            known.update({d.name: d for d in self.registry.descriptions()})
        self._register_skills_in_wm()
        return list(self.diagnostics)

    def _register_skills_in_wm(self):
        existing = {}
        for triple in self.wm.relations(subject=self.config.robot, predicate=HAS_SKILL):
            element = self.wm.element(triple.object)
            existing[element.label] = element.id
        for desc in self.registry.descriptions():
            impls = [i.label for i in self.registry.implementations(desc.name)]
            if not impls:
                continue
            properties = {
                Iri("skiros", "SkillParameters"): [Literal(self._param_text(p))
                                                   for p in desc.params],
                Iri("skiros", "SkillConditions"): [Literal(self._condition_text(kind, c))
                                                   for kind, conds in
                                                   (("pre", desc.pre), ("hold", desc.hold),
                                                    ("post", desc.post))
                                                   for c in conds],
                Iri("skiros", "Implementations"): [Literal(label) for label in sorted(impls)],
            }
            if desc.name in existing:
                self.wm.update_element(existing[desc.name], properties=properties)
            else:
                skill_id = self.wm.add_element(SKILL_CONCEPT, label=desc.name,
                                               properties=properties)
                self.wm.set_relation(self.config.robot, HAS_SKILL, skill_id, True)

    @staticmethod
    def _param_text(p) -> str:
        target = str(p.element) if p.element is not None else p.fundamental
        return f"{p.key}:{target}:{p.flavor.value}"

    @staticmethod
    def _condition_text(kind: str, cond) -> str:
        return f"{kind}:{cond.name}:{type(cond).__name__}"

    # -- clock -------------------------------------------------------------
    def clock(self) -> float:
        return self._tick_index / self.config.rate

    @property
    def tick_index(self) -> int:
        return self._tick_index

    # -- task control ------------------------------------------------------
    def _coerce_params(self, desc, params: dict) -> dict:
        out = {}
        for key, value in params.items():
            try:
                spec = desc.param(key)
            except KeyError:
                raise UnknownSkillError(
                    f"skill '{desc.name}' has no parameter '{key}'") from None
            out[key] = coerce_param_value(spec, value)
        return out

    def _guard_elements(self, desc, bindings: dict) -> tuple:
        snapshot = self.wm.snapshot()
        guards = []
        for p in desc.element_params():
            value = bindings.get(p.key)
            if isinstance(value, Iri) and snapshot.has_element(value) and \
                    snapshot.is_subclass_of(snapshot.type_of(value), DEVICE_CONCEPT):
                guards.append(value)
        return tuple(sorted(guards, key=str))

    def start_task(self, skill: str, params: Optional[dict] = None,
                   implementation: Optional[str] = None) -> str:
        """Infer bindings, expand the tree and enter the tick loop."""
        with self._lock:
            desc = self.registry.description(skill)
            partial = self._coerce_params(desc, params or {})
            partial["Robot"] = self.config.robot
            snapshot = self.wm.snapshot()
            bound = infer_parameters(desc, partial, snapshot)
            guards = self._guard_elements(desc, bound)
            for task in self._tasks.values():
                if not task.terminal and set(task.guards) & set(guards):
                    busy = sorted(set(task.guards) & set(guards), key=str)
                    raise ResourceBusyError(
                        f"device {busy[0]} is held by task {task.id}")
            blackboard = Blackboard(bound)
            root = build_skill_node(self.registry, snapshot, skill, blackboard,
                                    implementation=implementation)
            self._counter += 1
            task = Task(
                id=f"{self.config.name}-{self._counter}",
                skill=skill,
                implementation=root.implementation_label,
                params={k: v for k, v in bound.items() if k != "Robot"},
                root=root,
                blackboard=blackboard,
                created_tick=self._tick_index,
                guards=guards,
            )
            self._tasks[task.id] = task
            self._node_states[task.id] = {}
            self.events.emit({"kind": "task_started", "task": task.to_record()})
            return task.id

    def stop_task(self, task_id: str) -> str:
        with self._lock:
            task = self._get(task_id)
            if task.terminal:
                return task.state
            task.root.preempt()
            self._finish(task, "preempted", task.root.message or "preempted", "Preempted")
            return task.state

    def task(self, task_id: str) -> Task:
        with self._lock:
            return self._get(task_id)

    def tasks(self) -> list[Task]:
        with self._lock:
            return list(self._tasks.values())

    def _get(self, task_id: str) -> Task:
        try:
            return self._tasks[task_id]
        except KeyError:
            raise UnknownTaskError(f"unknown task '{task_id}'") from None

    def _finish(self, task: Task, state: str, message: str, code: Optional[str]):
        task.state = state
        task.message = message
        task.failure_code = code
        self._emit_node_changes(task)
        self.events.emit({"kind": "task_finished", "task": task.to_record()})

    def _emit_node_changes(self, task: Task):
        previous = self._node_states.get(task.id, {})
        current = {}

        def walk(node, path):
            current[path] = (node.state.value if node.state else None, node.message)
            for i, child in enumerate(node.children):
                walk(child, f"{path}/{i}")

        walk(task.root, "0")
        for path in sorted(current):
            if previous.get(path) != current[path]:
                state, message = current[path]
                self.events.emit({
                    "kind": "node_state",
                    "task": task.id,
                    "path": path,
                    "state": state,
                    "message": message,
                })
        self._node_states[task.id] = current

    # -- ticking -------------------------------------------------------------
    def step(self):
        """Advance the logical clock one tick and tick every running task.

        The whole tick runs under the manager lock: task trees are confined
        to it, so a concurrent stop_task (API thread) can never touch a tree
        mid-tick.
        """
        with self._lock:
            self._tick_index += 1
            now = self.clock()
            for task in [t for t in self._tasks.values() if not t.terminal]:
                ctx = TickContext(self.wm, clock=lambda now=now: now)
                state = task.root.tick(ctx)
                task.ticks += 1
                self._emit_node_changes(task)
                if state == NodeState.SUCCESS:
                    self._finish(task, "succeeded", task.root.message, None)
                elif state == NodeState.FAILURE:
                    outcome = "preempted" if task.root.failure_code == "Preempted" else "failed"
                    self._finish(task, outcome, task.root.message, task.root.failure_code)

    def run_task(self, task_id: str, max_ticks: int = 10_000) -> Task:
        """Step until the task terminates (testing and CLI convenience)."""
        task = self.task(task_id)
        ticks = 0
        while not task.terminal:
            self.step()
            ticks += 1
            if ticks > max_ticks:
                raise TimeoutError(f"task {task_id} still running after {max_ticks} ticks")
        return task


class Ticker:
    """Paces one callable at a fixed rate on a daemon thread."""

    def __init__(self, fn, rate: float):
        self._fn = fn
        self._period = 1.0 / rate
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def start(self) -> "Ticker":
        self._thread.start()
        return self

    def _run(self):
        next_due = time.monotonic()
        while not self._stop.is_set():
            self._fn()
            next_due += self._period
            delay = next_due - time.monotonic()
            if delay > 0:
                self._stop.wait(delay)
            else:
                next_due = time.monotonic()

    def stop(self):
        self._stop.set()
        self._thread.join(timeout=2.0)
