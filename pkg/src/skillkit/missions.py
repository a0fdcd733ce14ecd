"""Goal-driven missions: plan, dispatch steps to skill managers, monitor,
replan on failure (one attempt per failure, bounded per mission)."""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Optional

from .manager import EventBus, SkillManager
from .ontology import Iri
from .planning import (
    Plan,
    PlanningError,
    ROBOT_KEY,
    generate_domain,
    generate_problem,
    parse_goal_text,
    plan as solve,
    validate_plan,
)
from .world import WorldModel

REPLAN_BUDGET = 3


class MissionError(Exception):
    code = "mission_error"


class UnknownMissionError(MissionError):
    code = "unknown_mission"


@dataclass
class MissionStep:
    index: int
    skill: str
    args: tuple
    bindings: dict
    manager: Optional[str] = None
    task_id: Optional[str] = None
    state: str = "pending"  # pending | running | succeeded | failed

    def to_record(self) -> dict:
        return {
            "index": self.index,
            "skill": self.skill,
            "args": list(self.args),
            "bindings": {k: str(v) for k, v in self.bindings.items()},
            "manager": self.manager,
            "task": self.task_id,
            "state": self.state,
        }


@dataclass
class Mission:
    id: str
    goal: list
    goal_text: str
    requester: str = ""
    state: str = "planning"  # planning | executing | succeeded | failed | unsatisfiable
    steps: list = field(default_factory=list)
    cursor: int = 0
    replans: int = 0
    submitted_version: int = 0
    final_version: Optional[int] = None
    detail: str = ""

    @property
    def active(self) -> bool:
        return self.state in ("planning", "executing")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "goal": self.goal_text,
            "requester": self.requester,
            "state": self.state,
            "steps": [s.to_record() for s in self.steps],
            "replans": self.replans,
            "submitted_version": self.submitted_version,
            "final_version": self.final_version,
            "detail": self.detail,
        }


class MissionManager:
    """Accepts goals, plans against the shared world model and dispatches
    plan steps to the manager whose robot grounds each step."""

    def __init__(self, wm: WorldModel, managers: list, replan_budget: int = REPLAN_BUDGET):
        self.wm = wm
        self.managers: dict[str, SkillManager] = {m.config.name: m for m in managers}
        self.replan_budget = replan_budget
        self.events = EventBus()
        self._missions: dict[str, Mission] = {}
        self._counter = 0
        self._lock = threading.RLock()
        self._robot_owner: dict[Iri, str] = {}

    # -- planning helpers ----------------------------------------------------
    def _descriptions(self):
        by_name = {}
        for manager in self.managers.values():
            for desc in manager.registry.descriptions():
                by_name.setdefault(desc.name, desc)
        return [by_name[k] for k in sorted(by_name)]

    def _plan(self, goal: list) -> Plan:
        domain = generate_domain(self._descriptions(), self.wm.ontology)
        problem = generate_problem(self.wm.snapshot(), goal, domain)
        result = solve(domain, problem)
        if not validate_plan(domain, problem, result):
            raise MissionError("planner produced an invalid plan")
        return result

    def _route(self, step: MissionStep) -> SkillManager:
        robot = step.bindings.get(ROBOT_KEY)
        if robot is not None:
            for manager in self.managers.values():
                if manager.config.robot == robot:
                    return manager
            raise MissionError(f"no manager controls robot {robot}")
        return self.managers[sorted(self.managers)[0]]

    # -- goal intake -----------------------------------------------------------
    def submit_goal(self, goal, requester: str = "") -> str:
        """Plan a goal (text or literals) and start executing it."""
        if isinstance(goal, str):
            goal_text = goal
            literals = parse_goal_text(goal)
        else:
            literals = list(goal)
            goal_text = "\n".join(
                ("" if lit.positive else "not ") +
                f"{lit.predicate} {lit.subject} {lit.object}"
                for lit in literals)
        if not self.managers:
            raise MissionError("no skill manager registered")
        with self._lock:
            self._counter += 1
            mission = Mission(
                id=f"mission-{self._counter}",
                goal=literals,
                goal_text=goal_text,
                requester=requester,
                submitted_version=self.wm.version,
            )
            self._missions[mission.id] = mission
        try:
            result = self._plan(literals)
        except (PlanningError, MissionError) as exc:
            mission.state = "unsatisfiable"
            mission.detail = str(exc)
            mission.final_version = self.wm.version
            self.events.emit({"kind": "mission_finished", "mission": mission.to_record()})
            return mission.id
        self._install_plan(mission, result)
        if not mission.steps:
            self._finish(mission)
        return mission.id

    def _install_plan(self, mission: Mission, result: Plan):
        mission.steps = [
            MissionStep(index=i, skill=s.skill, args=s.args, bindings=dict(s.bindings))
            for i, s in enumerate(result.steps)
        ]
        mission.cursor = 0
        mission.state = "executing"
        self.events.emit({
            "kind": "planned",
            "mission": mission.id,
            "plan": [s.signature() for s in result.steps],
        })

    # -- execution state machine -------------------------------------------
    def step(self):
        """Advance every active mission; called from the shared tick loop."""
        with self._lock:
            active = [m for m in self._missions.values() if m.state == "executing"]
        for mission in active:
            self._advance(mission)

    def _advance(self, mission: Mission):
        if mission.cursor >= len(mission.steps):
            self._finish(mission)
            return
        step = mission.steps[mission.cursor]
        if step.task_id is None:
            manager = self._route(step)
            owner = self._robot_owner.get(manager.config.robot)
            if owner not in (None, mission.id):
                return  # robot busy with another mission; stay queued
            self._robot_owner[manager.config.robot] = mission.id
            params = {k: v for k, v in step.bindings.items()
                      if k != ROBOT_KEY and k in
                      {p.key for p in manager.registry.description(step.skill).params}}
            try:
                step.task_id = manager.start_task(step.skill, params)
            except Exception as exc:
                step.state = "failed"
                self.events.emit({"kind": "step_finished", "mission": mission.id,
                                  "step": step.to_record(), "error": str(exc)})
                self._replan_or_fail(mission)
                return
            step.manager = manager.config.name
            step.state = "running"
            self.events.emit({"kind": "step_started", "mission": mission.id,
                              "step": step.to_record()})
            return
        manager = self.managers[step.manager]
        task = manager.task(step.task_id)
        if not task.terminal:
            return
        if task.state == "succeeded":
            step.state = "succeeded"
            self.events.emit({"kind": "step_finished", "mission": mission.id,
                              "step": step.to_record()})
            mission.cursor += 1
            if mission.cursor >= len(mission.steps):
                self._finish(mission)
            return
        step.state = "failed"
        self.events.emit({"kind": "step_finished", "mission": mission.id,
                          "step": step.to_record(), "error": task.message})
        self._replan_or_fail(mission)

    def _replan_or_fail(self, mission: Mission):
        if mission.replans >= self.replan_budget:
            mission.state = "failed"
            mission.detail = f"replan budget of {self.replan_budget} exhausted"
            self._finish(mission, verify=False)
            return
        mission.replans += 1
        self.events.emit({"kind": "replanning", "mission": mission.id,
                          "attempt": mission.replans})
        try:
            result = self._plan(mission.goal)
        except (PlanningError, MissionError) as exc:
            mission.state = "failed"
            mission.detail = f"replanning failed: {exc}"
            self._finish(mission, verify=False)
            return
        self._install_plan(mission, result)
        if not mission.steps:
            self._finish(mission)

    def _finish(self, mission: Mission, verify: bool = True):
        self._release(mission)
        if verify:
            snapshot = self.wm.snapshot()
            satisfied = all(
                snapshot.has_relation(lit.subject, lit.predicate, lit.object) == lit.positive
                for lit in mission.goal)
            mission.state = "succeeded" if satisfied else "failed"
            if not satisfied:
                mission.detail = "final world state does not satisfy the goal"
        mission.final_version = self.wm.version
        self.events.emit({"kind": "mission_finished", "mission": mission.to_record()})

    def _release(self, mission: Mission):
        for robot, owner in list(self._robot_owner.items()):
            if owner == mission.id:
                del self._robot_owner[robot]

    # -- queries ---------------------------------------------------------------
    def mission(self, mission_id: str) -> Mission:
        with self._lock:
            try:
                return self._missions[mission_id]
            except KeyError:
                raise UnknownMissionError(f"unknown mission '{mission_id}'") from None

    def missions(self) -> list[Mission]:
        with self._lock:
            return list(self._missions.values())

    def monitor(self, mission_id: str) -> list[dict]:
        """Ordered event records for one mission."""
        self.mission(mission_id)
        return [e for e in self.events.history()
                if e.get("mission") == mission_id
                or (isinstance(e.get("mission"), dict)
                    and e["mission"].get("id") == mission_id)]
