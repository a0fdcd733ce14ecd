"""Simulated mobile-manipulation backend: timed drive/pick/place primitives
plus scenario files carrying action durations and fault scripts. The
deployment's stepper applies due faults on the shared logical clock."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .bt import Primitive
from .builtins import move_object
from .ontology import AT, CONTAIN, Iri
from .world import WorldModel


class _TimedPrimitive(Primitive):
    """Shared scaffolding: act after a configurable sim duration."""

    default_duration = 1.0

    def onStart(self) -> bool:
        self._started_at = None
        return True

    def execute(self):
        now = self.clock()
        if self._started_at is None:
            self._started_at = now
            problem = self.check()
            if problem:
                return self.fail(problem)
        duration = float(self.config.get("duration", self.default_duration))
        if now - self._started_at < duration:
            return self.step("in progress")
        return self.apply()

    def check(self) -> Optional[str]:
        return None

    def apply(self):
        raise NotImplementedError


class DriveSim(_TimedPrimitive):
    """Symbolic driving: after the duration the robot is at the target."""

    default_duration = 1.0

    def apply(self):
        robot = self.param("Robot")
        target = self.param("TargetLocation")
        self.wm.set_relation(robot, AT, target, True)
        return self.success(f"arrived at {target}")


class PickSim(_TimedPrimitive):
    default_duration = 0.5

    def check(self) -> Optional[str]:
        container = self.param("Container")
        obj = self.param("Object")
        if not self.wm.relations(subject=container, predicate=CONTAIN, obj=obj):
            return f"{obj} is not in {container}"
        return None

    def apply(self):
        move_object(self.wm, self.param("Container"), self.param("Gripper"),
                    self.param("Object"))
        return self.success(f"picked {self.param('Object')}")


class PlaceSim(_TimedPrimitive):
    default_duration = 0.5

    def check(self) -> Optional[str]:
        gripper = self.param("Gripper")
        obj = self.param("Object")
        if not self.wm.relations(subject=gripper, predicate=CONTAIN, obj=obj):
            return f"{obj} is not held by {gripper}"
        return None

    def apply(self):
        move_object(self.wm, self.param("Gripper"), self.param("TargetLocation"),
                    self.param("Object"))
        return self.success(f"placed {self.param('Object')}")


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------

@dataclass
class Fault:
    """A scripted world-model mutation applied at a sim time."""

    at: float
    action: str  # set_relation | clear_relation | move | remove
    subject: str
    predicate: Optional[str] = None
    object: Optional[str] = None
    applied: bool = False

    def apply(self, wm: WorldModel):
        subject = Iri.parse(self.subject)
        if self.action == "set_relation":
            wm.set_relation(subject, Iri.parse(self.predicate), Iri.parse(self.object), True)
        elif self.action == "clear_relation":
            wm.set_relation(subject, Iri.parse(self.predicate), Iri.parse(self.object), False)
        elif self.action == "move":
            move_object(wm, wm.element(subject).parent, Iri.parse(self.object), subject)
        elif self.action == "remove":
            wm.remove_element(subject, recursive=True)
        else:
            raise ValueError(f"unknown fault action {self.action!r}")


@dataclass
class SimScenario:
    scene_path: Optional[str] = None
    durations: dict = field(default_factory=dict)  # skill label/name -> seconds
    faults: list = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        for skill, seconds in self.durations.items():
            if seconds <= 0:
                raise ValueError(f"duration for '{skill}' must be > 0")

    @classmethod
    def from_file(cls, path) -> "SimScenario":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
        scenario = cls.from_dict(data)
        if scenario.scene_path and not Path(scenario.scene_path).is_absolute():
            scenario.scene_path = str(path.parent / scenario.scene_path)
        return scenario

    @classmethod
    def from_dict(cls, data: dict) -> "SimScenario":
        faults = [Fault(**raw) for raw in data.get("faults", [])]
        return cls(
            scene_path=data.get("scene"),
            durations=dict(data.get("durations", {})),
            faults=faults,
            seed=int(data.get("seed", 0)),
        )


