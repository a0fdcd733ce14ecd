"""Built-in primitives: timed waiting and symbolic world-model moves."""

from __future__ import annotations

from .bt import Primitive
from .ontology import CONTAIN, Iri
from .world import WorldModel

CONTAINER_STATE = Iri("skiros", "ContainerState")


def move_object(wm: WorldModel, source, target: Iri, obj: Iri):
    """Move ``obj`` between containers and refresh their ContainerState.

    ``source`` may be None for elements that had no container yet.
    """
    wm.move_element(obj, target)
    for container in (source, target):
        if container is None:
            continue
        element = wm.element(container)
        if CONTAINER_STATE in element.properties:
            holds_anything = bool(wm.relations(subject=container, predicate=CONTAIN))
            state = "Full" if holds_anything else "Empty"
            if element.prop_values(CONTAINER_STATE) != [state]:
                wm.set_property(container, CONTAINER_STATE, [state])


class WaitPrimitive(Primitive):
    """Running until the task clock has advanced by Duration seconds."""

    def onStart(self) -> bool:
        self._started_at = None
        return True

    def execute(self):
        duration = float(self.param("Duration"))
        if duration < 0:
            return self.fail("Duration must be >= 0")
        now = self.clock()
        if self._started_at is None:
            self._started_at = now
        if now - self._started_at >= duration:
            return self.success(f"waited {duration:g}s")
        return self.step(f"{now - self._started_at:g}/{duration:g}s")


class WmMoveObjectPrimitive(Primitive):
    """One-tick symbolic move of an object between two containers."""

    def execute(self):
        source = self.param("StartLocation")
        target = self.param("TargetLocation")
        obj = self.param("Object")
        if not self.wm.relations(subject=source, predicate=CONTAIN, obj=obj):
            return self.fail(f"{obj} is not in {source}")
        move_object(self.wm, source, target, obj)
        return self.success(f"moved {obj} to {target}")
