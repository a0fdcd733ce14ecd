"""Behavior-tree execution with embedded condition checks.

Tick traversal is memoryless: processors restart at their first child on
every tick and preempt running children that a later tick does not reach.
Leaves latch terminal results until preempted; condition leaves recompute
on every tick and never return Running.

A skill node wraps a resolved implementation together with its pre, hold
and post condition leaves: pre-conditions gate the first activation, hold
conditions are re-checked every tick while the body runs, post-conditions
are checked once after the body succeeds.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable, Optional

from .skills import (
    Condition,
    ParamFlavor,
    Scope,
    SkillDescription,
    SkillError,
    evaluate_condition,
    infer_parameters,
)
from .world import WmSnapshot, WorldModel


class NodeState(str, Enum):
    SUCCESS = "success"
    FAILURE = "failure"
    RUNNING = "running"


class Processor(str, Enum):
    SEQUENTIAL = "sequential"
    SELECTOR = "selector"
    PARALLEL_FIRST_FAIL = "parallel_first_fail"
    PARALLEL_FIRST_SUCCESS = "parallel_first_success"


class TickContext:
    """Per-task tick environment: world model, clock, cached snapshot.

    The snapshot is shared by every condition evaluation of a tick and is
    refreshed only when the world-model version moves (a primitive of this
    task committing mid-tick must be visible to the post-checks).
    """

    def __init__(self, wm: WorldModel, clock: Callable[[], float]):
        self.wm = wm
        self.clock = clock
        self._snap: Optional[WmSnapshot] = None

    def snapshot(self) -> WmSnapshot:
        version = self.wm.version
        if self._snap is None or self._snap.version != version:
            self._snap = self.wm.snapshot()
        return self._snap


class Primitive:
    """Base class for atomic skills; subclass and override the hooks.

    ``execute`` runs once per tick while the node is running and must
    return promptly (budget: ~10 ms; never block on I/O or sleeps). Use
    ``self.success(...)``, ``self.step(...)`` or ``self.fail(...)`` as the
    return value. ``self.params`` resolves skill parameters, ``self.wm``
    is the live world model and ``self.clock()`` the task clock in
    seconds.
    """

    def __init__(self, config: Optional[dict] = None):
        self.config = dict(config or {})
        self.params: Optional[Scope] = None
        self._ctx: Optional[TickContext] = None
        self.transcript: list[str] = []

    # -- runtime accessors -------------------------------------------------
    @property
    def wm(self) -> WorldModel:
        return self._ctx.wm

    def clock(self) -> float:
        return self._ctx.clock()

    def param(self, key: str):
        return self.params.resolve(key)

    # -- result helpers ------------------------------------------------------
    def success(self, message: str = "") -> tuple:
        return (NodeState.SUCCESS, message)

    def step(self, message: str = "") -> tuple:
        return (NodeState.RUNNING, message)

    def fail(self, message: str = "") -> tuple:
        return (NodeState.FAILURE, message)

    # -- lifecycle hooks -----------------------------------------------------
    def onInit(self) -> bool:
        """Load-time hook, once per instance; returning False rejects the skill."""
        return True

    def onStart(self) -> bool:
        """Activation hook; runs once before the activation's first execute."""
        return True

    def execute(self) -> tuple:
        return self.success("executed")

    def onPreempt(self):
        """Stop-request hook; runs before onEnd when a running skill is cut off."""

    def onEnd(self):
        """Cleanup hook; runs once when an activation terminates, preempted or not."""


class BtNode:
    """Base node: state bookkeeping shared by all variants."""

    kind = "node"

    def __init__(self, name: str):
        self.name = name
        self.state: Optional[NodeState] = None
        self.message: str = ""
        self.failure_code: Optional[str] = None
        self.children: list["BtNode"] = []

    @property
    def is_running(self) -> bool:
        return self.state == NodeState.RUNNING

    @property
    def is_terminal(self) -> bool:
        return self.state in (NodeState.SUCCESS, NodeState.FAILURE)

    def _set(self, state: NodeState, code: Optional[str] = None, message: str = "") -> NodeState:
        self.state = state
        self.failure_code = code
        self.message = message
        return state

    def tick(self, ctx: TickContext) -> NodeState:
        raise NotImplementedError

    def preempt(self):
        raise NotImplementedError

    def dump(self) -> dict:
        return {
            "kind": self.kind,
            "name": self.name,
            "state": self.state.value if self.state else None,
            "message": self.message,
            "failure_code": self.failure_code,
            "children": [c.dump() for c in self.children],
        }

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


class ProcessorNode(BtNode):
    kind = "processor"

    def __init__(self, processor: Processor, children: Optional[list] = None, name: str = ""):
        super().__init__(name or processor.value)
        self.processor = processor
        self.children = list(children or [])

    def tick(self, ctx: TickContext) -> NodeState:
        reached: set[int] = set()
        if self.processor in (Processor.SEQUENTIAL, Processor.SELECTOR):
            stop = NodeState.FAILURE if self.processor == Processor.SEQUENTIAL else NodeState.SUCCESS
            result = NodeState.SUCCESS if self.processor == Processor.SEQUENTIAL else NodeState.FAILURE
            for index, child in enumerate(self.children):
                state = child.tick(ctx)
                reached.add(index)
                if state == stop or state == NodeState.RUNNING:
                    result = state
                    break
        else:
            states = []
            for index, child in enumerate(self.children):
                states.append(child.tick(ctx))
                reached.add(index)
            if self.processor == Processor.PARALLEL_FIRST_FAIL:
                if NodeState.FAILURE in states:
                    result = NodeState.FAILURE
                elif NodeState.RUNNING in states:
                    result = NodeState.RUNNING
                else:
                    result = NodeState.SUCCESS
            else:
                if NodeState.SUCCESS in states:
                    result = NodeState.SUCCESS
                elif NodeState.RUNNING in states:
                    result = NodeState.RUNNING
                else:
                    result = NodeState.FAILURE
        # running children that this tick did not reach, or that a terminal
        # result strands, are preempted
        for index, child in enumerate(self.children):
            if child.is_running and (index not in reached or result != NodeState.RUNNING):
                child.preempt()
        code = None
        message = ""
        if result == NodeState.FAILURE:
            for child in self.children:
                if child.state == NodeState.FAILURE:
                    code, message = child.failure_code, child.message
                    break
        return self._set(result, code, message)

    def preempt(self):
        for child in self.children:
            child.preempt()
        if self.is_running:
            self._set(NodeState.FAILURE, "Preempted", "preempted")


class ConditionNode(BtNode):
    """Embedded world-state check; recomputed every tick, never Running."""

    kind = "condition"

    def __init__(self, cond: Condition, phase: str, scope: Scope):
        super().__init__(f"{phase}:{cond.name}")
        self.cond = cond
        self.phase = phase
        self.scope = scope

    def tick(self, ctx: TickContext) -> NodeState:
        try:
            bindings = {key: self.scope.resolve(key) for key in self.cond.keys()}
            ok = evaluate_condition(self.cond, bindings, ctx.snapshot())
        except Exception as exc:  # evaluation errors surface as Failure + diagnostic
            return self._set(NodeState.FAILURE, "Error", f"{self.cond.name}: {exc}")
        if ok:
            return self._set(NodeState.SUCCESS)
        return self._set(NodeState.FAILURE, message=self.cond.name)

    def preempt(self):
        pass  # stateless


class PrimitiveNode(BtNode):
    """Leaf running a primitive's lifecycle; latches its terminal result."""

    kind = "primitive"

    def __init__(self, label: str, primitive: Primitive, scope: Scope):
        super().__init__(label)
        self.primitive = primitive
        self.primitive.params = scope
        self.scope = scope
        self._started = False

    def _record(self, hook: str):
        self.primitive.transcript.append(hook)

    def tick(self, ctx: TickContext) -> NodeState:
        if self.is_terminal:
            return self.state
        prim = self.primitive
        prim._ctx = ctx
        if not self._started:
            self._record("onStart")
            if not prim.onStart():
                return self._set(NodeState.FAILURE, "Error", "onStart returned False")
            self._started = True
        self._record("execute")
        try:
            state, message = prim.execute()
        except Exception as exc:
            self._record("onEnd")
            prim.onEnd()
            return self._set(NodeState.FAILURE, "Error", f"{self.name}: {exc}")
        if state == NodeState.RUNNING:
            return self._set(NodeState.RUNNING, message=message)
        self._record("onEnd")
        prim.onEnd()
        return self._set(state, None, message)

    def preempt(self):
        if self._started and not self.is_terminal:
            self._record("onPreempt")
            self.primitive.onPreempt()
            self._record("onEnd")
            self.primitive.onEnd()
            self._set(NodeState.FAILURE, "Preempted", "preempted")


class CallbackLeaf(BtNode):
    """Scripted leaf for tests and ad-hoc trees; no latching."""

    kind = "callback"

    def __init__(self, name: str, fn: Callable[[TickContext], NodeState]):
        super().__init__(name)
        self.fn = fn
        self.preempt_count = 0

    def tick(self, ctx: TickContext) -> NodeState:
        return self._set(self.fn(ctx))

    def preempt(self):
        if self.is_running:
            self.preempt_count += 1
            self._set(NodeState.FAILURE, "Preempted", "preempted")


class SkillNode(BtNode):
    """An instantiated skill: condition leaves embedded around the body."""

    kind = "skill"

    def __init__(
        self,
        name: str,
        implementation_label: str,
        desc: SkillDescription,
        scope: Scope,
        pre: list[ConditionNode],
        hold: list[ConditionNode],
        post: list[ConditionNode],
        body: BtNode,
    ):
        super().__init__(name)
        self.implementation_label = implementation_label
        self.desc = desc
        self.scope = scope
        self.pre_nodes = pre
        self.hold_nodes = hold
        self.post_nodes = post
        self.body = body
        self.children = [*pre, *hold, body, *post]
        self._activated = False

    def _resolve_params(self, ctx: TickContext) -> Optional[str]:
        """Defaults, required checks and late inference; error text on failure."""
        open_inferred = []
        for param in self.desc.params:
            if self.scope.has(param.key):
                continue
            if param.flavor == ParamFlavor.OPTIONAL and param.has_default:
                self.scope.specify[param.key] = param.default
            elif param.flavor == ParamFlavor.REQUIRED or param.flavor == ParamFlavor.OPTIONAL:
                return f"missing required parameter '{param.key}'"
            else:
                open_inferred.append(param)
        if open_inferred:
            keys = [p.key for p in self.desc.params] + ["Robot"]
            partial = self.scope.collect(keys)
            try:
                solution = infer_parameters(self.desc, partial, ctx.snapshot())
            except SkillError as exc:
                return str(exc)
            for param in open_inferred:
                self.scope.specify[param.key] = solution[param.key]
        return None

    def tick(self, ctx: TickContext) -> NodeState:
        if self.is_terminal:
            return self.state
        if not self._activated:
            problem = self._resolve_params(ctx)
            if problem is not None:
                return self._set(NodeState.FAILURE, "Error", problem)
            for node in self.pre_nodes:
                if node.tick(ctx) == NodeState.FAILURE:
                    return self._set(NodeState.FAILURE, "PreconditionViolated", node.message)
            self._activated = True
        for node in self.hold_nodes:
            if node.tick(ctx) == NodeState.FAILURE:
                self.body.preempt()
                return self._set(NodeState.FAILURE, "HoldViolated", node.message)
        body_state = self.body.tick(ctx)
        if body_state == NodeState.RUNNING:
            return self._set(NodeState.RUNNING)
        if body_state == NodeState.FAILURE:
            return self._set(NodeState.FAILURE, self.body.failure_code or "BodyFailed",
                             self.body.message)
        for node in self.post_nodes:
            if node.tick(ctx) == NodeState.FAILURE:
                return self._set(NodeState.FAILURE, "PostconditionViolated", node.message)
        return self._set(NodeState.SUCCESS)

    def preempt(self):
        self.body.preempt()
        if self.is_running or (self._activated and not self.is_terminal):
            self._set(NodeState.FAILURE, "Preempted", "preempted")


def preempt(node: BtNode):
    """Depth-first preemption; idempotent on already-terminal nodes."""
    node.preempt()
