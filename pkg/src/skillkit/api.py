"""HTTP and WebSocket facade over a deployment.

Every state change observable here is forwarded 1:1 from the world model,
manager and mission event feeds; handlers hold no state of their own.
Errors come back as ``{code, message, detail}`` with 404 for unknown ids,
422 for validation problems and 409 for resource conflicts.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import anyio
from fastapi import FastAPI, Query, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .deploy import Deployment, DeployError
from .geometry import Pose
from .library import LibraryError, UnknownSkillError
from .manager import ManagerError, ResourceBusyError, UnknownTaskError
from .missions import MissionError, UnknownMissionError
from .ontology import Iri, Literal, OntologyError
from .planning import (
    PlanningError,
    emit_pddl_domain,
    emit_pddl_problem,
    generate_domain,
    generate_problem,
    parse_goal_text,
)
from .skills import (
    AllowedRelationCondition,
    HasPropertyCondition,
    PropertyCondition,
    RelationCondition,
    SkillError,
)
from .world import (
    UnknownElementError,
    VersionTooOldError,
    WorldModel,
    WorldModelError,
)

_NOT_FOUND = (UnknownElementError, UnknownTaskError, UnknownSkillError,
              UnknownMissionError, DeployError)
_CONFLICT = (ResourceBusyError, VersionTooOldError)
_HANDLED = (OntologyError, WorldModelError, SkillError, LibraryError, PlanningError,
            MissionError, ManagerError, DeployError, ValueError, KeyError)


def _status_for(exc: Exception) -> int:
    if isinstance(exc, _NOT_FOUND):
        return 404
    if isinstance(exc, _CONFLICT):
        return 409
    if isinstance(exc, (OntologyError, WorldModelError, SkillError, LibraryError,
                        PlanningError, MissionError, ManagerError, ValueError, KeyError)):
        return 422
    return 500


def _error_response(exc: Exception) -> JSONResponse:
    return JSONResponse(
        status_code=_status_for(exc),
        content={
            "code": getattr(exc, "code", type(exc).__name__),
            "message": str(exc),
            "detail": type(exc).__name__,
        },
    )


def param_record(p) -> dict:
    record = {"key": p.key, "flavor": p.flavor.value}
    if p.element is not None:
        record["element"] = str(p.element)
    else:
        record["type"] = p.fundamental
    if p.has_default:
        record["default"] = p.default
    return record


def condition_record(cond) -> dict:
    if isinstance(cond, RelationCondition):
        return {"kind": "relation", "name": cond.name, "predicate": str(cond.predicate),
                "subject": cond.subject_key, "object": cond.object_key,
                "desired": cond.desired}
    if isinstance(cond, PropertyCondition):
        return {"kind": "property", "name": cond.name, "property": str(cond.property),
                "param": cond.key, "op": cond.op, "value": cond.value.value,
                "desired": cond.desired}
    if isinstance(cond, HasPropertyCondition):
        return {"kind": "has_property", "name": cond.name, "property": str(cond.property),
                "param": cond.key, "desired": cond.desired}
    if isinstance(cond, AllowedRelationCondition):
        return {"kind": "allowed_relation", "name": cond.name,
                "predicate": str(cond.predicate), "subject": cond.subject_key,
                "object": cond.object_key, "desired": cond.desired}
    raise TypeError(f"not a condition: {cond!r}")


def skill_record(manager, desc) -> dict:
    return {
        "name": desc.name,
        "manager": manager.config.name,
        "robot": str(manager.config.robot),
        "params": [param_record(p) for p in desc.params],
        "pre": [condition_record(c) for c in desc.pre],
        "hold": [condition_record(c) for c in desc.hold],
        "post": [condition_record(c) for c in desc.post],
        "implementations": sorted(
            i.label for i in manager.registry.implementations(desc.name)),
    }


def _wm_record(wm: WorldModel) -> dict:
    return {
        "version": wm.version,
        "elements": [e.to_record() for e in sorted(wm.elements(), key=lambda e: str(e.id))],
        "relations": [
            {"subject": str(t.subject), "predicate": str(t.predicate),
             "object": str(t.object)}
            for t in wm.relations()
        ],
    }


def _wm_at_version(deployment: Deployment, version: int) -> WorldModel:
    events = deployment.wm.history_since(0)
    replica = WorldModel(deployment.wm.ontology, create_root=False)
    for event in events:
        if event.version > version:
            break
        replica.apply_event(event)
    return replica


def _parse_pose(raw: Optional[dict]) -> Optional[Pose]:
    if not raw:
        return None
    return Pose.from_values(raw["position"], raw.get("orientation", (1, 0, 0, 0)))


def _parse_properties(raw: Optional[dict]) -> Optional[dict]:
    if raw is None:
        return None
    return {Iri.parse(k): [Literal(v) for v in vals] for k, vals in raw.items()}


def create_app(deployment: Deployment) -> FastAPI:
    app = FastAPI(title="skillkit", version="0.1.0")
    dep = deployment

    async def handle(request: Request, exc: Exception):
        return _error_response(exc)

    for exc_type in _HANDLED:
        app.add_exception_handler(exc_type, handle)

    @app.get("/v1/skills")
    def skills() -> list:
        out = []
        for manager in dep.managers:
            for desc in manager.registry.descriptions():
                out.append(skill_record(manager, desc))
        return out

    # -- world model -------------------------------------------------------
    @app.get("/v1/wm")
    def wm_snapshot(version: Optional[int] = None):
        if version is None:
            return _wm_record(dep.wm)
        if version > dep.wm.version:
            raise WorldModelError(f"version {version} is ahead of head {dep.wm.version}")
        record = _wm_record(_wm_at_version(dep, version))
        record["version"] = version
        return record

    @app.get("/v1/wm/instances")
    def instances(concept: str = Query(...)):
        snap = dep.wm.snapshot()
        return [str(i) for i in snap.instances_of(Iri.parse(concept))]

    @app.post("/v1/wm/elements", status_code=201)
    def add_element(body: dict):
        element_id = dep.wm.add_element(
            Iri.parse(body["type"]),
            label=body.get("label", ""),
            properties=_parse_properties(body.get("properties")) or {},
            pose=_parse_pose(body.get("pose")),
            parent=Iri.parse(body["parent"]) if body.get("parent") else None,
            element_id=Iri.parse(body["id"]) if body.get("id") else None,
        )
        return dep.wm.element(element_id).to_record()

    @app.get("/v1/wm/elements/{element_id}")
    def get_element(element_id: str):
        return dep.wm.element(Iri.parse(element_id)).to_record()

    @app.patch("/v1/wm/elements/{element_id}")
    def patch_element(element_id: str, body: dict):
        wm = dep.wm
        eid = Iri.parse(element_id)
        kwargs = {}
        if "label" in body:
            kwargs["label"] = body["label"]
        if "properties" in body:
            kwargs["properties"] = _parse_properties(body["properties"])
        if "pose" in body:
            kwargs["pose"] = _parse_pose(body["pose"])
        wm.update_element(eid, **kwargs)
        return wm.element(eid).to_record()

    @app.delete("/v1/wm/elements/{element_id}", status_code=204)
    def delete_element(element_id: str, recursive: bool = False):
        dep.wm.remove_element(Iri.parse(element_id), recursive=recursive)

    @app.put("/v1/wm/relations")
    def put_relation(body: dict):
        version = dep.wm.set_relation(
            Iri.parse(body["subject"]),
            Iri.parse(body["predicate"]),
            Iri.parse(body["object"]),
            bool(body.get("state", True)),
        )
        return {"version": version}

    # -- tasks ---------------------------------------------------------------
    @app.post("/v1/tasks", status_code=201)
    def start_task(body: dict):
        manager = dep.manager(body["manager"]) if body.get("manager") else dep.managers[0]
        task_id = manager.start_task(
            body["skill"], body.get("params", {}), body.get("implementation"))
        return manager.task(task_id).to_record()

    @app.get("/v1/tasks")
    def tasks():
        return [t.to_record() for m in dep.managers for t in m.tasks()]

    @app.get("/v1/tasks/{task_id}")
    def get_task(task_id: str):
        manager = dep.find_task_manager(task_id)
        task = manager.task(task_id)
        record = task.to_record()
        record["tree"] = task.root.dump()
        return record

    @app.delete("/v1/tasks/{task_id}")
    def stop_task(task_id: str):
        manager = dep.find_task_manager(task_id)
        manager.stop_task(task_id)
        return manager.task(task_id).to_record()

    # -- missions --------------------------------------------------------------
    @app.post("/v1/missions", status_code=201)
    def submit_mission(body: dict):
        mission_id = dep.missions.submit_goal(body["goal"], body.get("requester", ""))
        return dep.missions.mission(mission_id).to_record()

    @app.get("/v1/missions")
    def missions():
        return [m.to_record() for m in dep.missions.missions()]

    @app.get("/v1/missions/{mission_id}")
    def get_mission(mission_id: str):
        record = dep.missions.mission(mission_id).to_record()
        record["events"] = dep.missions.monitor(mission_id)
        return record

    # -- planning --------------------------------------------------------------
    @app.get("/v1/pddl")
    def pddl(goal: str = Query(...)):
        literals = parse_goal_text(goal.replace(";", "\n"))
        descriptions = []
        for manager in dep.managers:
            descriptions.extend(manager.registry.descriptions())
        domain = generate_domain(descriptions, dep.wm.ontology)
        problem = generate_problem(dep.wm.snapshot(), literals, domain)
        return {
            "domain": emit_pddl_domain(domain),
            "problem": emit_pddl_problem(problem),
            "exclusions": domain.exclusions,
        }

    # -- events ------------------------------------------------------------------
    @app.websocket("/v1/events")
    async def events(ws: WebSocket, from_seq: int = Query(default=-1, alias="from")):
        await ws.accept()
        sub = dep.events.subscribe(from_seq)

        def poll():
            return sub.next(timeout=0.2)

        try:
            async with anyio.create_task_group() as tg:
                async def watch_disconnect():
                    while True:
                        message = await ws.receive()
                        if message["type"] == "websocket.disconnect":
                            tg.cancel_scope.cancel()
                            return

                tg.start_soon(watch_disconnect)
                while True:
                    record = await anyio.to_thread.run_sync(poll)
                    if record is not None:
                        await ws.send_json(record)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            sub.close()

    @app.get("/v1/events/history")
    def event_history(from_seq: int = Query(default=-1, alias="from")):
        return [e for e in dep.events.history() if e["seq"] > from_seq]

    # -- console -----------------------------------------------------------------
    console = dep.console_dir
    if console is None:
        fallback = Path.cwd() / "frontend" / "dist"
        console = fallback if fallback.is_dir() else None
    if console is not None and Path(console).is_dir():
        app.mount("/console", StaticFiles(directory=str(console), html=True),
                  name="console")

        @app.get("/", include_in_schema=False)
        def index():
            return HTMLResponse('<meta http-equiv="refresh" content="0; url=/console/">')
    else:
        @app.get("/", include_in_schema=False)
        def index():
            return {"service": "skillkit", "docs": "/docs"}

    return app
