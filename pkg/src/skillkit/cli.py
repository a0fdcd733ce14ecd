"""Operator command line.

Local commands bring the deployment up in-process from ``--config`` and
step it deterministically; passing ``--url`` targets a running ``serve``
instance over HTTP instead. Exit codes: 1 usage, 2 validation, 3 runtime.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .deploy import DeployError, load_deployment
from .library import LibraryError, load_library
from .manager import ManagerError
from .missions import MissionError
from .ontology import Iri, OntologyError
from .planning import (
    PlanningError,
    emit_pddl_domain,
    emit_pddl_problem,
    generate_domain,
    generate_problem,
    parse_goal_text,
    plan as solve,
)
from .skills import SkillError
from .world import WorldModelError

_VALIDATION_ERRORS = (OntologyError, WorldModelError, SkillError, LibraryError,
                      PlanningError, DeployError, ValueError)
_RUNTIME_ERRORS = (ManagerError, MissionError, TimeoutError, OSError)

USAGE_EXIT = 1
VALIDATION_EXIT = 2
RUNTIME_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _goal_from(arg: str) -> str:
    path = Path(arg)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    return arg.replace(";", "\n")


def _parse_kv(pairs: list) -> dict:
    out = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {pair!r}")
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _http(url: str):
    import httpx

    return httpx.Client(base_url=url.rstrip("/"), timeout=30.0)


def _print_json(data):
    print(json.dumps(data, indent=2, default=str))


# -- commands ----------------------------------------------------------------

def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    dep = load_deployment(args.config)
    if args.console:
        dep.console_dir = Path(args.console)
    app = create_app(dep)
    dep.start_tickers()
    try:
        uvicorn.run(app, host=args.host, port=args.port or dep.api_port,
                    log_level="warning")
    finally:
        dep.stop_tickers()
    return 0


def cmd_validate(args) -> int:
    problems = []
    if not (args.config or args.scene or args.library):
        args.config = "deploy_sim"
    deployment = None
    if args.config:
        try:
            deployment = load_deployment(args.config)
            for manager in deployment.managers:
                for diag in manager.diagnostics:
                    print(f"note: {diag}")
        except _VALIDATION_ERRORS as exc:
            problems.append(str(exc))
    if args.scene:
        try:
            from .deploy import load_base_ontology
            from .world import WorldModel

            wm = deployment.wm if deployment else \
                WorldModel(load_base_ontology(args.ontology or []))
            wm.load_scene(args.scene)
        except _VALIDATION_ERRORS as exc:
            problems.append(str(exc))
    known = {}
    for library in args.library or []:
        try:
            manifest = load_library(library, known)
            known.update({d.name: d for d in manifest.descriptions})
        except _VALIDATION_ERRORS as exc:
            problems.append(str(exc))
    if problems:
        for problem in problems:
            print(f"invalid: {problem}", file=sys.stderr)
        return VALIDATION_EXIT
    print("ok")
    return 0


def cmd_wm(args) -> int:
    if args.url:
        with _http(args.url) as client:
            if args.wm_cmd == "dump":
                data = client.get("/v1/wm").json()
                _print_json(data)
            elif args.wm_cmd == "set":
                response = client.put("/v1/wm/relations", json={
                    "subject": args.subject, "predicate": args.predicate,
                    "object": args.object, "state": not args.clear})
                response.raise_for_status()
                _print_json(response.json())
            else:
                print("error: wm load over --url is not supported; use the API",
                      file=sys.stderr)
                return USAGE_EXIT
        return 0
    dep = load_deployment(args.config)
    if args.wm_cmd == "dump":
        print(dep.wm.dump_scene(), end="")
    elif args.wm_cmd == "load":
        dep.wm.load_scene(args.scene)
        print(dep.wm.dump_scene(), end="")
    elif args.wm_cmd == "set":
        version = dep.wm.set_relation(
            Iri.parse(args.subject), Iri.parse(args.predicate),
            Iri.parse(args.object), not args.clear)
        print(f"version {version}")
    return 0


def cmd_skill(args) -> int:
    if args.skill_cmd == "stop":
        if not args.url:
            print("error: skill stop needs --url of a running server", file=sys.stderr)
            return USAGE_EXIT
        with _http(args.url) as client:
            response = client.delete(f"/v1/tasks/{args.task_id}")
            if response.status_code >= 400:
                _print_json(response.json())
                return RUNTIME_EXIT
            _print_json(response.json())
        return 0
    if args.url:
        with _http(args.url) as client:
            if args.skill_cmd == "list":
                _print_json(client.get("/v1/skills").json())
                return 0
            body = {"skill": args.name, "params": _parse_kv(args.params)}
            if args.implementation:
                body["implementation"] = args.implementation
            response = client.post("/v1/tasks", json=body)
            if response.status_code >= 400:
                _print_json(response.json())
                return RUNTIME_EXIT
            record = response.json()
            print(f"task {record['id']} started")
            while record["state"] == "running":
                time.sleep(0.1)
                record = client.get(f"/v1/tasks/{record['id']}").json()
            _print_json(record)
            return 0 if record["state"] == "succeeded" else RUNTIME_EXIT
    dep = load_deployment(args.config)
    if args.skill_cmd == "list":
        for manager in dep.managers:
            for desc in manager.registry.descriptions():
                impls = ", ".join(i.label for i in
                                  manager.registry.implementations(desc.name))
                params = ", ".join(f"{p.key}({p.flavor.value})" for p in desc.params)
                print(f"{desc.name} [{manager.config.name}] params: {params}"
                      f" impls: {impls}")
        return 0
    manager = dep.manager(args.manager) if args.manager else dep.managers[0]
    task_id = manager.start_task(args.name, _parse_kv(args.params), args.implementation)
    dep.run_until(lambda: manager.task(task_id).terminal)
    task = manager.task(task_id)
    print(f"task {task.id}: {task.state}"
          + (f" ({task.message})" if task.message else ""))
    return 0 if task.state == "succeeded" else RUNTIME_EXIT


def cmd_plan(args) -> int:
    dep = load_deployment(args.config)
    literals = parse_goal_text(_goal_from(args.goal))
    descriptions = []
    for manager in dep.managers:
        descriptions.extend(manager.registry.descriptions())
    domain = generate_domain(descriptions, dep.wm.ontology)
    for note in domain.exclusions:
        print(f"note: {note}", file=sys.stderr)
    problem = generate_problem(dep.wm.snapshot(), literals, domain)
    if args.emit_pddl:
        out = Path(args.emit_pddl)
        out.mkdir(parents=True, exist_ok=True)
        (out / "domain.pddl").write_text(emit_pddl_domain(domain), encoding="utf-8")
        (out / "problem.pddl").write_text(emit_pddl_problem(problem), encoding="utf-8")
        print(f"wrote {out / 'domain.pddl'} and {out / 'problem.pddl'}", file=sys.stderr)
    result = solve(domain, problem)
    for step in result.steps:
        print(step.signature())
    if not result.steps:
        print("; empty plan: goal already satisfied")
    return 0


def cmd_mission(args) -> int:
    if args.mission_cmd == "watch":
        if not args.url:
            print("error: mission watch needs --url of a running server", file=sys.stderr)
            return USAGE_EXIT
        with _http(args.url) as client:
            seen = 0
            while True:
                record = client.get(f"/v1/missions/{args.mission_id}").json()
                events = record.get("events", [])
                for event in events[seen:]:
                    _print_json(event)
                seen = len(events)
                if record["state"] not in ("planning", "executing"):
                    print(f"mission {record['id']}: {record['state']}")
                    return 0 if record["state"] == "succeeded" else RUNTIME_EXIT
                time.sleep(0.2)
    goal = _goal_from(args.goal)
    if args.url:
        with _http(args.url) as client:
            response = client.post("/v1/missions", json={"goal": goal})
            if response.status_code >= 400:
                _print_json(response.json())
                return RUNTIME_EXIT
            record = response.json()
            print(f"mission {record['id']} submitted")
            while record["state"] in ("planning", "executing"):
                time.sleep(0.2)
                record = client.get(f"/v1/missions/{record['id']}").json()
            _print_json(record)
            return 0 if record["state"] == "succeeded" else RUNTIME_EXIT
    dep = load_deployment(args.config)
    mission_id = dep.missions.submit_goal(goal)
    dep.run_until(lambda: not dep.missions.mission(mission_id).active)
    mission = dep.missions.mission(mission_id)
    for event in dep.missions.monitor(mission_id):
        kind = event["kind"]
        if kind == "planned":
            print("plan:")
            for line in event["plan"]:
                print(f"  {line}")
        elif kind == "step_started":
            print(f"step {event['step']['index']} started: {event['step']['skill']}")
        elif kind == "step_finished":
            print(f"step {event['step']['index']} {event['step']['state']}")
        elif kind == "replanning":
            print(f"replanning (attempt {event['attempt']})")
    print(f"mission {mission.id}: {mission.state}"
          + (f" ({mission.detail})" if mission.detail else ""))
    return 0 if mission.state == "succeeded" else RUNTIME_EXIT


def build_parser() -> _Parser:
    parser = _Parser(prog="skillkit",
                     description="Skill-based robot control platform")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--config", default="deploy_sim",
                       help="deployment config path or bundled name (default: deploy_sim)")
        p.add_argument("--url", default=None, help="target a running server instead")

    p = sub.add_parser("serve", help="run the service with API and console")
    p.add_argument("--config", default="deploy_sim")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--console", default=None, help="static console directory")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("validate", help="validate ontologies, scenes and manifests")
    p.add_argument("--config", default=None)
    p.add_argument("--scene", default=None)
    p.add_argument("--ontology", action="append", default=None)
    p.add_argument("--library", action="append", default=None)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("wm", help="world model operations")
    wm_sub = p.add_subparsers(dest="wm_cmd", required=True)
    d = wm_sub.add_parser("dump")
    add_config(d)
    d.set_defaults(fn=cmd_wm)
    l = wm_sub.add_parser("load")
    add_config(l)
    l.add_argument("scene")
    l.set_defaults(fn=cmd_wm)
    s = wm_sub.add_parser("set")
    add_config(s)
    s.add_argument("subject")
    s.add_argument("predicate")
    s.add_argument("object")
    s.add_argument("--clear", action="store_true", help="retract instead of assert")
    s.set_defaults(fn=cmd_wm)

    p = sub.add_parser("skill", help="list, run or stop skills")
    skill_sub = p.add_subparsers(dest="skill_cmd", required=True)
    sl = skill_sub.add_parser("list")
    add_config(sl)
    sl.set_defaults(fn=cmd_skill)
    sr = skill_sub.add_parser("run")
    add_config(sr)
    sr.add_argument("name")
    sr.add_argument("params", nargs="*", help="key=value bindings")
    sr.add_argument("--implementation", default=None)
    sr.add_argument("--manager", default=None)
    sr.set_defaults(fn=cmd_skill)
    ss = skill_sub.add_parser("stop")
    add_config(ss)
    ss.add_argument("task_id")
    ss.set_defaults(fn=cmd_skill)

    p = sub.add_parser("plan", help="plan a goal and optionally emit PDDL")
    p.add_argument("--config", default="deploy_sim")
    p.add_argument("--goal", required=True, help="goal file or inline text")
    p.add_argument("--emit-pddl", default=None, metavar="DIR")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("mission", help="submit or watch missions")
    mission_sub = p.add_subparsers(dest="mission_cmd", required=True)
    ms = mission_sub.add_parser("submit")
    add_config(ms)
    ms.add_argument("--goal", required=True)
    ms.set_defaults(fn=cmd_mission)
    mw = mission_sub.add_parser("watch")
    add_config(mw)
    mw.add_argument("mission_id")
    mw.set_defaults(fn=cmd_mission)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        return args.fn(args)
    except _VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VALIDATION_EXIT
    except _RUNTIME_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT
    except KeyboardInterrupt:
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
