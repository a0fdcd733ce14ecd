"""One-config deployments: world model, skill managers, mission coordinator.

The same object graph backs the CLI one-shots (stepped deterministically),
the test suites, and `skillkit serve` (paced by wall-clock tickers).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .manager import EventBus, ManagerConfig, SkillManager, Ticker
from .missions import MissionManager
from .ontology import Graph, parse_turtle
from .sim import SimScenario
from .world import WorldModel


class DeployError(Exception):
    code = "deploy_error"


def data_path(*parts) -> Path:
    node = resources.files("skillkit").joinpath("data")
    for part in parts:
        node = node.joinpath(part)
    return Path(str(node))


def load_base_ontology(extra_paths: Optional[list] = None) -> Graph:
    graph = parse_turtle(data_path("base.ttl").read_text(encoding="utf-8"))
    for path in extra_paths or []:
        graph.update(parse_turtle(Path(path).read_text(encoding="utf-8")))
    graph.validate_subclass_acyclic()
    return graph


@dataclass
class Deployment:
    wm: WorldModel
    managers: list
    missions: MissionManager
    scenario: SimScenario
    api_port: int = 8000
    console_dir: Optional[Path] = None
    _wm_feed: object = None
    _manager_feeds: list = field(default_factory=list)
    _mission_feed: object = None
    _tickers: list = field(default_factory=list)
    events: EventBus = field(default_factory=lambda: EventBus(horizon=10_000))

    def __post_init__(self):
        self._wm_feed = self.wm.subscribe_changes(0)
        self._manager_feeds = [(m, m.events.subscribe()) for m in self.managers]
        self._mission_feed = self.missions.events.subscribe()

    def manager(self, name: str) -> SkillManager:
        for m in self.managers:
            if m.config.name == name:
                return m
        raise DeployError(f"unknown manager '{name}'")

    def find_task_manager(self, task_id: str) -> SkillManager:
        for m in self.managers:
            if task_id.startswith(m.config.name + "-"):
                return m
        raise DeployError(f"no manager owns task '{task_id}'")

    @property
    def clock(self) -> float:
        return max((m.clock() for m in self.managers), default=0.0)

    def pump_events(self):
        """Forward source events into the unified, sequence-numbered feed."""
        for event in self._wm_feed.drain():
            self.events.emit({"type": "wm", "event": event.to_record()})
        for manager, feed in self._manager_feeds:
            for record in feed.drain():
                payload = dict(record)
                payload.pop("seq", None)
                self.events.emit({"type": "task", "manager": manager.config.name,
                                  "event": payload})
        for record in self._mission_feed.drain():
            payload = dict(record)
            payload.pop("seq", None)
            self.events.emit({"type": "mission", "event": payload})

    def step(self):
        """One deterministic tick: managers, due faults, missions, event pump."""
        for manager in self.managers:
            manager.step()
        now = self.clock
        for fault in self.scenario.faults:
            if not fault.applied and now >= fault.at:
                fault.apply(self.wm)
                fault.applied = True
        self.missions.step()
        self.pump_events()

    def run_until(self, predicate, max_ticks: int = 20_000) -> int:
        for ticks in range(1, max_ticks + 1):
            self.step()
            if predicate():
                return ticks
        raise TimeoutError(f"condition not reached within {max_ticks} ticks")

    def start_tickers(self):
        """Wall-clock pacing for `serve`: one ticker per manager rate."""
        rate = max(m.config.rate for m in self.managers) if self.managers else 20.0
        self._tickers = [Ticker(self.step, rate).start()]

    def stop_tickers(self):
        for ticker in self._tickers:
            ticker.stop()
        self._tickers = []


def _resolve(base_dir: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else base_dir / path


def load_deployment(source, base_dir: Optional[Path] = None) -> Deployment:
    """Build a deployment from a YAML file path or a pre-parsed dict."""
    if isinstance(source, dict):
        config = source
        base_dir = Path(base_dir) if base_dir else Path.cwd()
    else:
        path = Path(source)
        if not path.is_file():
            bundled = data_path(f"{source}.yaml")
            if bundled.is_file():
                path = bundled
            else:
                raise DeployError(f"deployment config '{source}' not found")
        with open(path, "r", encoding="utf-8") as fh:
            config = yaml.safe_load(fh) or {}
        base_dir = path.parent
    if not isinstance(config, dict):
        raise DeployError("deployment config is not a mapping")

    wm_cfg = config.get("world_model", {})
    ontology = load_base_ontology(
        [_resolve(base_dir, p) for p in wm_cfg.get("ontologies", [])])
    wm = WorldModel(ontology)
    if wm_cfg.get("scene"):
        wm.load_scene(_resolve(base_dir, wm_cfg["scene"]))

    raw_scenario = config.get("scenario", {})
    if isinstance(raw_scenario, str):
        scenario = SimScenario.from_file(_resolve(base_dir, raw_scenario))
    else:
        scenario = SimScenario.from_dict(raw_scenario or {})
    if scenario.scene_path:
        wm.load_scene(_resolve(base_dir, scenario.scene_path))

    managers = []
    for raw in config.get("managers", []):
        mc = ManagerConfig(
            name=raw["name"],
            robot=raw["robot"],
            libraries=list(raw.get("libraries", ["core"])),
            rate=float(raw.get("rate", 20.0)),
            library_configs=dict(raw.get("library_configs", {})),
        )
        manager = SkillManager(wm, mc)
        manager.load_skills()
        _apply_durations(manager, scenario)
        managers.append(manager)

    missions = MissionManager(wm, managers,
                              replan_budget=int(config.get("replan_budget", 3)))
    console_dir = None
    if config.get("console_dir"):
        console_dir = _resolve(base_dir, config["console_dir"])
    api_cfg = config.get("api", {})
    return Deployment(
        wm=wm,
        managers=managers,
        missions=missions,
        scenario=scenario,
        api_port=int(api_cfg.get("port", 8000)),
        console_dir=console_dir,
    )


def _apply_durations(manager: SkillManager, scenario: SimScenario):
    if not scenario.durations:
        return
    for desc in manager.registry.descriptions():
        for impl in manager.registry.implementations(desc.name):
            seconds = scenario.durations.get(impl.label,
                                             scenario.durations.get(impl.base))
            if seconds is not None:
                impl.config["duration"] = float(seconds)
