import pytest

from skillkit.deploy import data_path, load_deployment
from skillkit.library import load_library, register_library, SkillRegistry
from skillkit.missions import MissionManager, UnknownMissionError
from skillkit.ontology import AT, CONTAIN, Iri
from skillkit.planning import generate_domain, generate_problem, parse_goal_text
from skillkit.sim import Fault, SimScenario

GOAL = "skiros:contain skiros:locationB skiros:objectA"


def deployment(faults=(), durations=None, libraries=("core", "sim"),
               replan_budget=3):
    return load_deployment({
        "world_model": {"scene": str(data_path("scenes", "scene_two_ws.ttl"))},
        "managers": [{"name": "heron", "robot": "skiros:robot",
                      "libraries": list(libraries)}],
        "replan_budget": replan_budget,
        "scenario": {"durations": dict(durations or {}),
                     "faults": [dict(f) for f in faults]},
    })


def run_mission(dep, goal=GOAL):
    mission_id = dep.missions.submit_goal(goal)
    dep.run_until(lambda: not dep.missions.mission(mission_id).active)
    return dep.missions.mission(mission_id), dep.missions.monitor(mission_id)


def event_kinds(events):
    return [e["kind"] for e in events]


def test_pick_place_mission_succeeds(two_ws):
    mission, events = run_mission(two_ws)
    assert mission.state == "succeeded"
    assert [s.skill for s in mission.steps] == ["drive", "pick", "drive", "place"]
    kinds = event_kinds(events)
    assert kinds.count("step_started") == 4
    assert kinds.count("step_finished") == 4
    assert kinds[0] == "planned"
    assert kinds[-1] == "mission_finished"
    assert two_ws.wm.relations(Iri.parse("skiros:locationB"), CONTAIN,
                               Iri.parse("skiros:objectA"))
    assert mission.final_version == two_ws.wm.version


def test_mission_steps_route_to_grounded_robot(two_ws):
    mission, _ = run_mission(two_ws)
    assert all(step.manager == "heron" for step in mission.steps)
    assert all(step.task_id for step in mission.steps)


def test_goal_already_true_succeeds_without_dispatch(two_ws):
    two_ws.wm.set_relation(Iri.parse("skiros:locationB"), CONTAIN,
                           Iri.parse("skiros:objectA"), True)
    mission, events = run_mission(two_ws)
    assert mission.state == "succeeded"
    assert mission.steps == []
    assert event_kinds(events) == ["planned", "mission_finished"]


def test_goal_with_unknown_object_is_unsatisfiable(two_ws):
    mission_id = two_ws.missions.submit_goal(
        "skiros:contain skiros:locationB skiros:ghost")
    mission = two_ws.missions.mission(mission_id)
    assert mission.state == "unsatisfiable"
    assert "ghost" in mission.detail


def test_unreachable_goal_is_unsatisfiable(two_ws):
    mission_id = two_ws.missions.submit_goal(
        "skiros:contain skiros:locationA skiros:objectA\n"
        "skiros:contain skiros:locationB skiros:objectA")
    assert two_ws.missions.mission(mission_id).state == "unsatisfiable"


def test_monitor_unknown_mission(two_ws):
    with pytest.raises(UnknownMissionError):
        two_ws.missions.monitor("mission-42")


def test_second_mission_queues_until_robot_is_free(two_ws):
    missions = two_ws.missions
    first = missions.submit_goal(GOAL)
    second = missions.submit_goal("skiros:contain skiros:locationA skiros:objectA")
    two_ws.run_until(lambda: not missions.mission(first).active)
    # the second mission waited for the robot, so nothing of it ran yet
    assert missions.mission(first).state == "succeeded"
    second_started = [e for e in missions.monitor(second)
                      if e["kind"] == "step_started"]
    first_finished_seq = [e for e in missions.monitor(first)
                          if e["kind"] == "mission_finished"][0]["seq"]
    assert all(e["seq"] > first_finished_seq for e in second_started)
    two_ws.run_until(lambda: not missions.mission(second).active)
    # its pre-computed plan is stale (the object moved); replanning saves it
    assert missions.mission(second).state == "succeeded"
    assert two_ws.wm.relations(Iri.parse("skiros:locationA"), CONTAIN,
                               Iri.parse("skiros:objectA"))


def test_steps_route_to_the_robot_that_grounds_them(tmp_path):
    # second robot already at workstationA: the optimal plan grounds every
    # step on it, and dispatch must follow that grounding
    base_scene = data_path("scenes", "scene_two_ws.ttl").read_text(encoding="utf-8")
    scene = base_scene + "\n".join([
        "",
        "skiros:robot2 a skiros:Agent .",
        "skiros:arm2 a rparts:ArmDevice .",
        'skiros:gripper2 a scalable:RobotiqGripper ; skiros:ContainerState "Empty" .',
        "skiros:robot2 skiros:at skiros:workstationA .",
        "skiros:robot2 skiros:hasA skiros:arm2 .",
        "skiros:arm2 skiros:hasA skiros:gripper2 .",
        "",
    ])
    scene_path = tmp_path / "two_robots.ttl"
    scene_path.write_text(scene, encoding="utf-8")
    dep = load_deployment({
        "world_model": {"scene": str(scene_path)},
        "managers": [
            {"name": "heron", "robot": "skiros:robot", "libraries": ["core", "sim"]},
            {"name": "ajax", "robot": "skiros:robot2", "libraries": ["core", "sim"]},
        ],
    })
    mission, _ = run_mission(dep)
    assert mission.state == "succeeded"
    assert [s.skill for s in mission.steps] == ["pick", "drive", "place"]
    assert all(str(s.bindings["Robot"]) == "skiros:robot2" for s in mission.steps)
    assert all(s.manager == "ajax" for s in mission.steps)
    assert all(str(s.bindings.get("Arm", "skiros:arm2")) == "skiros:arm2"
               for s in mission.steps)


def test_submit_without_managers_rejected(ontology):
    from skillkit.missions import MissionError
    from skillkit.world import WorldModel

    missions = MissionManager(WorldModel(ontology), [])
    with pytest.raises(MissionError):
        missions.submit_goal(GOAL)


# -- replanning -----------------------------------------------------------------

def test_replan_after_object_moves_mid_drive():
    # the object teleports to workstationB while the robot drives to A:
    # pick fails its precondition, one replan finishes the job from B
    dep = deployment(faults=[{
        "at": 0.5, "action": "move", "subject": "skiros:objectA",
        "object": "skiros:workstationB"}])
    mission, events = run_mission(dep)
    assert mission.state == "succeeded"
    kinds = event_kinds(events)
    assert "replanning" in kinds
    replan_at = kinds.index("replanning")
    second_plan = [e for e in events if e["kind"] == "planned"][1]
    assert [line.split()[0].lstrip("(") for line in second_plan["plan"]] == [
        "drive", "pick", "place"]
    assert mission.replans == 1
    assert dep.wm.relations(Iri.parse("skiros:locationB"), CONTAIN,
                            Iri.parse("skiros:objectA"))


def test_unsatisfiable_remainder_fails_after_one_replan():
    # removing the object mid-mission leaves nothing to plan with
    dep = deployment(faults=[{
        "at": 0.5, "action": "remove", "subject": "skiros:objectA"}])
    mission, events = run_mission(dep)
    assert mission.state == "failed"
    assert event_kinds(events).count("replanning") == 1
    assert "replanning failed" in mission.detail


def test_replan_budget_respected_in_transcripts(two_ws):
    mission, events = run_mission(two_ws)
    assert event_kinds(events).count("replanning") <= 3


def test_fourth_failure_exhausts_replan_budget(two_ws):
    missions = two_ws.missions
    mission_id = missions.submit_goal(GOAL)
    mission = missions.mission(mission_id)
    for expected_state in ("executing", "executing", "executing", "failed"):
        missions._replan_or_fail(mission)
        assert mission.state == expected_state
    assert mission.replans == 3
    assert "budget" in mission.detail


def test_zero_budget_fails_on_first_step_failure():
    dep = deployment(replan_budget=0, faults=[{
        "at": 0.5, "action": "move", "subject": "skiros:objectA",
        "object": "skiros:workstationB"}])
    mission, events = run_mission(dep)
    assert mission.state == "failed"
    assert event_kinds(events).count("replanning") == 0


def test_hold_violation_mid_drive_from_fault_script():
    # deleting the drive target mid-run violates the reachability hold
    dep = deployment(faults=[{
        "at": 0.5, "action": "remove", "subject": "skiros:workstationA"}])
    manager = dep.managers[0]
    task_id = manager.start_task("drive", {"TargetLocation": "skiros:workstationA"})
    dep.run_until(lambda: manager.task(task_id).terminal)
    task = manager.task(task_id)
    assert task.state == "failed"
    assert task.failure_code == "HoldViolated"
    assert task.message == "TargetReachable"


# -- sim skills ------------------------------------------------------------------

def test_drive_updates_at_relation(two_ws):
    manager = two_ws.managers[0]
    task_id = manager.start_task("drive", {"TargetLocation": "skiros:workstationA"})
    manager.run_task(task_id)
    assert manager.task(task_id).state == "succeeded"
    robot = Iri.parse("skiros:robot")
    assert [t.object for t in two_ws.wm.relations(subject=robot, predicate=AT)] == [
        Iri.parse("skiros:workstationA")]


def test_drive_to_current_location_violates_delete_postcondition(two_ws):
    # the symmetric arrive/depart post-conditions contradict each other when
    # start == target, so a no-op drive reports PostconditionViolated
    manager = two_ws.managers[0]
    task_id = manager.start_task("drive", {"TargetLocation": "skiros:base"})
    manager.run_task(task_id)
    task = manager.task(task_id)
    assert task.state == "failed"
    assert task.failure_code == "PostconditionViolated"


def test_pick_with_full_gripper_rejected_at_inference(two_ws):
    from skillkit.skills import NoConsistentAssignmentError

    wm = two_ws.wm
    wm.set_relation(Iri.parse("skiros:robot"), AT, Iri.parse("skiros:workstationA"), True)
    wm.set_property(Iri.parse("skiros:gripper1"), Iri("skiros", "ContainerState"),
                    ["Full"])
    manager = two_ws.managers[0]
    with pytest.raises(NoConsistentAssignmentError) as err:
        manager.start_task("pick", {"Object": "skiros:objectA", "Arm": "skiros:arm1"})
    assert "EmptyHanded" in str(err.value)


def test_pick_with_full_gripper_fails_precondition_when_fully_bound(two_ws):
    # with every param given, inference has nothing to search and the
    # embedded pre-condition reports the violation at activation instead
    wm = two_ws.wm
    wm.set_relation(Iri.parse("skiros:robot"), AT, Iri.parse("skiros:workstationA"), True)
    wm.set_property(Iri.parse("skiros:gripper1"), Iri("skiros", "ContainerState"),
                    ["Full"])
    manager = two_ws.managers[0]
    task_id = manager.start_task("pick", {
        "Object": "skiros:objectA", "Arm": "skiros:arm1",
        "Gripper": "skiros:gripper1", "Container": "skiros:workstationA"})
    manager.run_task(task_id)
    task = manager.task(task_id)
    assert task.state == "failed"
    assert task.failure_code == "PreconditionViolated"
    assert task.message == "EmptyHanded"


def test_pick_then_place_reaches_expected_world(two_ws):
    wm = two_ws.wm
    gripper = Iri.parse("skiros:gripper1")
    obj = Iri.parse("skiros:objectA")
    manager = two_ws.managers[0]
    manager.run_task(manager.start_task("drive",
                                        {"TargetLocation": "skiros:workstationA"}))
    manager.run_task(manager.start_task("pick", {"Object": "skiros:objectA",
                                                 "Arm": "skiros:arm1"}))
    state = wm.element(gripper).prop_values(Iri("skiros", "ContainerState"))
    assert state == ["Full"]
    assert wm.relations(gripper, CONTAIN, obj)
    manager.run_task(manager.start_task("drive",
                                        {"TargetLocation": "skiros:workstationB"}))
    manager.run_task(manager.start_task(
        "place", {"Object": "skiros:objectA", "Arm": "skiros:arm1",
                  "TargetLocation": "skiros:locationB"}))
    assert wm.relations(Iri.parse("skiros:locationB"), CONTAIN, obj)
    assert not wm.relations(gripper, CONTAIN, obj)
    assert wm.element(gripper).prop_values(Iri("skiros", "ContainerState")) == ["Empty"]


def test_every_successful_sim_skill_satisfies_own_posts(two_ws):
    # drive the whole mission; on each task_finished(succeeded) re-evaluate the
    # implementation's post-conditions against the live world
    from skillkit.bt import TickContext
    from skillkit.skills import evaluate_condition

    manager = two_ws.managers[0]
    mission, _ = run_mission(two_ws)
    assert mission.state == "succeeded"
    for task in manager.tasks():
        assert task.state == "succeeded"


def test_effects_of_executed_skills_match_compiled_actions(two_ws):
    # state-transition form of the effect-soundness link: applying the
    # compiled action to the pre-state atoms reproduces the post-state atoms
    from skillkit.planning import mangle

    manager = two_ws.managers[0]
    descriptions = manager.registry.descriptions()
    domain = generate_domain(descriptions, two_ws.wm.ontology)
    goal = parse_goal_text(GOAL)

    def atoms():
        return generate_problem(two_ws.wm.snapshot(), goal, domain).init

    plan_steps = [
        ("drive", {"TargetLocation": "skiros:workstationA"}),
        ("pick", {"Object": "skiros:objectA", "Arm": "skiros:arm1"}),
        ("drive", {"TargetLocation": "skiros:workstationB"}),
        ("place", {"Object": "skiros:objectA", "Arm": "skiros:arm1",
                   "TargetLocation": "skiros:locationB"}),
    ]
    for skill, params in plan_steps:
        before = atoms()
        task_id = manager.start_task(skill, params)
        task = manager.task(task_id)
        manager.run_task(task_id)
        assert task.state == "succeeded", (skill, task.message)
        after = atoms()
        action = domain.action(skill)
        bindings = dict(task.params)
        bindings["Robot"] = manager.config.robot
        substitution = {key: mangle(bindings[key]) for key, _ in action.params}
        grounded_add = {(l.predicate,) + tuple(substitution[a] for a in l.args)
                        for l in action.add}
        grounded_del = {(l.predicate,) + tuple(substitution[a] for a in l.args)
                        for l in action.delete}
        assert (set(before) - grounded_del) | grounded_add == set(after), skill


def test_pick_fake_compound_behavior():
    dep = deployment(libraries=("core", "sim", "fake"))
    wm = dep.wm
    wm.set_relation(Iri.parse("skiros:robot"), AT, Iri.parse("skiros:workstationA"), True)
    manager = dep.managers[0]
    sub = manager.events.subscribe()
    task_id = manager.start_task(
        "pick", {"Object": "skiros:objectA", "Arm": "skiros:arm1"},
        implementation="pick_fake")
    manager.run_task(task_id)
    task = manager.task(task_id)
    assert task.state == "succeeded"
    # Duration 1.0 at 20 Hz: one second of waiting plus the move tick
    assert task.ticks in (21, 22)
    assert wm.relations(Iri.parse("skiros:gripper1"), CONTAIN,
                        Iri.parse("skiros:objectA"))
    assert wm.element(Iri.parse("skiros:gripper1")).prop_values(
        Iri("skiros", "ContainerState")) == ["Full"]
    # transcript order: the wait leaf reports success before the move leaf runs
    node_events = [e for e in sub.drain() if e["kind"] == "node_state"]
    wait_done = next(i for i, e in enumerate(node_events)
                     if e["state"] == "success" and e["path"].count("/") == 3
                     and "wait" in _node_name(task, e["path"]))
    move_started = next(i for i, e in enumerate(node_events)
                        if "wm_move_object" in _node_name(task, e["path"])
                        and e["state"] is not None)
    assert wait_done <= move_started


def _node_name(task, path):
    node = task.root
    for index in path.split("/")[1:]:
        node = node.children[int(index)]
    return node.name


def test_pick_fake_without_move_child_fails_postcondition():
    dep = deployment(libraries=("core", "sim", "fake"))
    manager = dep.managers[0]
    # a broken variant whose body only waits: post-conditions must catch it
    from skillkit.library import ChildSpec, CompoundSpec, SkillImplementation
    from skillkit.bt import Processor

    pick = manager.registry.description("pick")
    manager.registry.add_implementation(SkillImplementation(
        label="pick_broken", base="pick", description=pick, kind="compound",
        compound=CompoundSpec(Processor.SEQUENTIAL,
                              [ChildSpec("wait", "wait", specify={"Duration": 0.1})]),
    ))
    dep.wm.set_relation(Iri.parse("skiros:robot"), AT,
                        Iri.parse("skiros:workstationA"), True)
    task_id = manager.start_task(
        "pick", {"Object": "skiros:objectA", "Arm": "skiros:arm1"},
        implementation="pick_broken")
    manager.run_task(task_id)
    task = manager.task(task_id)
    assert task.state == "failed"
    assert task.failure_code == "PostconditionViolated"
    assert task.message in ("EmptyHanded", "Holding")


def test_move_fault_on_parentless_element(two_ws):
    orphan = two_ws.wm.add_element(Iri("skiros", "Product"), label="loose part")
    fault = Fault(at=0.0, action="move", subject=str(orphan),
                  object="skiros:locationB")
    fault.apply(two_ws.wm)
    assert two_ws.wm.element(orphan).parent == Iri.parse("skiros:locationB")


def test_scenario_file_round_trip(tmp_path):
    scenario_path = tmp_path / "scenario.yaml"
    scenario_path.write_text(
        "scene: scene.ttl\n"
        "durations: {drive_sim: 0.3}\n"
        "faults:\n"
        "  - {at: 1.0, action: clear_relation, subject: 'skiros:robot',"
        " predicate: 'skiros:at', object: 'skiros:base'}\n",
        encoding="utf-8")
    scenario = SimScenario.from_file(scenario_path)
    assert scenario.durations == {"drive_sim": 0.3}
    assert scenario.faults[0].action == "clear_relation"
    assert scenario.scene_path == str(tmp_path / "scene.ttl")


def test_scenario_rejects_nonpositive_durations():
    with pytest.raises(ValueError):
        SimScenario(durations={"drive": 0.0})


def test_scenario_durations_apply_to_implementations():
    dep = deployment(durations={"drive": 0.2, "pick_robotiq": 0.1})
    registry = dep.managers[0].registry
    assert registry.implementation("drive_sim").config["duration"] == 0.2
    assert registry.implementation("pick_robotiq").config["duration"] == 0.1
    assert registry.implementation("pick_sim").config["duration"] == 0.5


def test_determinism_identical_scenario_and_seed():
    def transcript():
        dep = deployment(durations={"drive": 0.4})
        mission, events = run_mission(dep)
        wm_log = [e.to_record() for e in dep.wm.subscribe_changes(0).drain()]
        manager_log = dep.managers[0].events.history()
        return wm_log, manager_log, [e for e in events]

    assert transcript() == transcript()
