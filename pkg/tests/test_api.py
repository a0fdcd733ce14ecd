import pytest
from fastapi.testclient import TestClient

from skillkit.api import create_app
from skillkit.deploy import data_path, load_deployment
from skillkit.ontology import AT, CONTAIN, Iri


@pytest.fixture
def dep():
    return load_deployment("deploy_sim")


@pytest.fixture
def client(dep):
    with TestClient(create_app(dep)) as c:
        yield c


def test_skills_listing_includes_conditions_and_params(client):
    skills = {s["name"]: s for s in client.get("/v1/skills").json()}
    pick = skills["pick"]
    keys = [p["key"] for p in pick["params"]]
    assert keys == ["Container", "Gripper", "Object", "Arm"]
    assert {p["key"]: p["flavor"] for p in pick["params"]}["Container"] == "inferred"
    assert any(c["name"] == "EmptyHanded" for c in pick["pre"])
    assert any(c["name"] == "RobotAtLocation" for c in pick["hold"])
    assert pick["implementations"] == ["pick_robotiq", "pick_sim"]


def test_wm_snapshot_lists_elements_and_relations(client, dep):
    body = client.get("/v1/wm").json()
    assert body["version"] == dep.wm.version
    ids = {e["id"] for e in body["elements"]}
    assert {"skiros:Scene-0", "skiros:objectA", "skiros:robot"} <= ids
    assert {"subject": "skiros:robot", "predicate": "skiros:at",
            "object": "skiros:base"} in body["relations"]


def test_wm_snapshot_at_older_version(client, dep):
    v0 = dep.wm.version
    dep.wm.add_element(Iri("skiros", "Product"), label="extra")
    past = client.get("/v1/wm", params={"version": v0}).json()
    assert past["version"] == v0
    assert all(e["label"] != "extra" for e in past["elements"])
    now = client.get("/v1/wm").json()
    assert any(e["label"] == "extra" for e in now["elements"])


def test_wm_on_empty_scene_has_root_only():
    empty = load_deployment({"managers": []})
    with TestClient(create_app(empty)) as c:
        body = c.get("/v1/wm").json()
    assert [e["id"] for e in body["elements"]] == ["skiros:Scene-0"]
    assert body["relations"] == []


def test_wm_instances_by_concept(client):
    products = client.get("/v1/wm/instances",
                          params={"concept": "skiros:Product"}).json()
    assert products == ["skiros:objectA"]
    grippers = client.get("/v1/wm/instances",
                          params={"concept": "rparts:GripperEffector"}).json()
    assert grippers == ["skiros:gripper1"]


def test_wm_element_crud(client):
    created = client.post("/v1/wm/elements", json={
        "type": "skiros:Product", "label": "bolt",
        "properties": {"skiros:Mass": [0.1]},
        "pose": {"position": [1, 2, 3], "orientation": [1, 0, 0, 0]},
        "parent": "skiros:workstationA"})
    assert created.status_code == 201
    record = created.json()
    assert record["id"] == "skiros:Product-1"
    assert record["parent"] == "skiros:workstationA"

    patched = client.patch(f"/v1/wm/elements/{record['id']}",
                           json={"label": "hex bolt"})
    assert patched.json()["label"] == "hex bolt"

    assert client.get(f"/v1/wm/elements/{record['id']}").json()["label"] == "hex bolt"
    assert client.delete(f"/v1/wm/elements/{record['id']}").status_code == 204
    assert client.get(f"/v1/wm/elements/{record['id']}").status_code == 404


def test_wm_delete_contained_requires_recursive(client):
    response = client.delete("/v1/wm/elements/skiros:workstationA")
    assert response.status_code == 422
    assert client.delete("/v1/wm/elements/skiros:workstationA",
                         params={"recursive": True}).status_code == 204


def test_wm_relation_endpoint(client, dep):
    response = client.put("/v1/wm/relations", json={
        "subject": "skiros:robot", "predicate": "skiros:at",
        "object": "skiros:workstationA", "state": True})
    assert response.status_code == 200
    assert response.json()["version"] == dep.wm.version
    robot = Iri.parse("skiros:robot")
    assert [str(t.object) for t in dep.wm.relations(subject=robot, predicate=AT)] == [
        "skiros:workstationA"]


def test_error_body_shape(client):
    missing = client.get("/v1/wm/elements/skiros:ghost")
    assert missing.status_code == 404
    body = missing.json()
    assert set(body) == {"code", "message", "detail"}
    assert body["code"] == "unknown_element"

    invalid = client.post("/v1/wm/elements", json={"type": "skiros:Nonsense"})
    assert invalid.status_code == 422
    assert invalid.json()["code"] == "unknown_concept"


def test_task_start_echoes_inferred_params(client, dep):
    dep.wm.set_relation(Iri.parse("skiros:robot"), AT,
                        Iri.parse("skiros:workstationA"), True)
    response = client.post("/v1/tasks", json={
        "skill": "pick",
        "params": {"Object": "skiros:objectA", "Arm": "skiros:arm1"}})
    assert response.status_code == 201
    record = response.json()
    assert record["state"] == "running"
    assert record["params"]["Gripper"] == "skiros:gripper1"
    assert record["params"]["Container"] == "skiros:workstationA"
    while dep.managers[0].task(record["id"]).state == "running":
        dep.step()
    final = client.get(f"/v1/tasks/{record['id']}").json()
    assert final["state"] == "succeeded"
    assert final["tree"]["kind"] == "skill"
    assert final["tree"]["state"] == "success"


def test_task_stop_preempts(client, dep):
    record = client.post("/v1/tasks", json={"skill": "wait",
                                            "params": {"Duration": 60}}).json()
    dep.step()
    stopped = client.delete(f"/v1/tasks/{record['id']}").json()
    assert stopped["state"] == "preempted"


def test_task_resource_conflict_is_409(client, dep):
    dep.wm.set_relation(Iri.parse("skiros:robot"), AT,
                        Iri.parse("skiros:workstationA"), True)
    body = {"skill": "pick", "params": {"Object": "skiros:objectA",
                                        "Arm": "skiros:arm1"}}
    assert client.post("/v1/tasks", json=body).status_code == 201
    conflict = client.post("/v1/tasks", json=body)
    assert conflict.status_code == 409
    assert conflict.json()["code"] == "resource_busy"


def test_unknown_task_and_skill(client):
    assert client.get("/v1/tasks/heron-99").status_code == 404
    assert client.post("/v1/tasks", json={"skill": "juggle"}).status_code == 404


def test_mission_flow_over_api(client, dep):
    created = client.post("/v1/missions", json={
        "goal": "skiros:contain skiros:locationB skiros:objectA"})
    assert created.status_code == 201
    mission_id = created.json()["id"]
    dep.run_until(lambda: not dep.missions.mission(mission_id).active)
    record = client.get(f"/v1/missions/{mission_id}").json()
    assert record["state"] == "succeeded"
    assert [s["skill"] for s in record["steps"]] == ["drive", "pick", "drive", "place"]
    kinds = [e["kind"] for e in record["events"]]
    assert kinds.count("step_started") == 4
    assert kinds[-1] == "mission_finished"


def test_unsatisfiable_mission_reported(client):
    record = client.post("/v1/missions", json={
        "goal": "skiros:contain skiros:locationB skiros:ghost"}).json()
    assert record["state"] == "unsatisfiable"


def test_pddl_endpoint_round_trips(client):
    from skillkit.planning import parse_pddl_domain, parse_pddl_problem

    response = client.get("/v1/pddl", params={
        "goal": "skiros:contain skiros:locationB skiros:objectA"})
    assert response.status_code == 200
    body = response.json()
    parse_pddl_domain(body["domain"])
    parse_pddl_problem(body["problem"])
    assert "(:action pick" in body["domain"]
    missing = client.get("/v1/pddl")
    assert missing.status_code == 422


def test_event_stream_and_resume(client, dep):
    dep.pump_events()  # forward the scene-load history into the hub
    with client.websocket_connect("/v1/events?from=-1") as ws:
        first = ws.receive_json()
        assert first["seq"] == 0
        dep.wm.add_element(Iri("skiros", "Product"), label="streamed")
        dep.pump_events()
        seen = first
        for _ in range(500):
            seen = ws.receive_json()
            if seen["type"] == "wm" and \
                    seen["event"].get("element", {}) and \
                    seen["event"]["element"].get("label") == "streamed":
                break
        else:
            pytest.fail("element_added never arrived on the stream")
        last_seq = seen["seq"]
    dep.wm.add_element(Iri("skiros", "Product"), label="after-reconnect")
    dep.pump_events()
    with client.websocket_connect(f"/v1/events?from={last_seq}") as ws:
        nxt = ws.receive_json()
        assert nxt["seq"] == last_seq + 1
    history = client.get("/v1/events/history", params={"from": last_seq}).json()
    assert [e["seq"] for e in history] == list(range(last_seq + 1,
                                                     last_seq + 1 + len(history)))


def test_ws_transcript_matches_manager_transcript(client, dep):
    mission_id = client.post("/v1/missions", json={
        "goal": "skiros:contain skiros:locationB skiros:objectA"}).json()["id"]
    dep.run_until(lambda: not dep.missions.mission(mission_id).active)
    dep.pump_events()
    hub = [e for e in dep.events.history() if e["type"] == "task"]
    manager_events = dep.managers[0].events.history()
    assert len(hub) == len(manager_events)
    assert [h["event"]["kind"] for h in hub] == [m["kind"] for m in manager_events]
