"""Element-level world model: typed entities, relations, frames, change feed.

One world model serves a deployment. Every mutation passes through a
single lock (commit order = version order); each committed event
increments the version by one. Reads take snapshots that merge the
ontology with the current scene triples.
"""

from __future__ import annotations

import queue
import re
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .geometry import Pose
from .ontology import (
    AT,
    CONTAIN,
    POSE_PROPS,
    RDF_TYPE,
    RDFS_LABEL,
    RDFS_SUBCLASS,
    SCENE_ROOT,
    Graph,
    Iri,
    Literal,
    Triple,
    parse_turtle,
    serialize_turtle,
)

HISTORY_HORIZON = 10_000


class WorldModelError(Exception):
    code = "world_model_error"


class UnknownConceptError(WorldModelError):
    code = "unknown_concept"


class UnknownElementError(WorldModelError):
    code = "unknown_element"


class CycleDetectedError(WorldModelError):
    code = "cycle_detected"


class VersionTooOldError(WorldModelError):
    code = "version_too_old"


class SceneError(WorldModelError):
    code = "scene_error"


@dataclass
class Element:
    """A world-model entity: typed instance with properties, relations and a frame."""

    id: Iri
    type: Iri
    label: str = ""
    properties: dict = field(default_factory=dict)  # Iri -> list[Literal]
    pose: Optional[Pose] = None
    parent: Optional[Iri] = None

    def copy(self) -> "Element":
        return Element(
            id=self.id,
            type=self.type,
            label=self.label,
            properties={k: list(v) for k, v in self.properties.items()},
            pose=self.pose,
            parent=self.parent,
        )

    def prop_values(self, prop: Iri) -> list:
        return [lit.value for lit in self.properties.get(prop, [])]

    def to_record(self) -> dict:
        pose = None
        if self.pose is not None:
            pose = {
                "position": [float(x) for x in self.pose.position],
                "orientation": [float(x) for x in self.pose.orientation],
            }
        return {
            "id": str(self.id),
            "type": str(self.type),
            "label": self.label,
            "properties": {str(k): [lit.value for lit in v] for k, v in self.properties.items()},
            "pose": pose,
            "parent": str(self.parent) if self.parent else None,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Element":
        pose = None
        if record.get("pose"):
            pose = Pose.from_values(record["pose"]["position"], record["pose"]["orientation"])
        return cls(
            id=Iri.parse(record["id"]),
            type=Iri.parse(record["type"]),
            label=record.get("label", ""),
            properties={
                Iri.parse(k): [Literal(v) for v in vals]
                for k, vals in record.get("properties", {}).items()
            },
            pose=pose,
            parent=Iri.parse(record["parent"]) if record.get("parent") else None,
        )


@dataclass(frozen=True)
class ChangeEvent:
    """One committed mutation. ``element`` carries the full record for adds/updates."""

    version: int
    kind: str  # element_added | element_updated | element_removed | relation_set | relation_cleared
    subject: str
    predicate: Optional[str] = None
    object: Optional[str] = None
    element: Optional[dict] = None

    def to_record(self) -> dict:
        out = {"version": self.version, "kind": self.kind, "subject": self.subject}
        if self.predicate is not None:
            out["predicate"] = self.predicate
        if self.object is not None:
            out["object"] = self.object
        if self.element is not None:
            out["element"] = self.element
        return out

    @classmethod
    def from_record(cls, record: dict) -> "ChangeEvent":
        return cls(
            version=record["version"],
            kind=record["kind"],
            subject=record["subject"],
            predicate=record.get("predicate"),
            object=record.get("object"),
            element=record.get("element"),
        )


class Subscription:
    """Gap-free ordered stream of change events for one subscriber."""

    def __init__(self, unsubscribe):
        self._queue: queue.Queue = queue.Queue()
        self._unsubscribe = unsubscribe

    def _push(self, event: ChangeEvent):
        self._queue.put(event)

    def next(self, timeout: Optional[float] = None) -> Optional[ChangeEvent]:
        try:
            return self._queue.get(timeout=timeout) if timeout is not None else self._queue.get_nowait()
        except queue.Empty:
            return None

    def drain(self) -> list[ChangeEvent]:
        out = []
        while True:
            try:
                out.append(self._queue.get_nowait())
            except queue.Empty:
                return out

    def close(self):
        self._unsubscribe(self)


class WmSnapshot:
    """Read-only view at one version: merged ontology + scene graph."""

    def __init__(self, version: int, graph: Graph, elements: dict, concepts: set):
        self.version = version
        self.graph = graph
        self._elements = elements
        self._concepts = concepts

    def element(self, element_id: Iri) -> Element:
        try:
            return self._elements[element_id]
        except KeyError:
            raise UnknownElementError(f"unknown element {element_id}") from None

    def has_element(self, element_id: Iri) -> bool:
        return element_id in self._elements

    def elements(self) -> list[Element]:
        return sorted(self._elements.values(), key=lambda e: self.graph.sort_key(e.id))

    def has_relation(self, subject: Iri, predicate: Iri, obj: Iri) -> bool:
        return Triple(subject, predicate, obj) in self.graph

    def instances_of(self, concept: Iri) -> list[Iri]:
        return [i for i in self.graph.instances_of(concept) if i in self._elements]

    def is_subclass_of(self, sub: Iri, sup: Iri) -> bool:
        return self.graph.is_subclass_of(sub, sup)

    def type_of(self, element_id: Iri) -> Iri:
        return self.element(element_id).type

    def permits_relation(self, subject_concept: Iri, predicate: Iri, object_concept: Iri) -> bool:
        """True when the ontology allows the relation between the two concepts."""
        for t in self.graph.triples(predicate=predicate):
            if t.subject in self._concepts and isinstance(t.object, Iri) and t.object in self._concepts:
                if self.graph.is_subclass_of(subject_concept, t.subject) and \
                        self.graph.is_subclass_of(object_concept, t.object):
                    return True
        return False


class WorldModel:
    """The shared semantic store: single-writer commits, snapshot reads."""

    def __init__(self, ontology: Graph, create_root: bool = True):
        self._lock = threading.RLock()
        self._ontology = ontology.copy()
        self._ontology.validate_subclass_acyclic()
        self._concepts = self._collect_concepts(self._ontology)
        self._elements: dict[Iri, Element] = {}
        self._relations: set[Triple] = set()
        self._version = 0
        self._history: deque = deque(maxlen=HISTORY_HORIZON)
        self._subscribers: list[Subscription] = []
        if create_root:
            self.add_element(Iri("skiros", "Scene"), label="scene root", element_id=SCENE_ROOT)

    @staticmethod
    def _collect_concepts(ontology: Graph) -> set:
        concepts = {Iri("owl", "Thing")}
        for t in ontology.triples(predicate=RDFS_SUBCLASS):
            concepts.add(t.subject)
            if isinstance(t.object, Iri):
                concepts.add(t.object)
        return concepts

    # -- read side ---------------------------------------------------------
    @property
    def version(self) -> int:
        with self._lock:
            return self._version

    @property
    def ontology(self) -> Graph:
        return self._ontology

    def snapshot(self) -> WmSnapshot:
        with self._lock:
            graph = self._ontology.copy()
            elements = {}
            for el in self._elements.values():
                view = el.copy()
                if view.pose is not None:
                    # pose is visible to conditions as the seven frame properties
                    values = list(view.pose.position) + list(view.pose.orientation)
                    for prop, value in zip(POSE_PROPS, values):
                        view.properties[prop] = [Literal(float(value))]
                elements[el.id] = view
                graph.add(Triple(el.id, RDF_TYPE, el.type))
                if el.label:
                    graph.add(Triple(el.id, RDFS_LABEL, Literal(el.label)))
                for prop, values in el.properties.items():
                    for lit in values:
                        graph.add(Triple(el.id, prop, lit))
                if el.pose is not None:
                    values = list(el.pose.position) + list(el.pose.orientation)
                    for prop, value in zip(POSE_PROPS, values):
                        graph.add(Triple(el.id, prop, Literal(float(value))))
            for rel in self._relations:
                graph.add(rel)
            return WmSnapshot(self._version, graph, elements, set(self._concepts))

    def element(self, element_id: Iri) -> Element:
        with self._lock:
            return self._require(element_id).copy()

    def has_element(self, element_id: Iri) -> bool:
        with self._lock:
            return element_id in self._elements

    def elements(self) -> list[Element]:
        with self._lock:
            return [e.copy() for e in self._elements.values()]

    def relations(
        self,
        subject: Optional[Iri] = None,
        predicate: Optional[Iri] = None,
        obj: Optional[Iri] = None,
    ) -> list[Triple]:
        with self._lock:
            out = [
                t for t in self._relations
                if (subject is None or t.subject == subject)
                and (predicate is None or t.predicate == predicate)
                and (obj is None or t.object == obj)
            ]
        out.sort(key=lambda t: (str(t.subject), str(t.predicate), str(t.object)))
        return out

    def state_fingerprint(self) -> tuple:
        """Canonical content identity: version-free, ordering-free (property
        value lists compare as multisets, matching triple-set semantics)."""
        with self._lock:
            records = []
            for e in self._elements.values():
                record = e.to_record()
                record["properties"] = sorted(
                    (k, sorted(map(repr, vs))) for k, vs in record["properties"].items())
                records.append(repr(sorted(record.items(), key=str)))
            rels = tuple(sorted((str(t.subject), str(t.predicate), str(t.object))
                                for t in self._relations))
            return tuple(sorted(records)), rels

    # -- mutation ----------------------------------------------------------
    def _require(self, element_id: Iri) -> Element:
        try:
            return self._elements[element_id]
        except KeyError:
            raise UnknownElementError(f"unknown element {element_id}") from None

    def _commit(self, kind: str, subject: Iri, predicate: Optional[Iri] = None,
                obj: Optional[Iri] = None, element: Optional[Element] = None) -> int:
        self._version += 1
        event = ChangeEvent(
            version=self._version,
            kind=kind,
            subject=str(subject),
            predicate=str(predicate) if predicate else None,
            object=str(obj) if obj else None,
            element=element.to_record() if element else None,
        )
        self._history.append(event)
        for sub in self._subscribers:
            sub._push(event)
        return self._version

    def _next_id(self, concept: Iri) -> Iri:
        pattern = re.compile(re.escape(concept.local) + r"-(\d+)$")
        used = set()
        for existing in self._elements:
            if existing.prefix == concept.prefix:
                m = pattern.match(existing.local)
                if m:
                    used.add(int(m.group(1)))
        n = 1
        while n in used:
            n += 1
        return Iri(concept.prefix, f"{concept.local}-{n}")

    def add_element(
        self,
        concept: Iri,
        label: str = "",
        properties: Optional[dict] = None,
        pose: Optional[Pose] = None,
        parent: Optional[Iri] = None,
        element_id: Optional[Iri] = None,
    ) -> Iri:
        with self._lock:
            if concept not in self._concepts:
                raise UnknownConceptError(f"unknown concept {concept}")
            if element_id is None:
                element_id = self._next_id(concept)
            elif element_id in self._elements:
                raise WorldModelError(f"element {element_id} already exists")
            if parent is not None:
                self._require(parent)
            el = Element(
                id=element_id,
                type=concept,
                label=label,
                properties={k: list(v) for k, v in (properties or {}).items() if v},
                pose=pose,
                parent=parent,
            )
            self._elements[element_id] = el
            if parent is not None:
                self._relations.add(Triple(parent, CONTAIN, element_id))
            self._commit("element_added", element_id, element=el)
            return element_id

    def update_element(
        self,
        element_id: Iri,
        label: Optional[str] = None,
        properties: Optional[dict] = None,
        pose: Optional[Pose] = ...,
    ) -> int:
        with self._lock:
            el = self._require(element_id)
            if label is not None:
                el.label = label
            if properties is not None:
                el.properties = {k: list(v) for k, v in properties.items() if v}
            if pose is not ...:
                el.pose = pose
            return self._commit("element_updated", element_id, element=el)

    def set_property(self, element_id: Iri, prop: Iri, values: Iterable) -> int:
        """Replace one property's value list; an empty list removes the property."""
        with self._lock:
            el = self._require(element_id)
            lits = [v if isinstance(v, Literal) else Literal(v) for v in values]
            if lits:
                el.properties[prop] = lits
            else:
                el.properties.pop(prop, None)
            return self._commit("element_updated", element_id, element=el)

    def remove_element(self, element_id: Iri, recursive: bool = False) -> int:
        with self._lock:
            el = self._require(element_id)
            children = [t.object for t in self._relations
                        if t.subject == element_id and t.predicate == CONTAIN]
            if children and not recursive:
                raise WorldModelError(
                    f"element {element_id} still contains {len(children)} element(s)")
            for child in children:
                if child in self._elements:
                    self.remove_element(child, recursive=True)
            for rel in sorted(
                (t for t in self._relations if element_id in (t.subject, t.object)),
                key=lambda t: (str(t.subject), str(t.predicate), str(t.object)),
            ):
                self._relations.remove(rel)
                if rel.predicate == CONTAIN and rel.object in self._elements and rel.object != element_id:
                    self._elements[rel.object].parent = None
                self._commit("relation_cleared", rel.subject, rel.predicate, rel.object)
            del self._elements[element_id]
            return self._commit("element_removed", element_id)

    def set_relation(self, subject: Iri, predicate: Iri, obj: Iri, state: bool = True) -> int:
        """Assert or retract a relation.

        ``skiros:contain`` doubles as the spatial-parent edge (exclusive per
        object); ``skiros:at`` is exclusive per subject.
        """
        with self._lock:
            self._require(subject)
            self._require(obj)
            triple = Triple(subject, predicate, obj)
            if state:
                if predicate == CONTAIN:
                    if subject == obj or obj in self._ancestors(subject):
                        raise CycleDetectedError(
                            f"containing {obj} in {subject} creates a cycle")
                    for old in [t for t in self._relations
                                if t.predicate == CONTAIN and t.object == obj and t != triple]:
                        self._relations.remove(old)
                        self._commit("relation_cleared", old.subject, old.predicate, old.object)
                    self._elements[obj].parent = subject
                elif predicate == AT:
                    for old in [t for t in self._relations
                                if t.predicate == AT and t.subject == subject and t != triple]:
                        self._relations.remove(old)
                        self._commit("relation_cleared", old.subject, old.predicate, old.object)
                self._relations.add(triple)
                return self._commit("relation_set", subject, predicate, obj)
            if triple in self._relations:
                self._relations.remove(triple)
                if predicate == CONTAIN and self._elements[obj].parent == subject:
                    self._elements[obj].parent = None
            return self._commit("relation_cleared", subject, predicate, obj)

    # -- spatial reasoner ---------------------------------------------------
    def _ancestors(self, element_id: Iri) -> list[Iri]:
        chain = []
        seen = set()
        current = self._elements[element_id].parent
        while current is not None:
            if current in seen:
                raise CycleDetectedError(f"containment cycle through {current}")
            seen.add(current)
            chain.append(current)
            current = self._elements[current].parent if current in self._elements else None
        return chain

    def world_pose(self, element_id: Iri) -> Pose:
        """Pose of an element in the root frame; parents without pose are identity."""
        with self._lock:
            self._require(element_id)
            chain = [element_id] + self._ancestors(element_id)
            pose = Pose.identity()
            for node in reversed(chain):
                local = self._elements[node].pose
                if local is not None:
                    pose = pose.compose(local)
            return pose

    def move_element(self, element_id: Iri, new_parent: Iri) -> int:
        """Reparent, preserving the world pose of the moved element."""
        with self._lock:
            el = self._require(element_id)
            self._require(new_parent)
            if new_parent == element_id or element_id in ([new_parent] + self._ancestors(new_parent)):
                raise CycleDetectedError(f"moving {element_id} under {new_parent} creates a cycle")
            world = self.world_pose(element_id) if el.pose is not None else None
            old_parent = el.parent
            if old_parent != new_parent:
                if old_parent is not None:
                    old_triple = Triple(old_parent, CONTAIN, element_id)
                    if old_triple in self._relations:
                        self._relations.remove(old_triple)
                        self._commit("relation_cleared", old_parent, CONTAIN, element_id)
                el.parent = new_parent
                self._relations.add(Triple(new_parent, CONTAIN, element_id))
                self._commit("relation_set", new_parent, CONTAIN, element_id)
            if world is not None:
                el.pose = world.relative_to(self.world_pose(new_parent))
            return self._commit("element_updated", element_id, element=el)

    # -- change feed ---------------------------------------------------------
    def subscribe_changes(self, from_version: Optional[int] = None) -> Subscription:
        with self._lock:
            if from_version is None:
                from_version = self._version
            if from_version > self._version:
                raise WorldModelError(
                    f"version {from_version} is ahead of head {self._version}")
            if self._history and from_version + 1 < self._history[0].version:
                raise VersionTooOldError(
                    f"events after version {from_version} were compacted")
            if not self._history and from_version < self._version:
                raise VersionTooOldError(
                    f"events after version {from_version} were compacted")
            sub = Subscription(self._unsubscribe)
            for event in self._history:
                if event.version > from_version:
                    sub._push(event)
            self._subscribers.append(sub)
            return sub

    def _unsubscribe(self, sub: Subscription):
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def history_since(self, from_version: int) -> list[ChangeEvent]:
        with self._lock:
            if self._history and from_version + 1 < self._history[0].version:
                raise VersionTooOldError(
                    f"events after version {from_version} were compacted")
            return [e for e in self._history if e.version > from_version]

    def apply_event(self, event: ChangeEvent):
        """Replay one event verbatim (no exclusivity cascades)."""
        with self._lock:
            kind = event.kind
            if kind in ("element_added", "element_updated"):
                el = Element.from_record(event.element)
                self._elements[el.id] = el
                if kind == "element_added" and el.parent is not None:
                    self._relations.add(Triple(el.parent, CONTAIN, el.id))
            elif kind == "element_removed":
                removed = Iri.parse(event.subject)
                self._elements.pop(removed, None)
                self._relations = {t for t in self._relations if removed not in (t.subject, t.object)}
            elif kind == "relation_set":
                s, p, o = Iri.parse(event.subject), Iri.parse(event.predicate), Iri.parse(event.object)
                self._relations.add(Triple(s, p, o))
                if p == CONTAIN and o in self._elements:
                    self._elements[o].parent = s
            elif kind == "relation_cleared":
                s, p, o = Iri.parse(event.subject), Iri.parse(event.predicate), Iri.parse(event.object)
                self._relations.discard(Triple(s, p, o))
                if p == CONTAIN and o in self._elements and self._elements[o].parent == s:
                    self._elements[o].parent = None
            else:
                raise WorldModelError(f"unknown event kind {kind!r}")
            self._version = event.version

    # -- scenes ---------------------------------------------------------------
    def load_scene_text(self, text: str):
        """Load scene instances from the Turtle subset."""
        scene = parse_turtle(text)
        with self._lock:
            for prefix, base in scene.prefixes.items():
                self._ontology.bind(prefix, base)
            subjects = []
            seen = set()
            ordered = sorted(
                scene.triples(),
                key=lambda t: (scene.sort_key(t.subject), scene.sort_key(t.predicate),
                               scene.sort_key(t.object)),
            )
            for t in ordered:
                if t.subject not in seen:
                    seen.add(t.subject)
                    subjects.append(t.subject)
            # first pass: create elements
            relation_triples: list[Triple] = []
            for subject in subjects:
                types = [t.object for t in scene.triples(subject=subject, predicate=RDF_TYPE)]
                if not types:
                    raise SceneError(f"scene element {subject} has no rdf:type")
                concept = types[0]
                if not isinstance(concept, Iri) or concept not in self._concepts:
                    raise UnknownConceptError(f"unknown concept {concept} for {subject}")
                label = ""
                properties: dict[Iri, list[Literal]] = {}
                pose_values: dict[Iri, float] = {}
                for t in ordered:
                    if t.subject != subject or t.predicate == RDF_TYPE:
                        continue
                    if isinstance(t.object, Iri):
                        continue  # relations handled in the second pass
                    if t.predicate == RDFS_LABEL:
                        label = str(t.object.value)
                    elif t.predicate in POSE_PROPS:
                        pose_values[t.predicate] = float(t.object.value)
                    else:
                        properties.setdefault(t.predicate, []).append(t.object)
                pose = None
                if pose_values:
                    if set(pose_values) != set(POSE_PROPS):
                        missing = sorted(str(p) for p in POSE_PROPS if p not in pose_values)
                        raise SceneError(f"element {subject} has a partial pose; missing {missing}")
                    vals = [pose_values[p] for p in POSE_PROPS]
                    pose = Pose.from_values(vals[:3], vals[3:])
                if subject in self._elements:
                    self.update_element(subject, label=label or None,
                                        properties=properties or None,
                                        pose=pose if pose is not None else ...)
                else:
                    self.add_element(concept, label=label, properties=properties,
                                     pose=pose, element_id=subject)
            # second pass: relations between elements
            for t in ordered:
                if t.predicate == RDFS_SUBCLASS:
                    raise SceneError("scene files hold instances; concepts belong in ontologies")
                if isinstance(t.object, Iri) and t.predicate != RDF_TYPE:
                    relation_triples.append(t)
            for t in relation_triples:
                if t.subject in self._elements and t.object in self._elements:
                    self.set_relation(t.subject, t.predicate, t.object, True)
                else:
                    raise SceneError(
                        f"relation ({t.subject} {t.predicate} {t.object}) references a non-element")
            self._validate_containment()

    def _validate_containment(self):
        incoming: dict[Iri, list[Iri]] = {}
        for t in self._relations:
            if t.predicate == CONTAIN:
                incoming.setdefault(t.object, []).append(t.subject)
        for obj, subjects in incoming.items():
            if len(subjects) > 1:
                raise SceneError(f"element {obj} has {len(subjects)} containers")
        for element_id in self._elements:
            self._ancestors(element_id)

    def load_scene(self, path) -> None:
        with open(path, "r", encoding="utf-8") as fh:
            self.load_scene_text(fh.read())

    def dump_scene(self) -> str:
        """Canonical Turtle of the current scene (elements, properties, relations)."""
        with self._lock:
            graph = Graph(self._ontology.prefixes)
            for el in self._elements.values():
                graph.add(Triple(el.id, RDF_TYPE, el.type))
                if el.label:
                    graph.add(Triple(el.id, RDFS_LABEL, Literal(el.label)))
                for prop, values in el.properties.items():
                    for lit in values:
                        graph.add(Triple(el.id, prop, lit))
                if el.pose is not None:
                    values = list(el.pose.position) + list(el.pose.orientation)
                    for prop, value in zip(POSE_PROPS, values):
                        graph.add(Triple(el.id, prop, Literal(float(value))))
            for rel in self._relations:
                graph.add(rel)
            return serialize_turtle(graph)


def load_ontology_text(texts: Iterable[str]) -> Graph:
    """Merge ontology documents (base vocabulary first) into one graph."""
    merged = Graph()
    for text in texts:
        merged.update(parse_turtle(text))
    merged.validate_subclass_acyclic()
    return merged
