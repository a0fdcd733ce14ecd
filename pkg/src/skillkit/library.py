"""Skill libraries: declarative manifests, registry, selection, tree building.

A library is a YAML manifest declaring skill descriptions (params plus
pre/hold/post conditions) and implementations. Primitive implementations
name a Python class; compound implementations declare a processor and
child skills with remap/specify overlays. Implementations may narrow
element-param concepts and add conditions; the result must refine the
base description.
"""

from __future__ import annotations

import importlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from .bt import (
    BtNode,
    ConditionNode,
    PrimitiveNode,
    Processor,
    ProcessorNode,
    SkillNode,
)
from .ontology import Graph, Iri, Literal
from .skills import (
    AllowedRelationCondition,
    HasPropertyCondition,
    ParamFlavor,
    ParamSpec,
    PropertyCondition,
    RelationCondition,
    Scope,
    SkillDescription,
    refines,
)
from .world import WmSnapshot

_MAX_DEPTH = 32


class LibraryError(Exception):
    code = "library_error"


class ManifestError(LibraryError):
    code = "manifest_error"


class UnknownSkillError(LibraryError):
    code = "unknown_skill"


class NoImplementationError(LibraryError):
    code = "no_implementation"


class DuplicateSkillNameError(LibraryError):
    code = "duplicate_skill"


@dataclass
class ChildSpec:
    skill: str
    implementation: Optional[str] = None
    specify: dict = field(default_factory=dict)
    remap: dict = field(default_factory=dict)


@dataclass
class CompoundSpec:
    processor: Processor
    children: list[ChildSpec] = field(default_factory=list)


@dataclass
class SkillImplementation:
    label: str
    base: str
    description: SkillDescription
    kind: str  # primitive | compound
    factory: Optional[type] = None
    compound: Optional[CompoundSpec] = None
    config: dict = field(default_factory=dict)

    def make_primitive(self):
        return self.factory(self.config)


@dataclass
class LibraryManifest:
    name: str
    descriptions: list = field(default_factory=list)
    implementations: list = field(default_factory=list)


class SkillRegistry:
    """Immutable-after-load lookup of descriptions and implementations."""

    def __init__(self, ontology: Graph):
        self.ontology = ontology
        self._descriptions: dict[str, SkillDescription] = {}
        self._implementations: dict[str, list[SkillImplementation]] = {}
        self._by_label: dict[str, SkillImplementation] = {}

    def add_description(self, desc: SkillDescription):
        existing = self._descriptions.get(desc.name)
        if existing is not None:
            if existing == desc:
                return
            raise DuplicateSkillNameError(f"skill description '{desc.name}' already registered")
        self._descriptions[desc.name] = desc
        self._implementations.setdefault(desc.name, [])

    def add_implementation(self, impl: SkillImplementation):
        if impl.label in self._by_label:
            raise DuplicateSkillNameError(f"implementation '{impl.label}' already registered")
        base = self.description(impl.base)
        if not refines(impl.description, base, self.ontology):
            raise ManifestError(
                f"implementation '{impl.label}' does not refine description '{impl.base}'")
        self._by_label[impl.label] = impl
        self._implementations.setdefault(impl.base, []).append(impl)

    def description(self, name: str) -> SkillDescription:
        try:
            return self._descriptions[name]
        except KeyError:
            raise UnknownSkillError(f"unknown skill '{name}'") from None

    def descriptions(self) -> list[SkillDescription]:
        return [self._descriptions[k] for k in sorted(self._descriptions)]

    def implementations(self, name: str) -> list[SkillImplementation]:
        self.description(name)
        return list(self._implementations.get(name, []))

    def implementation(self, label: str) -> SkillImplementation:
        try:
            return self._by_label[label]
        except KeyError:
            raise UnknownSkillError(f"unknown implementation '{label}'") from None

    def has_skill(self, name: str) -> bool:
        return name in self._descriptions or name in self._by_label


# ---------------------------------------------------------------------------
# Implementation selection
# ---------------------------------------------------------------------------

def _accepts(impl: SkillImplementation, bindings: dict, snapshot: WmSnapshot,
             ontology: Graph) -> bool:
    for param in impl.description.element_params():
        value = bindings.get(param.key)
        if not isinstance(value, Iri) or not snapshot.has_element(value):
            continue  # unbound params are constrained later, at activation
        if not ontology.is_subclass_of(snapshot.type_of(value), param.element):
            return False
    return True


def _strictly_refines(a: SkillImplementation, b: SkillImplementation, ontology: Graph) -> bool:
    keys = [p.key for p in a.description.element_params()]
    strict = False
    for key in keys:
        ca = a.description.param(key).element
        cb = b.description.param(key).element
        if not ontology.is_subclass_of(ca, cb):
            return False
        if ca != cb:
            strict = True
    return strict


def select_implementation(
    registry: SkillRegistry,
    name: str,
    bindings: dict,
    snapshot: WmSnapshot,
) -> SkillImplementation:
    """Pick the most-specific implementation accepting the bound elements.

    Maximal candidates under the concept-subclass ordering win; remaining
    ties break on label order, so the choice is independent of
    registration order.
    """
    ontology = registry.ontology
    impls = registry.implementations(name)
    if not impls:
        raise NoImplementationError(f"skill '{name}' has no registered implementation")
    acceptable = [impl for impl in impls if _accepts(impl, bindings, snapshot, ontology)]
    if not acceptable:
        raise NoImplementationError(
            f"no implementation of '{name}' accepts the bound element types")
    maximal = [
        impl for impl in acceptable
        if not any(other is not impl and _strictly_refines(other, impl, ontology)
                   for other in acceptable)
    ]
    return sorted(maximal, key=lambda impl: impl.label)[0]


# ---------------------------------------------------------------------------
# Tree building (skill instantiation and expansion)
# ---------------------------------------------------------------------------

def coerce_param_value(spec: ParamSpec, value):
    """Normalize one raw (YAML/JSON/CLI) value to the param's type."""
    if spec.element is not None:
        if isinstance(value, Iri):
            return value
        if isinstance(value, str):
            return Iri.parse(value)
        raise ManifestError(f"param '{spec.key}' expects an element id, got {value!r}")
    kind = spec.fundamental
    try:
        if kind == "string":
            return str(value)
        if kind == "int":
            if isinstance(value, bool):
                raise ValueError(value)
            return int(value)
        if kind == "float":
            if isinstance(value, bool):
                raise ValueError(value)
            return float(value)
        if kind == "bool":
            if isinstance(value, bool):
                return value
            if isinstance(value, str) and value.lower() in ("true", "false"):
                return value.lower() == "true"
            raise ValueError(value)
        if kind == "list":
            if isinstance(value, list):
                return value
            raise ValueError(value)
        if kind == "map":
            if isinstance(value, dict):
                return value
            raise ValueError(value)
    except (TypeError, ValueError):
        raise ManifestError(
            f"param '{spec.key}' expects {kind}, got {value!r}") from None
    raise ManifestError(f"param '{spec.key}' has unknown type {kind!r}")


def build_skill_node(
    registry: SkillRegistry,
    snapshot: WmSnapshot,
    name: str,
    parent_scope,
    specify: Optional[dict] = None,
    remap: Optional[dict] = None,
    implementation: Optional[str] = None,
    _depth: int = 0,
) -> SkillNode:
    """Instantiate a skill into an executable fragment.

    Selection happens here using whatever element params already resolve;
    inference of still-open params happens at first activation against the
    then-current world state.
    """
    if _depth > _MAX_DEPTH:
        raise ManifestError(f"skill '{name}' expands beyond depth {_MAX_DEPTH}; cycle?")
    desc = registry.description(name)
    prepared_specify = {}
    for key, value in (specify or {}).items():
        try:
            spec = desc.param(key)
        except KeyError:
            raise ManifestError(f"skill '{name}' has no parameter '{key}'") from None
        prepared_specify[key] = coerce_param_value(spec, value)
    scope = Scope(parent_scope, specify=prepared_specify, remap=dict(remap or {}))
    if implementation is not None:
        impl = registry.implementation(implementation)
        if impl.base != name:
            raise ManifestError(
                f"implementation '{implementation}' implements '{impl.base}', not '{name}'")
    else:
        bindings = scope.collect([p.key for p in desc.element_params()])
        impl = select_implementation(registry, name, bindings, snapshot)

    if impl.kind == "primitive":
        primitive = impl.make_primitive()
        if not primitive.onInit():
            raise LibraryError(f"primitive '{impl.label}' failed onInit")
        primitive.transcript.append("onInit")
        body: BtNode = PrimitiveNode(impl.label, primitive, scope)
    else:
        children = [
            build_skill_node(
                registry, snapshot, child.skill, scope,
                specify=child.specify, remap=child.remap,
                implementation=child.implementation, _depth=_depth + 1,
            )
            for child in impl.compound.children
        ]
        body = ProcessorNode(impl.compound.processor, children, name=f"{impl.label}.body")

    refined = impl.description
    return SkillNode(
        name=name,
        implementation_label=impl.label,
        desc=refined,
        scope=scope,
        pre=[ConditionNode(c, "pre", scope) for c in refined.pre],
        hold=[ConditionNode(c, "hold", scope) for c in refined.hold],
        post=[ConditionNode(c, "post", scope) for c in refined.post],
        body=body,
    )


# ---------------------------------------------------------------------------
# Manifest parsing
# ---------------------------------------------------------------------------

def _parse_param(raw: dict) -> ParamSpec:
    try:
        key = raw["key"]
        flavor = ParamFlavor(raw.get("flavor", "required"))
    except (KeyError, ValueError) as exc:
        raise ManifestError(f"bad parameter entry {raw!r}: {exc}") from None
    kwargs = {}
    if "default" in raw:
        kwargs["default"] = raw["default"]
    if "element" in raw:
        return ParamSpec(key, flavor, element=Iri.parse(raw["element"]), **kwargs)
    if "type" in raw:
        return ParamSpec(key, flavor, fundamental=raw["type"], **kwargs)
    raise ManifestError(f"parameter '{key}' needs 'element' or 'type'")


def _parse_condition(raw: dict):
    kind = raw.get("kind")
    try:
        if kind == "relation":
            return RelationCondition(raw["name"], Iri.parse(raw["predicate"]),
                                     raw["subject"], raw["object"], raw.get("desired", True))
        if kind == "property":
            return PropertyCondition(raw["name"], Iri.parse(raw["property"]), raw["param"],
                                     raw.get("op", "="), Literal(raw["value"]),
                                     raw.get("desired", True))
        if kind == "has_property":
            return HasPropertyCondition(raw["name"], Iri.parse(raw["property"]), raw["param"],
                                        raw.get("desired", True))
        if kind == "allowed_relation":
            return AllowedRelationCondition(raw["name"], Iri.parse(raw["predicate"]),
                                            raw["subject"], raw["object"],
                                            raw.get("desired", True))
    except KeyError as exc:
        raise ManifestError(f"condition entry {raw!r} is missing {exc}") from None
    raise ManifestError(f"unknown condition kind {kind!r}")


def _parse_description(raw: dict) -> SkillDescription:
    try:
        return SkillDescription(
            name=raw["name"],
            params=[_parse_param(p) for p in raw.get("params", [])],
            pre=[_parse_condition(c) for c in raw.get("pre", [])],
            hold=[_parse_condition(c) for c in raw.get("hold", [])],
            post=[_parse_condition(c) for c in raw.get("post", [])],
        )
    except ValueError as exc:
        raise ManifestError(str(exc)) from None


def _import_primitive(path: str) -> type:
    module_name, sep, class_name = path.partition(":")
    if not sep:
        raise ManifestError(f"primitive reference '{path}' must look like module:Class")
    try:
        module = importlib.import_module(module_name)
        cls = getattr(module, class_name)
    except (ImportError, AttributeError) as exc:
        raise ManifestError(f"cannot import primitive '{path}': {exc}") from None
    return cls


def _refined_description(base: SkillDescription, raw: dict, label: str) -> SkillDescription:
    params = list(base.params)
    for key, concept in (raw.get("refine") or {}).items():
        try:
            current = base.param(key)
        except KeyError:
            raise ManifestError(f"implementation '{label}' refines unknown param '{key}'") from None
        if current.element is None:
            raise ManifestError(f"implementation '{label}' can only refine element params")
        params[params.index(current)] = ParamSpec(
            current.key, current.flavor, element=Iri.parse(concept),
            **({"default": current.default} if current.has_default else {}))
    return SkillDescription(
        name=base.name,
        params=params,
        pre=list(base.pre) + [_parse_condition(c) for c in raw.get("add_pre", [])],
        hold=list(base.hold) + [_parse_condition(c) for c in raw.get("add_hold", [])],
        post=list(base.post) + [_parse_condition(c) for c in raw.get("add_post", [])],
    )


def _parse_implementation(raw: dict, descriptions: dict) -> SkillImplementation:
    try:
        label = raw["label"]
        base_name = raw["description"]
    except KeyError as exc:
        raise ManifestError(f"implementation entry {raw!r} is missing {exc}") from None
    base = descriptions.get(base_name)
    if base is None:
        raise ManifestError(f"implementation '{label}' references unknown skill '{base_name}'")
    description = _refined_description(base, raw, label)
    config = dict(raw.get("config", {}))
    if "primitive" in raw:
        return SkillImplementation(label=label, base=base_name, description=description,
                                   kind="primitive", factory=_import_primitive(raw["primitive"]),
                                   config=config)
    if "compound" in raw:
        comp = raw["compound"]
        try:
            processor = Processor(comp.get("processor", "sequential"))
        except ValueError:
            raise ManifestError(f"unknown processor {comp.get('processor')!r}") from None
        children = [
            ChildSpec(
                skill=c["skill"],
                implementation=c.get("implementation"),
                specify=dict(c.get("specify", {})),
                remap=dict(c.get("remap", {})),
            )
            for c in comp.get("children", [])
        ]
        return SkillImplementation(label=label, base=base_name, description=description,
                                   kind="compound", compound=CompoundSpec(processor, children),
                                   config=config)
    raise ManifestError(f"implementation '{label}' needs 'primitive' or 'compound'")


def parse_manifest(data: dict, known_descriptions: Optional[dict] = None) -> LibraryManifest:
    descriptions = [_parse_description(d) for d in data.get("descriptions", [])]
    by_name = dict(known_descriptions or {})
    by_name.update({d.name: d for d in descriptions})
    implementations = [
        _parse_implementation(raw, by_name) for raw in data.get("implementations", [])
    ]
    return LibraryManifest(
        name=data.get("name", "library"),
        descriptions=descriptions,
        implementations=implementations,
    )


def bundled_library_path(name: str) -> Optional[Path]:
    candidate = resources.files("skillkit").joinpath("data").joinpath(f"lib_{name}.yaml")
    return Path(str(candidate)) if candidate.is_file() else None


def load_library(source, known_descriptions: Optional[dict] = None) -> LibraryManifest:
    """Load a manifest by bundled name, path, or pre-parsed dict."""
    if isinstance(source, dict):
        return parse_manifest(source, known_descriptions)
    path = bundled_library_path(str(source))
    if path is None:
        path = Path(source)
    if not path.is_file():
        raise ManifestError(f"skill library '{source}' not found")
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ManifestError(f"library '{source}' is not a mapping")
    manifest = parse_manifest(data, known_descriptions)
    if "name" not in data:
        manifest.name = path.stem
    return manifest


def register_library(registry: SkillRegistry, manifest: LibraryManifest) -> list[str]:
    """Register a manifest; returns diagnostics for skipped implementations.

    Primitive classes are probed with ``onInit`` once at load; returning
    False keeps the implementation out of the registry.
    """
    diagnostics = []
    for desc in manifest.descriptions:
        registry.add_description(desc)
    for impl in manifest.implementations:
        if impl.kind == "primitive":
            probe = impl.make_primitive()
            if not probe.onInit():
                diagnostics.append(
                    f"implementation '{impl.label}' not loaded: onInit returned False")
                continue
        registry.add_implementation(impl)
    return diagnostics
