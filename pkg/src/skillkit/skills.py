"""Skill descriptions: parameters, conditions, inference, blackboard scoping.

A description declares what a skill needs (params in three flavors) and
what must hold before (pre), during (hold) and after (post) execution.
Conditions evaluate against a world-model snapshot; the key ``Robot`` is
implicitly bound to the executing manager's robot element.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

from .ontology import Graph, Iri, Literal
from .world import WmSnapshot

IMPLICIT_KEYS = ("Robot",)

_UNSET = object()


class SkillError(Exception):
    code = "skill_error"


class UnboundParameterError(SkillError):
    code = "unbound_parameter"

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"parameter '{key}' is not bound")


class TypeMismatchError(SkillError):
    code = "type_mismatch"


class MissingRequiredError(SkillError):
    code = "missing_required"

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"required parameter '{key}' is missing")


class NoConsistentAssignmentError(SkillError):
    code = "no_consistent_assignment"

    def __init__(self, skill: str, diagnostics: dict):
        self.skill = skill
        self.diagnostics = diagnostics
        detail = "; ".join(f"{cand}: fails {cond}" for cand, cond in sorted(diagnostics.items()))
        super().__init__(f"no consistent parameter assignment for '{skill}'"
                         + (f" ({detail})" if detail else ""))


class ParamFlavor(str, Enum):
    REQUIRED = "required"
    OPTIONAL = "optional"
    INFERRED = "inferred"


FUNDAMENTALS = ("string", "int", "float", "bool", "list", "map")


@dataclass(frozen=True)
class ParamSpec:
    """One skill parameter: a fundamental value or an element of a concept."""

    key: str
    flavor: ParamFlavor
    element: Optional[Iri] = None
    fundamental: Optional[str] = None
    default: object = _UNSET

    def __post_init__(self):
        if (self.element is None) == (self.fundamental is None):
            raise ValueError(f"param '{self.key}' needs exactly one of element/fundamental")
        if self.fundamental is not None and self.fundamental not in FUNDAMENTALS:
            raise ValueError(f"param '{self.key}': unknown fundamental type {self.fundamental!r}")
        if self.flavor == ParamFlavor.INFERRED and self.element is None:
            raise ValueError(f"param '{self.key}': only element params can be inferred")

    @property
    def has_default(self) -> bool:
        return self.default is not _UNSET


@dataclass(frozen=True)
class RelationCondition:
    """A relation triple between two bound elements must (not) hold."""

    name: str
    predicate: Iri
    subject_key: str
    object_key: str
    desired: bool = True

    def keys(self) -> tuple:
        return (self.subject_key, self.object_key)


@dataclass(frozen=True)
class PropertyCondition:
    """Compare one property value of a bound element against a constant."""

    name: str
    property: Iri
    key: str
    op: str  # = | != | < | >
    value: Literal
    desired: bool = True

    def __post_init__(self):
        if self.op not in ("=", "!=", "<", ">"):
            raise ValueError(f"condition '{self.name}': unsupported operator {self.op!r}")

    def keys(self) -> tuple:
        return (self.key,)


@dataclass(frozen=True)
class HasPropertyCondition:
    """A bound element must (not) carry a property at all."""

    name: str
    property: Iri
    key: str
    desired: bool = True

    def keys(self) -> tuple:
        return (self.key,)


@dataclass(frozen=True)
class AllowedRelationCondition:
    """The ontology must (not) permit the relation between the elements' concepts."""

    name: str
    predicate: Iri
    subject_key: str
    object_key: str
    desired: bool = True

    def keys(self) -> tuple:
        return (self.subject_key, self.object_key)


Condition = Union[RelationCondition, PropertyCondition, HasPropertyCondition,
                  AllowedRelationCondition]


@dataclass
class SkillDescription:
    name: str
    params: list = field(default_factory=list)
    pre: list = field(default_factory=list)
    hold: list = field(default_factory=list)
    post: list = field(default_factory=list)

    def __post_init__(self):
        keys = [p.key for p in self.params]
        if len(keys) != len(set(keys)):
            raise ValueError(f"skill '{self.name}': duplicate parameter keys")
        known = set(keys) | set(IMPLICIT_KEYS)
        for cond in self.pre + self.hold + self.post:
            for key in cond.keys():
                if key not in known:
                    raise ValueError(
                        f"skill '{self.name}': condition '{cond.name}' references"
                        f" unknown parameter '{key}'")

    def param(self, key: str) -> ParamSpec:
        for p in self.params:
            if p.key == key:
                return p
        raise KeyError(key)

    def param_keys(self) -> list[str]:
        return [p.key for p in self.params]

    def element_params(self) -> list[ParamSpec]:
        return [p for p in self.params if p.element is not None]


# ---------------------------------------------------------------------------
# Condition evaluation
# ---------------------------------------------------------------------------

def _bound_iri(bindings: dict, key: str) -> Iri:
    if key not in bindings:
        raise UnboundParameterError(key)
    value = bindings[key]
    if not isinstance(value, Iri):
        raise TypeMismatchError(f"parameter '{key}' is bound to {value!r}, not an element")
    return value


def _literal_eq(a: Literal, b: Literal) -> bool:
    numeric = ("int", "float")
    if a.kind in numeric and b.kind in numeric:
        return float(a.value) == float(b.value)
    return a.kind == b.kind and a.value == b.value


def evaluate_condition(cond: Condition, bindings: dict, snapshot: WmSnapshot) -> bool:
    """Evaluate one condition; unbound keys raise rather than return False."""
    if isinstance(cond, RelationCondition):
        subject = _bound_iri(bindings, cond.subject_key)
        obj = _bound_iri(bindings, cond.object_key)
        return snapshot.has_relation(subject, cond.predicate, obj) == cond.desired
    if isinstance(cond, PropertyCondition):
        element_id = _bound_iri(bindings, cond.key)
        values = []
        if snapshot.has_element(element_id):
            values = snapshot.element(element_id).properties.get(cond.property, [])
        if cond.op in ("<", ">"):
            if cond.value.kind not in ("int", "float"):
                raise TypeMismatchError(
                    f"condition '{cond.name}': ordering comparison against {cond.value.kind}")
            for v in values:
                if v.kind not in ("int", "float"):
                    raise TypeMismatchError(
                        f"condition '{cond.name}': ordering comparison on {v.kind} value")
            if cond.op == "<":
                core = any(float(v.value) < float(cond.value.value) for v in values)
            else:
                core = any(float(v.value) > float(cond.value.value) for v in values)
        elif cond.op == "=":
            core = any(_literal_eq(v, cond.value) for v in values)
        else:
            core = any(not _literal_eq(v, cond.value) for v in values)
        return core == cond.desired
    if isinstance(cond, HasPropertyCondition):
        element_id = _bound_iri(bindings, cond.key)
        core = False
        if snapshot.has_element(element_id):
            core = bool(snapshot.element(element_id).properties.get(cond.property))
        return core == cond.desired
    if isinstance(cond, AllowedRelationCondition):
        subject = _bound_iri(bindings, cond.subject_key)
        obj = _bound_iri(bindings, cond.object_key)
        core = False
        if snapshot.has_element(subject) and snapshot.has_element(obj):
            core = snapshot.permits_relation(
                snapshot.type_of(subject), cond.predicate, snapshot.type_of(obj))
        return core == cond.desired
    raise TypeError(f"not a condition: {cond!r}")


def evaluate_all(conditions, bindings: dict, snapshot: WmSnapshot) -> Optional[Condition]:
    """First failing condition, or None when all hold."""
    for cond in conditions:
        if not evaluate_condition(cond, bindings, snapshot):
            return cond
    return None


# ---------------------------------------------------------------------------
# Parameter inference
# ---------------------------------------------------------------------------

def infer_parameters(desc: SkillDescription, partial: dict, snapshot: WmSnapshot) -> dict:
    """Complete a partial binding by searching world-model instances.

    Inferred params are assigned in declaration order, candidates in
    canonical instance order, depth-first with backtracking. The first
    assignment under which every fully-bound pre-condition holds wins, so
    the result is deterministic for a given snapshot.
    """
    bound = dict(partial)
    for p in desc.params:
        if p.key in bound:
            continue
        if p.flavor == ParamFlavor.REQUIRED:
            raise MissingRequiredError(p.key)
        if p.flavor == ParamFlavor.OPTIONAL:
            if not p.has_default:
                raise MissingRequiredError(p.key)
            bound[p.key] = p.default

    open_params = [p for p in desc.params
                   if p.flavor == ParamFlavor.INFERRED and p.key not in bound]
    if not open_params:
        # nothing to search; pre-conditions are checked again at activation
        return bound

    def consistent(bindings: dict) -> Optional[Condition]:
        for cond in desc.pre:
            if all(k in bindings for k in cond.keys()):
                if not evaluate_condition(cond, bindings, snapshot):
                    return cond
        return None

    # a failing pre-condition over already-bound keys cannot be repaired
    # by any inferred assignment
    failing = consistent(bound)
    if failing is not None:
        raise NoConsistentAssignmentError(desc.name, {"<bound>": failing.name})

    diagnostics: dict[str, str] = {}
    deepest = -1

    def search(index: int, bindings: dict) -> Optional[dict]:
        nonlocal deepest
        if index == len(open_params):
            return bindings
        param = open_params[index]
        candidates = snapshot.instances_of(param.element)
        for candidate in candidates:
            attempt = dict(bindings)
            attempt[param.key] = candidate
            blocked = consistent(attempt)
            if blocked is not None:
                if index >= deepest:
                    deepest = index
                    diagnostics[str(candidate)] = blocked.name
                continue
            result = search(index + 1, attempt)
            if result is not None:
                return result
        return None

    solution = search(0, bound)
    if solution is None:
        raise NoConsistentAssignmentError(desc.name, diagnostics)
    return solution


# ---------------------------------------------------------------------------
# Description refinement
# ---------------------------------------------------------------------------

def refines(impl: SkillDescription, base: SkillDescription, ontology: Graph) -> bool:
    """True when ``impl`` narrows ``base``: same keys/flavors, concepts
    equal-or-subclass, fundamentals identical, condition lists supersets."""
    if {p.key for p in impl.params} != {p.key for p in base.params}:
        return False
    for base_param in base.params:
        impl_param = impl.param(base_param.key)
        if impl_param.flavor != base_param.flavor:
            return False
        if (base_param.element is None) != (impl_param.element is None):
            return False
        if base_param.element is not None:
            if not ontology.is_subclass_of(impl_param.element, base_param.element):
                return False
        elif impl_param.fundamental != base_param.fundamental:
            return False
    for impl_conds, base_conds in ((impl.pre, base.pre), (impl.hold, base.hold),
                                   (impl.post, base.post)):
        impl_set = set(impl_conds)
        if any(cond not in impl_set for cond in base_conds):
            return False
    return True


# ---------------------------------------------------------------------------
# Blackboard
# ---------------------------------------------------------------------------

class Blackboard:
    """Task-scoped shared parameter map (the root of every scope chain)."""

    def __init__(self, values: Optional[dict] = None):
        self._data = dict(values or {})

    def resolve(self, key: str):
        if key not in self._data:
            raise UnboundParameterError(key)
        return self._data[key]

    def bind(self, key: str, value):
        self._data[key] = value

    def has(self, key: str) -> bool:
        return key in self._data

    def data(self) -> dict:
        return dict(self._data)


class Scope:
    """Per-node overlay: specify constants shadow, remaps alias parent keys.

    Lookup order is specify, then remap (one level, continuing at the
    parent), then plain pass-through to the parent. Writes follow the same
    routing, so specified keys never leak out of the node's subtree.
    """

    def __init__(self, parent, specify: Optional[dict] = None, remap: Optional[dict] = None):
        self.parent = parent
        self.specify = dict(specify or {})
        self.remap = dict(remap or {})

    def resolve(self, key: str):
        if key in self.specify:
            return self.specify[key]
        if key in self.remap:
            return self.parent.resolve(self.remap[key])
        return self.parent.resolve(key)

    def bind(self, key: str, value):
        if key in self.specify:
            self.specify[key] = value
            return
        if key in self.remap:
            self.parent.bind(self.remap[key], value)
            return
        self.parent.bind(key, value)

    def has(self, key: str) -> bool:
        try:
            self.resolve(key)
            return True
        except UnboundParameterError:
            return False

    def collect(self, keys) -> dict:
        """Resolve several keys, skipping unbound ones."""
        out = {}
        for key in keys:
            try:
                out[key] = self.resolve(key)
            except UnboundParameterError:
                pass
        return out


def resolve_key(scope, key: str):
    """Module-level alias used by tests and docs."""
    return scope.resolve(key)
