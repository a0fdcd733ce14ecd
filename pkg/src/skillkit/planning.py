"""Task planning: compile skills + world state to STRIPS, search, PDDL io.

Skill conditions map to a typed STRIPS domain: relation conditions become
binary predicates, ``=`` property conditions become unary value predicates
(with an exclusive-value axiom on their effects), has-property conditions
become ``<prop>_present``. Pre and hold conditions compile to
preconditions; post conditions to add/delete effects. Skills using
ontology-permission checks or ordering comparisons stay execution-only and
are excluded with a diagnostic.

The solver is uniform-cost forward search over ground states with unit
action costs, duplicate-state pruning and a lexicographic tie-break on the
grounded-action signature, which makes returned plans deterministic and
length-optimal.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Iterable, Optional

from .bt import ProcessorNode, Processor
from .library import SkillRegistry, build_skill_node
from .ontology import Graph, Iri, Literal
from .skills import (
    AllowedRelationCondition,
    Blackboard,
    HasPropertyCondition,
    PropertyCondition,
    RelationCondition,
    SkillDescription,
)
from .world import WmSnapshot

ROBOT_KEY = "Robot"
ROBOT_CONCEPT = Iri("skiros", "Agent")
DEFAULT_STATE_CAP = 10 ** 6

Atom = tuple  # (predicate, *args), all mangled strings


class PlanningError(Exception):
    code = "planning_error"


class UnknownPredicateError(PlanningError):
    code = "unknown_predicate"


class UnknownObjectError(PlanningError):
    code = "unknown_object"


class NoPlanError(PlanningError):
    code = "no_plan"


class ResourceLimitError(PlanningError):
    code = "resource_limit"


class MangleCollisionError(PlanningError):
    code = "mangle_collision"


class PddlSyntaxError(PlanningError):
    code = "pddl_syntax"


def mangle(iri: Iri) -> str:
    return f"{iri.prefix}_{iri.local}"


def demangle(text: str) -> Iri:
    prefix, sep, local = text.rpartition("_")
    if not sep:
        raise PlanningError(f"cannot demangle '{text}'")
    return Iri(prefix, local)


_SYMBOL_RE = re.compile(r"[A-Za-z0-9-]+$")


@dataclass(frozen=True)
class LiftedLiteral:
    predicate: str
    args: tuple
    positive: bool = True


@dataclass(frozen=True)
class PlanningAction:
    name: str
    params: tuple  # ((key, mangled type), ...) in declaration order, Robot last
    precondition: frozenset
    add: frozenset
    delete: frozenset

    def var_keys(self) -> tuple:
        return tuple(key for key, _ in self.params)


@dataclass
class PlanningDomain:
    name: str
    types: dict  # mangled concept -> mangled parent | None (None = object)
    predicates: dict  # name -> tuple of mangled arg types
    actions: tuple
    relation_preds: dict = field(default_factory=dict, compare=False)  # name -> Iri
    value_preds: dict = field(default_factory=dict, compare=False)  # name -> (Iri, Literal)
    present_preds: dict = field(default_factory=dict, compare=False)  # name -> Iri
    exclusions: list = field(default_factory=list, compare=False)

    def action(self, name: str) -> PlanningAction:
        for action in self.actions:
            if action.name == name:
                return action
        raise PlanningError(f"unknown action '{name}'")


@dataclass
class PlanningProblem:
    name: str
    domain_name: str
    objects: dict  # mangled object -> mangled type
    init: frozenset
    goal: tuple  # ((positive, Atom), ...) canonical order


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple
    pre_pos: frozenset
    pre_neg: frozenset
    add: frozenset
    delete: frozenset

    @property
    def signature(self) -> str:
        return "(" + " ".join((self.name,) + self.args) + ")"


@dataclass
class PlanStep:
    skill: str
    args: tuple  # mangled object names, in action var order
    bindings: dict = field(default_factory=dict)  # param key -> Iri

    def signature(self) -> str:
        return "(" + " ".join((self.skill,) + self.args) + ")"


@dataclass
class Plan:
    steps: list

    def __len__(self) -> int:
        return len(self.steps)

    def serialize(self) -> str:
        return "\n".join(step.signature() for step in self.steps) + ("\n" if self.steps else "")


@dataclass(frozen=True)
class GoalLiteral:
    positive: bool
    predicate: Iri
    subject: Iri
    object: Iri


def parse_goal_text(text: str) -> list[GoalLiteral]:
    """Goal syntax: one ``pred subj obj`` (optionally led by ``not``) per line."""
    literals = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        positive = True
        if parts[0] == "not":
            positive = False
            parts = parts[1:]
        if len(parts) != 3:
            raise PlanningError(f"goal line {lineno}: expected 'pred subj obj', got {raw!r}")
        try:
            pred, subj, obj = (Iri.parse(p) for p in parts)
        except ValueError as exc:
            raise PlanningError(f"goal line {lineno}: {exc}") from None
        literals.append(GoalLiteral(positive, pred, subj, obj))
    if not literals:
        raise PlanningError("goal text contains no literals")
    return literals


# ---------------------------------------------------------------------------
# Domain generation
# ---------------------------------------------------------------------------

def _value_symbol(value: Literal) -> Optional[str]:
    text = str(value.value)
    if isinstance(value.value, bool):
        text = "true" if value.value else "false"
    return text if _SYMBOL_RE.match(text) else None


def _plannable(desc: SkillDescription) -> Optional[str]:
    for cond in desc.pre + desc.hold + desc.post:
        if isinstance(cond, AllowedRelationCondition):
            return f"condition '{cond.name}' checks an ontology permission"
        if isinstance(cond, PropertyCondition):
            if cond.op != "=":
                return f"condition '{cond.name}' uses operator '{cond.op}'"
            if _value_symbol(cond.value) is None:
                return f"condition '{cond.name}' compares a non-symbolic value"
    return None


def _common_ancestor(concepts: list, ontology: Graph) -> Optional[Iri]:
    common = None
    for concept in concepts:
        ups = ontology.superclasses(concept)
        common = ups if common is None else common & ups
    if not common:
        return None
    # most specific common ancestor: the one with the largest ancestor set
    return max(sorted(common, key=str), key=lambda c: len(ontology.superclasses(c)))


def generate_domain(descriptions: Iterable[SkillDescription], ontology: Graph,
                    name: str = "skills") -> PlanningDomain:
    included = []
    exclusions = []
    for desc in sorted(descriptions, key=lambda d: d.name):
        reason = _plannable(desc)
        if reason is None:
            included.append(desc)
        else:
            exclusions.append(f"skill '{desc.name}' excluded from planning: {reason}")

    # assign predicate names: relation locals when unique, mangled otherwise
    relation_iris = sorted(
        {c.predicate for d in included for c in d.pre + d.hold + d.post
         if isinstance(c, RelationCondition)},
        key=str,
    )
    local_counts: dict[str, int] = {}
    for iri in relation_iris:
        local_counts[iri.local] = local_counts.get(iri.local, 0) + 1
    relation_names = {
        iri: iri.local if local_counts[iri.local] == 1 else mangle(iri)
        for iri in relation_iris
    }

    # property values per property, for the exclusive-value axiom
    prop_values: dict[Iri, set] = {}
    for desc in included:
        for cond in desc.pre + desc.hold + desc.post:
            if isinstance(cond, PropertyCondition):
                prop_values.setdefault(cond.property, set()).add(cond.value)

    relation_preds: dict[str, Iri] = {}
    value_preds: dict[str, tuple] = {}
    present_preds: dict[str, Iri] = {}
    pred_arg_types: dict[str, list] = {}

    def concept_of(desc: SkillDescription, key: str) -> Iri:
        if key == ROBOT_KEY:
            return ROBOT_CONCEPT
        return desc.param(key).element

    def note_pred(pred: str, types: list):
        slots = pred_arg_types.setdefault(pred, [set() for _ in types])
        for slot, concept in zip(slots, types):
            slot.add(concept)

    def compile_condition(desc: SkillDescription, cond) -> LiftedLiteral:
        if isinstance(cond, RelationCondition):
            pred = relation_names[cond.predicate]
            relation_preds[pred] = cond.predicate
            note_pred(pred, [concept_of(desc, cond.subject_key), concept_of(desc, cond.object_key)])
            return LiftedLiteral(pred, (cond.subject_key, cond.object_key), cond.desired)
        if isinstance(cond, PropertyCondition):
            pred = f"{cond.property.local}_{_value_symbol(cond.value)}"
            value_preds[pred] = (cond.property, cond.value)
            note_pred(pred, [concept_of(desc, cond.key)])
            return LiftedLiteral(pred, (cond.key,), cond.desired)
        if isinstance(cond, HasPropertyCondition):
            pred = f"{cond.property.local}_present"
            present_preds[pred] = cond.property
            note_pred(pred, [concept_of(desc, cond.key)])
            return LiftedLiteral(pred, (cond.key,), cond.desired)
        raise PlanningError(f"cannot compile condition {cond!r}")

    actions = []
    used_concepts: set = set()
    for desc in included:
        uses_robot = any(ROBOT_KEY in cond.keys()
                         for cond in desc.pre + desc.hold + desc.post)
        params = [(p.key, p.element) for p in desc.element_params()]
        if uses_robot:
            params.append((ROBOT_KEY, ROBOT_CONCEPT))
        for _, concept in params:
            used_concepts.add(concept)
        precondition = set()
        for cond in list(desc.pre) + list(desc.hold):
            precondition.add(compile_condition(desc, cond))
        add: set = set()
        delete: set = set()
        for cond in desc.post:
            lit = compile_condition(desc, cond)
            if lit.positive:
                add.add(lit)
                if lit.predicate in value_preds:
                    prop, value = value_preds[lit.predicate]
                    for sibling in prop_values[prop]:
                        if sibling != value and _value_symbol(sibling):
                            sib_pred = f"{prop.local}_{_value_symbol(sibling)}"
                            value_preds[sib_pred] = (prop, sibling)
                            pred_arg_types.setdefault(
                                sib_pred, [set(s) for s in pred_arg_types[lit.predicate]])
                            delete.add(LiftedLiteral(sib_pred, lit.args, True))
            else:
                delete.add(LiftedLiteral(lit.predicate, lit.args, True))
        actions.append(PlanningAction(
            name=desc.name,
            params=tuple((key, mangle(concept)) for key, concept in params),
            precondition=frozenset(precondition),
            add=frozenset(add),
            delete=frozenset(delete),
        ))

    predicates = {}
    for pred in sorted(pred_arg_types):
        arg_types = []
        for slot in pred_arg_types[pred]:
            ancestor = _common_ancestor(sorted(slot, key=str), ontology)
            if ancestor is None or ancestor == Iri("owl", "Thing"):
                arg_types.append("object")
            else:
                arg_types.append(mangle(ancestor))
                used_concepts.add(ancestor)
        predicates[pred] = tuple(arg_types)

    types: dict[str, Optional[str]] = {}

    def note_type(concept: Iri):
        key = mangle(concept)
        if key in types:
            return
        parent = ontology.direct_superclass(concept)
        if parent is None or parent == Iri("owl", "Thing"):
            types[key] = None
        else:
            types[key] = mangle(parent)
            note_type(parent)

    # the whole concept hierarchy ships with the domain so problems can
    # type instances by their most-specific concept
    from .ontology import RDFS_SUBCLASS

    for triple in ontology.triples(predicate=RDFS_SUBCLASS):
        used_concepts.add(triple.subject)
    for concept in sorted(used_concepts, key=str):
        if concept != Iri("owl", "Thing"):
            note_type(concept)

    return PlanningDomain(
        name=name,
        types=types,
        predicates=predicates,
        actions=tuple(sorted(actions, key=lambda a: a.name)),
        relation_preds=relation_preds,
        value_preds=value_preds,
        present_preds=present_preds,
        exclusions=exclusions,
    )


# ---------------------------------------------------------------------------
# Problem generation
# ---------------------------------------------------------------------------

def _type_ancestors(domain: PlanningDomain) -> dict:
    ancestors: dict[str, set] = {}

    def walk(t: str) -> set:
        if t in ancestors:
            return ancestors[t]
        acc = {t}
        parent = domain.types.get(t)
        if parent is not None:
            acc |= walk(parent)
        ancestors[t] = acc
        return acc

    for t in domain.types:
        walk(t)
    return ancestors


def _literal_matches(stored: Literal, wanted: Literal) -> bool:
    numeric = ("int", "float")
    if stored.kind in numeric and wanted.kind in numeric:
        return float(stored.value) == float(wanted.value)
    return stored.kind == wanted.kind and stored.value == wanted.value


def generate_problem(
    snapshot: WmSnapshot,
    goal: list,
    domain: PlanningDomain,
    name: str = "current",
) -> PlanningProblem:
    """Extract objects and init atoms for the domain from a world snapshot."""
    concept_iris = [demangle(t) for t in domain.types]
    objects: dict[str, str] = {}
    object_iris: dict[str, Iri] = {}
    for element in snapshot.elements():
        el_type = element.type
        if any(snapshot.is_subclass_of(el_type, c) for c in concept_iris):
            key = mangle(element.id)
            if key in object_iris and object_iris[key] != element.id:
                raise MangleCollisionError(f"'{key}' denotes two distinct elements")
            objects[key] = mangle(el_type)
            object_iris[key] = element.id

    init: set = set()
    pred_by_iri = {iri: name for name, iri in domain.relation_preds.items()}
    value_by_prop: dict = {}
    for pred_name, (prop, value) in domain.value_preds.items():
        value_by_prop.setdefault(prop, []).append((pred_name, value))
    present_by_prop = {prop: pred_name for pred_name, prop in domain.present_preds.items()}
    for triple in snapshot.graph.triples():
        subj = mangle(triple.subject)
        if subj not in objects:
            continue
        if isinstance(triple.object, Iri):
            pred_name = pred_by_iri.get(triple.predicate)
            if pred_name is not None and mangle(triple.object) in objects:
                init.add((pred_name, subj, mangle(triple.object)))
            continue
        for pred_name, value in value_by_prop.get(triple.predicate, ()):
            if _literal_matches(triple.object, value):
                init.add((pred_name, subj))
        present = present_by_prop.get(triple.predicate)
        if present is not None:
            init.add((present, subj))

    goal_atoms = []
    for lit in goal:
        pred_name = pred_by_iri.get(lit.predicate)
        if pred_name is None:
            raise UnknownPredicateError(f"goal predicate {lit.predicate} is not in the domain")
        for ref in (lit.subject, lit.object):
            if mangle(ref) not in objects:
                raise UnknownObjectError(f"goal object {ref} is not in the world model")
        goal_atoms.append((lit.positive, (pred_name, mangle(lit.subject), mangle(lit.object))))

    return PlanningProblem(
        name=name,
        domain_name=domain.name,
        objects=objects,
        init=frozenset(init),
        goal=tuple(sorted(goal_atoms, key=lambda g: (g[1], g[0]))),
    )


# ---------------------------------------------------------------------------
# Grounding and search
# ---------------------------------------------------------------------------

def ground_actions(domain: PlanningDomain, problem: PlanningProblem) -> list:
    ancestors = _type_ancestors(domain)
    by_type: dict[str, list] = {}
    for obj, obj_type in sorted(problem.objects.items()):
        for t in ancestors.get(obj_type, {obj_type}):
            by_type.setdefault(t, []).append(obj)

    grounded = []
    for action in domain.actions:
        if not action.add and not action.delete:
            continue  # effectless actions never shorten a plan
        keys = action.var_keys()
        pools = [by_type.get(t, []) for _, t in action.params]
        if any(not pool for pool in pools):
            continue

        def instantiate(binding: dict):
            sub = lambda lit: (lit.predicate,) + tuple(binding[a] for a in lit.args)
            pre_pos = frozenset(sub(l) for l in action.precondition if l.positive)
            pre_neg = frozenset(sub(l) for l in action.precondition if not l.positive)
            add = frozenset(sub(l) for l in action.add)
            delete = frozenset(sub(l) for l in action.delete)
            grounded.append(GroundAction(
                name=action.name,
                args=tuple(binding[k] for k in keys),
                pre_pos=pre_pos, pre_neg=pre_neg, add=add, delete=delete,
            ))

        def expand(index: int, binding: dict):
            if index == len(action.params):
                instantiate(binding)
                return
            key = keys[index]
            for obj in pools[index]:
                binding[key] = obj
                expand(index + 1, binding)
            binding.pop(key, None)

        expand(0, {})
    grounded.sort(key=lambda ga: ga.signature)
    return grounded


def _goal_satisfied(goal: tuple, state: frozenset) -> bool:
    return all((atom in state) == positive for positive, atom in goal)


def plan(domain: PlanningDomain, problem: PlanningProblem,
         state_cap: int = DEFAULT_STATE_CAP) -> Plan:
    """Minimum-length plan via uniform-cost search; deterministic tie-breaks."""
    grounded = ground_actions(domain, problem)
    start = problem.init
    if _goal_satisfied(problem.goal, start):
        return Plan(steps=[])
    counter = 0
    frontier = [(0, counter, start, [])]
    best_cost = {start: 0}
    expanded = 0
    while frontier:
        cost, _, state, path = heappop(frontier)
        if cost > best_cost.get(state, cost):
            continue
        expanded += 1
        if expanded > state_cap:
            raise ResourceLimitError(f"search expanded more than {state_cap} states")
        for ga in grounded:
            if not ga.pre_pos <= state or ga.pre_neg & state:
                continue
            nxt = (state - ga.delete) | ga.add
            ncost = cost + 1
            if ncost >= best_cost.get(nxt, float("inf")):
                continue
            best_cost[nxt] = ncost
            npath = path + [ga]
            if _goal_satisfied(problem.goal, nxt):
                return Plan(steps=[_to_step(domain, g) for g in npath])
            counter += 1
            heappush(frontier, (ncost, counter, nxt, npath))
    raise NoPlanError("search space exhausted without reaching the goal")


def _to_step(domain: PlanningDomain, ga: GroundAction) -> PlanStep:
    action = domain.action(ga.name)
    bindings = {key: demangle(obj) for key, obj in zip(action.var_keys(), ga.args)}
    return PlanStep(skill=ga.name, args=ga.args, bindings=bindings)


def validate_plan(domain: PlanningDomain, problem: PlanningProblem, the_plan: Plan) -> bool:
    """Independent effect simulation: preconditions at each step, goal at the end."""
    ancestors = _type_ancestors(domain)
    state = set(problem.init)
    for step in the_plan.steps:
        action = domain.action(step.skill)
        if len(step.args) != len(action.params):
            return False
        binding = {}
        for (key, var_type), obj in zip(action.params, step.args):
            obj_type = problem.objects.get(obj)
            if obj_type is None or var_type not in ancestors.get(obj_type, {obj_type}):
                return False
            binding[key] = obj
        sub = lambda lit: (lit.predicate,) + tuple(binding[a] for a in lit.args)
        for lit in action.precondition:
            holds = sub(lit) in state
            if holds != lit.positive:
                return False
        state -= {sub(l) for l in action.delete}
        state |= {sub(l) for l in action.add}
    return _goal_satisfied(problem.goal, frozenset(state))


# ---------------------------------------------------------------------------
# Plan text io
# ---------------------------------------------------------------------------

_PLAN_LINE_RE = re.compile(r"^(?:[0-9.]+\s*:\s*)?\(([^()]*)\)\s*(?:\[[0-9.]+\])?$")


def parse_plan(text: str, domain: Optional[PlanningDomain] = None) -> Plan:
    """One grounded action per line: ``(name arg1 arg2 ...)``; ``N:`` prefixes ignored."""
    steps = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        m = _PLAN_LINE_RE.match(line)
        if not m:
            raise PddlSyntaxError(f"plan line {lineno}: expected '(name args...)', got {raw!r}")
        parts = m.group(1).split()
        if not parts:
            raise PddlSyntaxError(f"plan line {lineno}: empty action")
        step = PlanStep(skill=parts[0], args=tuple(parts[1:]))
        if domain is not None:
            action = domain.action(step.skill)
            if len(step.args) != len(action.params):
                raise PddlSyntaxError(
                    f"plan line {lineno}: '{step.skill}' expects {len(action.params)} args")
            step.bindings = {key: demangle(obj)
                             for key, obj in zip(action.var_keys(), step.args)}
        steps.append(step)
    return Plan(steps=steps)


# ---------------------------------------------------------------------------
# Plan to executable tree
# ---------------------------------------------------------------------------

def plan_to_tree(the_plan: Plan, registry: SkillRegistry, snapshot: WmSnapshot,
                blackboard: Blackboard) -> ProcessorNode:
    """A sequential tree of instantiated skills, one fragment per plan step.

    Plan bindings become per-fragment constants so steps cannot clobber
    each other's keys; params the plan does not ground are inferred when
    the fragment activates.
    """
    children = []
    for step in the_plan.steps:
        specify = {key: value for key, value in step.bindings.items() if key != ROBOT_KEY}
        children.append(build_skill_node(
            registry, snapshot, step.skill, blackboard, specify=specify))
    return ProcessorNode(Processor.SEQUENTIAL, children, name="plan")


# ---------------------------------------------------------------------------
# PDDL emission
# ---------------------------------------------------------------------------

def _emit_typed_list(pairs: Iterable[tuple]) -> str:
    return " ".join(f"{name} - {t if t is not None else 'object'}" for name, t in pairs)


def _emit_literal(lit: LiftedLiteral) -> str:
    body = "(" + " ".join((lit.predicate,) + tuple(f"?{a}" for a in lit.args)) + ")"
    return body if lit.positive else f"(not {body})"


def _sorted_literals(literals: Iterable[LiftedLiteral]) -> list:
    return sorted(literals, key=lambda l: (l.predicate, l.args, not l.positive))


def emit_pddl_domain(domain: PlanningDomain) -> str:
    lines = [f"(define (domain {domain.name})"]
    lines.append("  (:requirements :strips :typing :negative-preconditions)")
    if domain.types:
        typed = _emit_typed_list(sorted(domain.types.items()))
        lines.append(f"  (:types {typed})")
    preds = []
    for name in sorted(domain.predicates):
        args = " ".join(f"?x{i} - {t}" for i, t in enumerate(domain.predicates[name]))
        preds.append(f"({name}{' ' + args if args else ''})")
    lines.append("  (:predicates " + " ".join(preds) + ")" if preds else "  (:predicates )")
    for action in domain.actions:
        params = _emit_typed_list((f"?{key}", t) for key, t in action.params)
        pre = " ".join(_emit_literal(l) for l in _sorted_literals(action.precondition))
        effects = [_emit_literal(l) for l in _sorted_literals(action.add)]
        effects += [f"(not {_emit_literal(l)})" for l in _sorted_literals(action.delete)]
        lines.append(f"  (:action {action.name}")
        lines.append(f"    :parameters ({params})")
        lines.append(f"    :precondition (and {pre})" if pre else "    :precondition (and )")
        lines.append(f"    :effect (and {' '.join(effects)})" if effects else "    :effect (and )")
        lines.append("  )")
    lines.append(")")
    return "\n".join(lines) + "\n"


def emit_pddl_problem(problem: PlanningProblem) -> str:
    lines = [f"(define (problem {problem.name})"]
    lines.append(f"  (:domain {problem.domain_name})")
    objects = _emit_typed_list(sorted(problem.objects.items()))
    lines.append(f"  (:objects {objects})")
    atoms = sorted(problem.init)
    init = " ".join("(" + " ".join(atom) + ")" for atom in atoms)
    lines.append(f"  (:init {init})")
    goal_parts = []
    for positive, atom in problem.goal:
        body = "(" + " ".join(atom) + ")"
        goal_parts.append(body if positive else f"(not {body})")
    lines.append(f"  (:goal (and {' '.join(goal_parts)}))")
    lines.append(")")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# PDDL parsing
# ---------------------------------------------------------------------------

def _sexpr(text: str):
    stripped = "\n".join(line.split(";", 1)[0] for line in text.split("\n"))
    tokens = stripped.replace("(", " ( ").replace(")", " ) ").split()
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(tokens):
            raise PddlSyntaxError("unexpected end of input")
        token = tokens[pos]
        pos += 1
        if token == "(":
            out = []
            while pos < len(tokens) and tokens[pos] != ")":
                out.append(read())
            if pos >= len(tokens):
                raise PddlSyntaxError("missing ')'")
            pos += 1
            return out
        if token == ")":
            raise PddlSyntaxError("unexpected ')'")
        return token

    expr = read()
    if pos != len(tokens):
        raise PddlSyntaxError("trailing content after the (define ...) form")
    return expr


def _parse_typed_list(items: list) -> list:
    """``a b - t c - u`` -> [(a, t), (b, t), (c, u)]; untyped entries get None."""
    out = []
    pending = []
    i = 0
    while i < len(items):
        token = items[i]
        if token == "-":
            if i + 1 >= len(items):
                raise PddlSyntaxError("dangling '-' in typed list")
            t = items[i + 1]
            for name in pending:
                out.append((name, None if t == "object" else t))
            pending = []
            i += 2
        else:
            pending.append(token)
            i += 1
    for name in pending:
        out.append((name, None))
    return out


def _parse_literal(expr: list) -> LiftedLiteral:
    if expr and expr[0] == "not":
        inner = _parse_literal(expr[1])
        return LiftedLiteral(inner.predicate, inner.args, False)
    if not expr or not isinstance(expr[0], str):
        raise PddlSyntaxError(f"bad literal {expr!r}")
    args = tuple(a.lstrip("?") for a in expr[1:])
    return LiftedLiteral(expr[0], args, True)


def _conjunction(expr) -> list:
    if not isinstance(expr, list):
        raise PddlSyntaxError(f"expected a formula, got {expr!r}")
    if expr and expr[0] == "and":
        return expr[1:]
    if not expr:
        return []
    return [expr]


def parse_pddl_domain(text: str) -> PlanningDomain:
    expr = _sexpr(text)
    if not (isinstance(expr, list) and expr and expr[0] == "define"):
        raise PddlSyntaxError("expected (define (domain ...) ...)")
    name = expr[1][1]
    types: dict[str, Optional[str]] = {}
    predicates: dict[str, tuple] = {}
    actions = []
    for section in expr[2:]:
        head = section[0]
        if head == ":requirements":
            continue
        if head == ":types":
            for type_name, parent in _parse_typed_list(section[1:]):
                types[type_name] = parent
        elif head == ":predicates":
            for pred in section[1:]:
                arg_types = tuple(t if t is not None else "object"
                                  for _, t in _parse_typed_list(pred[1:]))
                predicates[pred[0]] = arg_types
        elif head == ":action":
            action_name = section[1]
            body = dict(zip(section[2::2], section[3::2]))
            params = tuple(
                (key.lstrip("?"), t if t is not None else "object")
                for key, t in _parse_typed_list(body.get(":parameters", []))
            )
            pre = frozenset(_parse_literal(e) for e in _conjunction(body.get(":precondition", ["and"])))
            add = set()
            delete = set()
            for e in _conjunction(body.get(":effect", ["and"])):
                lit = _parse_literal(e)
                if lit.positive:
                    add.add(lit)
                else:
                    delete.add(LiftedLiteral(lit.predicate, lit.args, True))
            actions.append(PlanningAction(action_name, params, pre, frozenset(add),
                                          frozenset(delete)))
        else:
            raise PddlSyntaxError(f"unsupported domain section {head!r}")
    return PlanningDomain(
        name=name,
        types=types,
        predicates=predicates,
        actions=tuple(sorted(actions, key=lambda a: a.name)),
    )


def parse_pddl_problem(text: str) -> PlanningProblem:
    expr = _sexpr(text)
    if not (isinstance(expr, list) and expr and expr[0] == "define"):
        raise PddlSyntaxError("expected (define (problem ...) ...)")
    name = expr[1][1]
    domain_name = ""
    objects: dict[str, str] = {}
    init: set = set()
    goal: list = []
    for section in expr[2:]:
        head = section[0]
        if head == ":domain":
            domain_name = section[1]
        elif head == ":objects":
            for obj, t in _parse_typed_list(section[1:]):
                objects[obj] = t if t is not None else "object"
        elif head == ":init":
            for atom in section[1:]:
                init.add(tuple(atom))
        elif head == ":goal":
            for e in _conjunction(section[1]):
                lit = _parse_literal(e)
                goal.append((lit.positive, (lit.predicate,) + lit.args))
        else:
            raise PddlSyntaxError(f"unsupported problem section {head!r}")
    return PlanningProblem(
        name=name,
        domain_name=domain_name,
        objects=objects,
        init=frozenset(init),
        goal=tuple(sorted(goal, key=lambda g: (g[1], g[0]))),
    )
