"""Skill-based robot control: world model, behavior trees, task planning."""

from .bt import NodeState, Primitive, Processor, ProcessorNode, SkillNode, TickContext
from .deploy import Deployment, load_deployment
from .geometry import Pose
from .library import SkillRegistry, build_skill_node, load_library, select_implementation
from .manager import ManagerConfig, SkillManager
from .missions import MissionManager
from .ontology import Graph, Iri, Literal, Triple, parse_turtle, serialize_turtle
from .planning import (
    Plan,
    PlanningDomain,
    PlanningProblem,
    emit_pddl_domain,
    emit_pddl_problem,
    generate_domain,
    generate_problem,
    parse_goal_text,
    parse_plan,
    plan,
    plan_to_tree,
    validate_plan,
)
from .skills import (
    Blackboard,
    ParamFlavor,
    ParamSpec,
    Scope,
    SkillDescription,
    evaluate_condition,
    infer_parameters,
    refines,
)
from .world import ChangeEvent, Element, WorldModel

__version__ = "0.1.0"

__all__ = [
    "Blackboard", "ChangeEvent", "Deployment", "Element", "Graph", "Iri", "Literal",
    "ManagerConfig", "MissionManager", "NodeState", "ParamFlavor", "ParamSpec",
    "Plan", "PlanningDomain", "PlanningProblem", "Pose", "Primitive", "Processor",
    "ProcessorNode", "Scope", "SkillDescription", "SkillManager", "SkillNode",
    "SkillRegistry", "TickContext", "Triple", "WorldModel", "build_skill_node",
    "emit_pddl_domain", "emit_pddl_problem", "evaluate_condition", "generate_domain",
    "generate_problem", "infer_parameters", "load_deployment", "load_library",
    "parse_goal_text", "parse_plan", "parse_turtle", "plan", "plan_to_tree",
    "refines", "select_implementation", "serialize_turtle", "validate_plan",
]
