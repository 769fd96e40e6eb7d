"""Domain model for activity knowledge graphs.

Entities follow a small MDP ontology: an Activity groups States, Actions and
ObservationFeatures; Transitions connect states through actions with a
probability; Effects describe how actions change feature values, optionally
through an Equation with Parameters.

The KnowledgeGraph is an in-memory store indexed by entity name and by
concept, with a derived triple view used for pattern matching and for the
serialization round trips. Graphs are built once, validated, then treated
as immutable (safe for concurrent readers).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import GraphValidationError, RuleSyntaxError, UnknownEntityError
from .rules import EquationExpr, RuleExpr, parse_equation, parse_rule

PROBABILITY_TOLERANCE = 1e-9


class Concept(str, Enum):
    ACTIVITY = "Activity"
    STATE = "State"
    OBSERVATION_FEATURE = "ObservationFeature"
    TRANSITION = "Transition"
    ACTION = "Action"
    EFFECT = "Effect"
    EQUATION = "Equation"
    PARAMETER = "Parameter"


class CommunicationType(str, Enum):
    # Canonical lexical forms match the serialized activity datasets.
    ASYNCHRONOUS = "Asynchronised"
    SYNCHRONOUS = "Synchronised"

    @classmethod
    def parse(cls, text: str) -> "CommunicationType":
        lowered = text.strip().lower()
        if lowered in ("asynchronous", "asynchronised", "async"):
            return cls.ASYNCHRONOUS
        if lowered in ("synchronous", "synchronised", "sync"):
            return cls.SYNCHRONOUS
        raise ValueError(f"unknown communication type {text!r}")


class FeatureType(str, Enum):
    NOMINAL = "NOMINAL"
    NUMERICAL = "NUMERICAL"
    ORDINAL = "ORDINAL"


class Distribution(str, Enum):
    NONE = "NONE"
    GAUSSIAN = "GAUSSIAN"
    EXPONENTIAL = "EXPONENTIAL"
    BINOMIAL = "BINOMIAL"
    POISSON = "POISSON"
    UNIFORM = "UNIFORM"


class ImpactType(str, Enum):
    INCREASE = "INCREASE"
    DECREASE = "DECREASE"
    CONVERT = "CONVERT"
    ON = "ON"
    OFF = "OFF"
    CONSTANT = "CONSTANT"
    COMPUTE = "COMPUTE"


@dataclass
class Activity:
    name: str
    is_sequential: bool | None = None
    number_of_actors: int | None = None
    communication_type: CommunicationType | None = None
    states: list[str] = field(default_factory=list)
    actions: list[str] = field(default_factory=list)
    observation_features: list[str] = field(default_factory=list)

    concept = Concept.ACTIVITY


@dataclass
class State:
    name: str
    is_initial_state: bool | None = None
    is_final_state: bool | None = None
    is_goal: bool | None = None
    reward: float | None = None
    expression: str | None = None
    observation_features: list[str] = field(default_factory=list)
    actions: list[str] = field(default_factory=list)

    concept = Concept.STATE


@dataclass
class ObservationFeature:
    name: str
    range_start: float | None = None
    range_end: float | None = None
    feature_type: FeatureType | None = None
    unit: str | None = None
    distribution: Distribution | None = None
    lambda_: float | None = None
    mean: float | None = None
    standard_deviation: float | None = None
    variance: float | None = None
    median: float | None = None
    mode: float | None = None
    number_experiments: int | None = None
    number_successes: int | None = None
    success_rate: float | None = None
    failure_rate: float | None = None

    concept = Concept.OBSERVATION_FEATURE


@dataclass
class Transition:
    name: str
    previous_state: str | None = None
    next_state: str | None = None
    action: str | None = None
    probability: float | None = None

    concept = Concept.TRANSITION


@dataclass
class Action:
    name: str
    effects: list[str] = field(default_factory=list)
    transitions: list[str] = field(default_factory=list)
    duration: float | None = None
    frequency: int | None = None

    concept = Concept.ACTION


@dataclass
class Effect:
    name: str
    target_features: list[str] = field(default_factory=list)
    impact_type: ImpactType | None = None
    equation: str | None = None

    concept = Concept.EFFECT


@dataclass
class Equation:
    name: str
    expression: str | None = None
    parameters: list[str] = field(default_factory=list)

    concept = Concept.EQUATION


@dataclass
class Parameter:
    name: str
    parameter_name: str | None = None
    value: float | None = None

    concept = Concept.PARAMETER


Entity = (
    Activity
    | State
    | ObservationFeature
    | Transition
    | Action
    | Effect
    | Equation
    | Parameter
)


# Property registry: serialized property name -> (field, kind, multi, required).
# Kinds: bool, int, double, string, ref, comm, feature_type, distribution,
# impact. Used by the Turtle and JSON readers/writers and by validation.
PropertySpec = tuple[str, str, bool, bool]

PROPERTIES: dict[Concept, dict[str, PropertySpec]] = {
    Concept.ACTIVITY: {
        "isSequential": ("is_sequential", "bool", False, True),
        "hasNumberOfActors": ("number_of_actors", "int", False, True),
        "hasCommunicationType": ("communication_type", "comm", False, True),
        "hasState": ("states", "ref", True, True),
        "hasAction": ("actions", "ref", True, True),
        "hasObservationFeature": ("observation_features", "ref", True, True),
    },
    Concept.STATE: {
        "isGoal": ("is_goal", "bool", False, True),
        "isFinalState": ("is_final_state", "bool", False, True),
        "isInitialState": ("is_initial_state", "bool", False, True),
        "hasExpression": ("expression", "string", False, True),
        "hasReward": ("reward", "double", False, True),
        "hasObservationFeature": ("observation_features", "ref", True, True),
        "hasAction": ("actions", "ref", True, False),
    },
    Concept.OBSERVATION_FEATURE: {
        "hasRangeStart": ("range_start", "double", False, True),
        "hasRangeEnd": ("range_end", "double", False, True),
        "hasFeatureType": ("feature_type", "feature_type", False, True),
        "hasUnit": ("unit", "string", False, False),
        "hasProbabilityDistribution": ("distribution", "distribution", False, False),
        "hasLambda": ("lambda_", "double", False, False),
        "hasMeanValue": ("mean", "double", False, False),
        "hasStandardDeviation": ("standard_deviation", "double", False, False),
        "hasVariance": ("variance", "double", False, False),
        "hasMedian": ("median", "double", False, False),
        "hasModeValue": ("mode", "double", False, False),
        "hasNumberExperiments": ("number_experiments", "int", False, False),
        "hasNumberSuccesses": ("number_successes", "int", False, False),
        "hasSuccessRate": ("success_rate", "double", False, False),
        "hasFailureRate": ("failure_rate", "double", False, False),
    },
    Concept.TRANSITION: {
        "hasPreviousState": ("previous_state", "ref", False, True),
        "hasNextState": ("next_state", "ref", False, True),
        "hasAction": ("action", "ref", False, True),
        "hasTransitionProbability": ("probability", "double", False, True),
    },
    Concept.ACTION: {
        "hasEffect": ("effects", "ref", True, True),
        "hasTransition": ("transitions", "ref", True, False),
        "hasDuration": ("duration", "double", False, False),
        "hasFrequency": ("frequency", "int", False, False),
    },
    Concept.EFFECT: {
        "hasObservationFeature": ("target_features", "ref", True, True),
        "hasImpactType": ("impact_type", "impact", False, True),
        "hasEquation": ("equation", "ref", False, False),
    },
    Concept.EQUATION: {
        "hasExpression": ("expression", "string", False, True),
        "hasParameter": ("parameters", "ref", True, True),
    },
    Concept.PARAMETER: {
        "hasName": ("parameter_name", "string", False, True),
        "hasValue": ("value", "double", False, True),
    },
}

# Case-insensitive lookup (dataset exports mix hasTransition / HasTransition).
_PROPERTY_LOOKUP: dict[Concept, dict[str, str]] = {
    concept: {prop.lower(): prop for prop in props}
    for concept, props in PROPERTIES.items()
}


def resolve_property(concept: Concept, name: str) -> str | None:
    return _PROPERTY_LOOKUP[concept].get(name.lower())


def parse_property_value(kind: str, raw):
    """Convert a raw lexical/JSON value to the typed field value."""
    if kind == "bool":
        if isinstance(raw, bool):
            return raw
        if str(raw).strip().lower() in ("true", "1"):
            return True
        if str(raw).strip().lower() in ("false", "0"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "int":
        return int(str(raw).strip())
    if kind == "double":
        return float(str(raw).strip())
    if kind in ("string", "ref"):
        return str(raw)
    if kind == "comm":
        return CommunicationType.parse(str(raw))
    if kind == "feature_type":
        return FeatureType(str(raw).strip().upper())
    if kind == "distribution":
        return Distribution(str(raw).strip().upper())
    if kind == "impact":
        return ImpactType(str(raw).strip().upper())
    raise ValueError(f"unknown property kind {kind!r}")


def render_property_value(kind: str, value) -> str:
    """Canonical lexical form used in triples and in the Turtle writer."""
    if kind == "bool":
        return "true" if value else "false"
    if kind == "int":
        return str(int(value))
    if kind == "double":
        return repr(float(value))
    if kind == "comm":
        return value.value
    if kind in ("feature_type", "distribution", "impact"):
        return value.value
    return str(value)


_CONCEPT_CLASSES = {
    Concept.ACTIVITY: Activity,
    Concept.STATE: State,
    Concept.OBSERVATION_FEATURE: ObservationFeature,
    Concept.TRANSITION: Transition,
    Concept.ACTION: Action,
    Concept.EFFECT: Effect,
    Concept.EQUATION: Equation,
    Concept.PARAMETER: Parameter,
}

_CONCEPT_ORDER = [
    Concept.ACTIVITY,
    Concept.STATE,
    Concept.OBSERVATION_FEATURE,
    Concept.ACTION,
    Concept.EFFECT,
    Concept.EQUATION,
    Concept.PARAMETER,
    Concept.TRANSITION,
]


def new_entity(concept: Concept, name: str) -> Entity:
    return _CONCEPT_CLASSES[concept](name=name)


class KnowledgeGraph:
    """In-memory entity store with a derived triple view."""

    def __init__(self):
        self._entities: dict[str, Entity] = {}
        self.extra_triples: list[tuple[str, str, str]] = []
        self._frozen = False
        self._rule_cache: dict[str, RuleExpr] = {}
        self._equation_cache: dict[str, EquationExpr] = {}
        self._transition_index: dict[tuple[str, str], list[Transition]] | None = None

    # -- construction --------------------------------------------------

    def add(self, entity: Entity) -> Entity:
        if self._frozen:
            raise RuntimeError("graph is frozen after validation")
        existing = self._entities.get(entity.name)
        if existing is not None and existing is not entity:
            raise GraphValidationError(
                [f"duplicate entity name {entity.name!r}"]
            )
        self._entities[entity.name] = entity
        return entity

    def add_extra_triple(self, subject: str, predicate: str, obj: str):
        if self._frozen:
            raise RuntimeError("graph is frozen after validation")
        self.extra_triples.append((subject, predicate, obj))

    # -- lookups --------------------------------------------------------

    def __contains__(self, name: str) -> bool:
        return name in self._entities

    def __len__(self) -> int:
        return len(self._entities)

    def get(self, name: str) -> Entity:
        try:
            return self._entities[name]
        except KeyError:
            raise UnknownEntityError(f"no entity named {name!r}") from None

    def find(self, name: str) -> Entity | None:
        return self._entities.get(name)

    def entities(self) -> list[Entity]:
        return list(self._entities.values())

    def by_concept(self, concept: Concept) -> list[Entity]:
        return [e for e in self._entities.values() if e.concept is concept]

    @property
    def activities(self) -> list[Activity]:
        return self.by_concept(Concept.ACTIVITY)

    @property
    def states(self) -> list[State]:
        return self.by_concept(Concept.STATE)

    @property
    def actions(self) -> list[Action]:
        return self.by_concept(Concept.ACTION)

    @property
    def features(self) -> list[ObservationFeature]:
        return self.by_concept(Concept.OBSERVATION_FEATURE)

    @property
    def transitions(self) -> list[Transition]:
        return self.by_concept(Concept.TRANSITION)

    def transitions_from(self, state_name: str, action_name: str) -> list[Transition]:
        if self._transition_index is None:
            index: dict[tuple[str, str], list[Transition]] = {}
            for t in self.transitions:
                index.setdefault((t.previous_state, t.action), []).append(t)
            self._transition_index = index
        return self._transition_index.get((state_name, action_name), [])

    def activities_of_state(self, state_name: str) -> list[Activity]:
        return [a for a in self.activities if state_name in a.states]

    def rule(self, state_name: str) -> RuleExpr:
        if state_name not in self._rule_cache:
            state = self.get(state_name)
            self._rule_cache[state_name] = parse_rule(state.expression)
        return self._rule_cache[state_name]

    def equation_expr(self, equation_name: str) -> EquationExpr:
        if equation_name not in self._equation_cache:
            eq = self.get(equation_name)
            self._equation_cache[equation_name] = parse_equation(eq.expression)
        return self._equation_cache[equation_name]

    def parameter_bindings(self, equation: Equation) -> dict[str, float]:
        bindings: dict[str, float] = {}
        for pname in equation.parameters:
            param = self.get(pname)
            bindings[param.parameter_name] = param.value
        return bindings

    # -- triple view ------------------------------------------------------

    def triples(self) -> list[tuple[str, str, str]]:
        """All statements as (subject, predicate, object) strings, sorted."""
        out: list[tuple[str, str, str]] = []
        for entity in self._entities.values():
            out.append((entity.name, "a", entity.concept.value))
            for prop, (attr, kind, multi, _req) in PROPERTIES[entity.concept].items():
                value = getattr(entity, attr)
                if value is None:
                    continue
                if multi:
                    for item in value:
                        out.append((entity.name, prop, render_property_value(kind, item)))
                else:
                    out.append((entity.name, prop, render_property_value(kind, value)))
        out.extend(self.extra_triples)
        out.sort()
        return out

    def match(self, subject=None, predicate=None, obj=None) -> list[tuple[str, str, str]]:
        return [
            t
            for t in self.triples()
            if (subject is None or t[0] == subject)
            and (predicate is None or t[1] == predicate)
            and (obj is None or t[2] == obj)
        ]

    # -- validation -------------------------------------------------------

    def validate(self) -> None:
        """Check referential integrity, cardinalities and value rules.

        Raises GraphValidationError listing every problem found.
        """
        problems: list[str] = []

        ref_targets = {
            (Concept.ACTIVITY, "hasState"): Concept.STATE,
            (Concept.ACTIVITY, "hasAction"): Concept.ACTION,
            (Concept.ACTIVITY, "hasObservationFeature"): Concept.OBSERVATION_FEATURE,
            (Concept.STATE, "hasObservationFeature"): Concept.OBSERVATION_FEATURE,
            (Concept.STATE, "hasAction"): Concept.ACTION,
            (Concept.TRANSITION, "hasPreviousState"): Concept.STATE,
            (Concept.TRANSITION, "hasNextState"): Concept.STATE,
            (Concept.TRANSITION, "hasAction"): Concept.ACTION,
            (Concept.ACTION, "hasEffect"): Concept.EFFECT,
            (Concept.ACTION, "hasTransition"): Concept.TRANSITION,
            (Concept.EFFECT, "hasObservationFeature"): Concept.OBSERVATION_FEATURE,
            (Concept.EFFECT, "hasEquation"): Concept.EQUATION,
            (Concept.EQUATION, "hasParameter"): Concept.PARAMETER,
        }

        for entity in self._entities.values():
            label = f"{entity.concept.value} {entity.name!r}"
            for prop, (attr, _kind, multi, required) in PROPERTIES[entity.concept].items():
                value = getattr(entity, attr)
                if required:
                    if value is None or (multi and len(value) == 0):
                        problems.append(f"{label}: missing mandatory property {prop}")
                        continue
                if value is None:
                    continue
                target = ref_targets.get((entity.concept, prop))
                if target is not None:
                    names = value if multi else [value]
                    for ref in names:
                        other = self._entities.get(ref)
                        if other is None:
                            problems.append(
                                f"{label}: dangling reference {prop} -> {ref!r}"
                            )
                        elif other.concept is not target:
                            problems.append(
                                f"{label}: {prop} -> {ref!r} is a "
                                f"{other.concept.value}, expected {target.value}"
                            )

        for activity in self.activities:
            label = f"Activity {activity.name!r}"
            if activity.number_of_actors is not None and activity.number_of_actors < 1:
                problems.append(f"{label}: hasNumberOfActors must be positive")
            initial = [
                s for s in activity.states
                if isinstance(self._entities.get(s), State)
                and self._entities[s].is_initial_state
            ]
            final = [
                s for s in activity.states
                if isinstance(self._entities.get(s), State)
                and self._entities[s].is_final_state
            ]
            if len(initial) != 1:
                problems.append(
                    f"{label}: expected exactly one initial state, found {len(initial)}"
                )
            if not final:
                problems.append(f"{label}: no state has isFinalState=true")

        for state in self.states:
            label = f"State {state.name!r}"
            if not state.expression:
                continue
            try:
                expr = parse_rule(state.expression)
            except RuleSyntaxError as exc:
                problems.append(f"{label}: hasExpression does not parse ({exc})")
                continue
            self._rule_cache[state.name] = expr
            declared = set(state.observation_features)
            for feat in expr.feature_names():
                if feat not in declared:
                    problems.append(
                        f"{label}: expression references feature {feat!r} "
                        "not listed under hasObservationFeature"
                    )

        for feature in self.features:
            label = f"ObservationFeature {feature.name!r}"
            if (
                feature.range_start is not None
                and feature.range_end is not None
                and feature.range_start > feature.range_end
            ):
                problems.append(f"{label}: hasRangeStart exceeds hasRangeEnd")
            if feature.distribution is Distribution.GAUSSIAN:
                if feature.mean is None or feature.standard_deviation is None:
                    problems.append(
                        f"{label}: GAUSSIAN requires hasMeanValue and "
                        "hasStandardDeviation"
                    )
                elif feature.standard_deviation < 0:
                    problems.append(f"{label}: hasStandardDeviation must be >= 0")
            if feature.distribution is Distribution.POISSON:
                if feature.lambda_ is None or feature.lambda_ <= 0:
                    problems.append(f"{label}: POISSON requires hasLambda > 0")
            if feature.distribution is Distribution.BINOMIAL:
                if feature.success_rate is None or not (0 <= feature.success_rate <= 1):
                    problems.append(
                        f"{label}: BINOMIAL requires hasSuccessRate in [0,1]"
                    )

        for transition in self.transitions:
            if transition.probability is None:
                continue
            if not (0.0 <= transition.probability <= 1.0):
                problems.append(
                    f"Transition {transition.name!r}: hasTransitionProbability "
                    f"{transition.probability!r} outside [0,1]"
                )

        groups: dict[tuple[str, str], float] = {}
        for transition in self.transitions:
            if transition.previous_state and transition.action:
                key = (transition.previous_state, transition.action)
                groups[key] = groups.get(key, 0.0) + (transition.probability or 0.0)
        for (prev, act), total in sorted(groups.items()):
            if abs(total - 1.0) > PROBABILITY_TOLERANCE:
                problems.append(
                    f"transitions from state {prev!r} via action {act!r} "
                    f"sum to {total!r}, expected 1"
                )

        for effect in self.effects:
            if effect.impact_type is ImpactType.COMPUTE and not effect.equation:
                problems.append(
                    f"Effect {effect.name!r}: COMPUTE impact requires hasEquation"
                )

        for equation in self.by_concept(Concept.EQUATION):
            label = f"Equation {equation.name!r}"
            if equation.expression is None:
                continue
            try:
                expr = parse_equation(equation.expression)
            except RuleSyntaxError as exc:
                problems.append(f"{label}: hasExpression does not parse ({exc})")
                continue
            self._equation_cache[equation.name] = expr
            known = {f.name for f in self.features}
            for pname in equation.parameters:
                param = self._entities.get(pname)
                if isinstance(param, Parameter):
                    known.add(param.parameter_name)
            for sym in expr.symbols:
                if sym not in known:
                    problems.append(
                        f"{label}: free symbol {sym!r} is neither a feature "
                        "nor a declared parameter"
                    )

        if problems:
            raise GraphValidationError(problems)
        self._frozen = True

    @property
    def effects(self) -> list[Effect]:
        return self.by_concept(Concept.EFFECT)


def match_triples(graph: KnowledgeGraph, pattern) -> list[tuple[str, str, str]]:
    """Triple pattern matching; None components act as wildcards."""
    subject, predicate, obj = pattern
    return graph.match(subject, predicate, obj)


def isomorphic(a: KnowledgeGraph, b: KnowledgeGraph) -> bool:
    """Graphs are considered equal when their triple sets coincide."""
    return a.triples() == b.triples()


def sorted_entities(graph: KnowledgeGraph) -> list[Entity]:
    """Deterministic writer order: by concept group, then by name."""
    out: list[Entity] = []
    for concept in _CONCEPT_ORDER:
        out.extend(sorted(graph.by_concept(concept), key=lambda e: e.name))
    return out
