"""Per-agent activity simulation closures.

``make_simulation`` returns a step function that captures the graph and a
mutable state snapshot. Each call performs one action: it looks up the
matching transition for (current state label, action), applies the action's
effects, re-derives the state label and updates the running reward
(+increment for a matched transition, -increment otherwise). Closures are
single-owner; any number of them can read the same frozen graph.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import (
    ActivityTerminatedError,
    EvaluationError,
    MissingFeatureError,
    StepLimitExceededError,
    UnknownEntityError,
    UnknownSituationError,
)
from .kg import Action, Activity, ImpactType, KnowledgeGraph, State

UNKNOWN_STATE = "UNKNOWN"


@dataclass
class SimConfig:
    reward_increment: float = 0.25
    stochastic: bool = False
    rng_seed: int = 0
    max_steps: int | None = None  # defaults to 50 x number of states


@dataclass
class SimState:
    feature_values: dict[str, float | str] = field(default_factory=dict)
    state_label: str = UNKNOWN_STATE
    reward: float = 0.0
    is_goal: bool = False
    is_final: bool = False
    step_index: int = 0

    def clone(self) -> "SimState":
        return SimState(
            feature_values=dict(self.feature_values),
            state_label=self.state_label,
            reward=self.reward,
            is_goal=self.is_goal,
            is_final=self.is_final,
            step_index=self.step_index,
        )


def _rule_holds(graph, state_name, features):
    try:
        return graph.rule(state_name).evaluate(features)
    except (MissingFeatureError, EvaluationError):
        return None  # not evaluable against this feature map


def recognize_state(graph: KnowledgeGraph, feature_values) -> SimState:
    """Match observed feature values against state expressions.

    States are scanned in name order; the first whose expression holds wins.
    Raises UnknownSituationError when nothing matches (the rejection path).
    """
    for state in sorted(graph.states, key=lambda s: s.name):
        if _rule_holds(graph, state.name, feature_values):
            return SimState(
                feature_values=dict(feature_values),
                state_label=state.name,
                reward=0.0,
                is_goal=bool(state.is_goal),
                is_final=bool(state.is_final_state),
            )
    raise UnknownSituationError("observed features match no known state")


def initial_features(graph: KnowledgeGraph, activity_name: str) -> dict[str, float]:
    """Range-start defaults for every feature of an activity."""
    activity = graph.get(activity_name)
    return {
        fname: graph.get(fname).range_start for fname in activity.observation_features
    }


def state_features(graph: KnowledgeGraph, state_name: str) -> dict[str, float | str]:
    """A feature map consistent with one state: range-start defaults for the
    owning activity overlaid with the values pinned by the state's rule."""
    state = graph.get(state_name)
    if not isinstance(state, State):
        raise UnknownEntityError(f"{state_name!r} is not a state")
    owners = graph.activities_of_state(state_name)
    features: dict[str, float | str] = {}
    if owners:
        features.update(initial_features(graph, owners[0].name))
    else:
        for fname in state.observation_features:
            features[fname] = graph.get(fname).range_start
    features.update(graph.rule(state_name).pinned_values())
    return features


def _owning_activity(graph: KnowledgeGraph, state_name: str) -> Activity | None:
    owners = graph.activities_of_state(state_name)
    return owners[0] if len(owners) == 1 else None


def _apply_effect(graph, effect, features):
    for fname in effect.target_features:
        feature = graph.get(fname)
        lo, hi = feature.range_start, feature.range_end
        current = features.get(fname, lo)
        if effect.impact_type is ImpactType.ON:
            features[fname] = 1.0
        elif effect.impact_type is ImpactType.OFF:
            features[fname] = 0.0
        elif effect.impact_type is ImpactType.CONVERT:
            # reflection across the range; 1 - v on binary [0, 1] features
            features[fname] = lo + hi - float(current)
        elif effect.impact_type is ImpactType.INCREASE:
            features[fname] = min(hi, float(current) + (hi - lo) / 10.0)
        elif effect.impact_type is ImpactType.DECREASE:
            features[fname] = max(lo, float(current) - (hi - lo) / 10.0)
        elif effect.impact_type is ImpactType.CONSTANT:
            pass
        elif effect.impact_type is ImpactType.COMPUTE:
            equation = graph.get(effect.equation)
            bindings = dict(features)
            for pname, pvalue in graph.parameter_bindings(equation).items():
                if pname in bindings and pname in features:
                    raise EvaluationError(
                        f"symbol {pname!r} is both a feature and a parameter"
                    )
                bindings[pname] = pvalue
            features[fname] = graph.equation_expr(equation.name).evaluate(bindings)


def _relabel(graph, target: State, features, scope: Activity | None) -> str:
    """Derive the state label after a transition.

    The transition target wins when its rule holds. When the features do not
    encode the target (rule false or not evaluable) but the rule pins plain
    equality values, those values are written into the feature map and the
    target is kept. Otherwise the states are scanned for the first match.
    """
    holds = _rule_holds(graph, target.name, features)
    if holds:
        return target.name
    pinned = graph.rule(target.name).pinned_values()
    if pinned:
        features.update(pinned)
        return target.name
    candidates = (
        [graph.get(s) for s in scope.states] if scope is not None else graph.states
    )
    for state in sorted(candidates, key=lambda s: s.name):
        if _rule_holds(graph, state.name, features):
            return state.name
    return UNKNOWN_STATE


def evaluate_equation(equation, features, parameters) -> float:
    """Evaluate an equation's expression with features and parameter values."""
    from .rules import parse_equation

    bindings = dict(features)
    for pname, pvalue in parameters.items():
        if pname in bindings:
            raise EvaluationError(f"symbol {pname!r} is both a feature and a parameter")
        bindings[pname] = pvalue
    expression = equation.expression if hasattr(equation, "expression") else equation
    return parse_equation(expression).evaluate(bindings)


def make_simulation(graph: KnowledgeGraph, initial: SimState, cfg: SimConfig | None = None):
    """Create a simulation closure over (graph, state snapshot).

    The initial state must carry a recognizable label: either one already
    set (and consistent with its feature values) or one derivable from the
    features. The returned callable takes an action name and returns the
    updated state snapshot.
    """
    cfg = cfg or SimConfig()
    if initial.state_label == UNKNOWN_STATE or initial.state_label not in graph:
        state = recognize_state(graph, initial.feature_values)
        state.reward = initial.reward
        state.step_index = initial.step_index
    else:
        holds = _rule_holds(graph, initial.state_label, initial.feature_values)
        if holds is False:
            raise UnknownSituationError(
                f"features contradict state {initial.state_label!r}"
            )
        state = initial.clone()
        entity = graph.get(state.state_label)
        state.is_goal = bool(entity.is_goal)
        state.is_final = bool(entity.is_final_state)

    scope = _owning_activity(graph, state.state_label)
    if scope is not None:
        missing = [
            f for f in scope.observation_features if f not in state.feature_values
        ]
        if missing:
            raise UnknownSituationError(
                f"initial features do not cover activity {scope.name!r}: "
                f"missing {missing}"
            )
        scope_states = set(scope.states)
        scope_actions = set(scope.actions)
    else:
        scope_states = scope_actions = None

    max_steps = cfg.max_steps if cfg.max_steps is not None else 50 * max(
        1, len(graph.states)
    )
    rng = random.Random(cfg.rng_seed)

    def step(performed_action: str) -> SimState:
        if state.is_final:
            raise ActivityTerminatedError(
                f"activity terminated in state {state.state_label!r}"
            )
        if state.step_index >= max_steps:
            raise StepLimitExceededError(f"exceeded {max_steps} steps")
        entity = graph.find(performed_action)
        if not isinstance(entity, Action):
            raise UnknownEntityError(f"unknown action {performed_action!r}")

        matching = graph.transitions_from(state.state_label, performed_action)
        if scope_states is not None:
            matching = [
                t
                for t in matching
                if t.next_state in scope_states and t.action in scope_actions
            ]
        if matching:
            if cfg.stochastic:
                ordered = sorted(matching, key=lambda t: t.next_state)
                draw = rng.random()
                cumulative = 0.0
                chosen = ordered[-1]
                for t in ordered:
                    cumulative += t.probability
                    if draw < cumulative:
                        chosen = t
                        break
            else:
                chosen = min(matching, key=lambda t: (-t.probability, t.next_state))
            target = graph.get(chosen.next_state)
            for effect_name in entity.effects:
                _apply_effect(graph, graph.get(effect_name), state.feature_values)
            state.state_label = _relabel(graph, target, state.feature_values, scope)
            matched = graph.find(state.state_label)
            if scope is None or not scope.is_sequential:
                gained = matched.reward if isinstance(matched, State) else 0.0
                state.reward += gained
            else:
                state.reward += cfg.reward_increment
            if isinstance(matched, State):
                state.is_goal = bool(matched.is_goal)
                state.is_final = bool(matched.is_final_state)
        else:
            state.reward -= cfg.reward_increment
        state.step_index += 1
        return state.clone()

    return step
