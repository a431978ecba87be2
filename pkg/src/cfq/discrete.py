"""Exact supposability engine for finite measurement scenarios.

Events are settings, outcomes, and exogenous noise with finite domains.
A scenario bundles a causal precedence relation, an outcome behavior table,
and a (possibly adaptive) setting strategy.  Supposabilities are evaluated
by exhaustive enumeration: the fixture posterior is computed in the actual
world and the consequent probability in the counterfactual world where the
antecedent settings are pinned to constants.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

from .errors import (
    CausalViolationError,
    ConditioningError,
    InputError,
    QueryError,
    ValidationError,
)

DIST_TOL = 1e-12
SUM_TOL = 1e-10

Assignment = Mapping[str, Any]


@dataclass(frozen=True)
class Event:
    id: str
    kind: str  # "setting" | "outcome" | "noise"
    domain: tuple

    def __post_init__(self):
        if self.kind not in ("setting", "outcome", "noise"):
            raise InputError(f"unknown event kind {self.kind!r} for {self.id!r}")
        if len(self.domain) == 0:
            raise ValidationError(f"event {self.id!r} has an empty domain")


class CausalStructure:
    """Strict partial order over event ids, given as an explicit edge list.

    The reflexive-transitive closure is computed once; `descends` answers
    inclusive reachability queries.
    """

    def __init__(self, ids: Sequence[str], edges: Sequence[tuple]):
        self.ids = list(ids)
        idset = set(self.ids)
        for a, b in edges:
            if a not in idset or b not in idset:
                raise InputError(f"precedence edge ({a!r}, {b!r}) uses unknown id")
        succ = {i: set() for i in self.ids}
        for a, b in edges:
            succ[a].add(b)
        # transitive closure by repeated expansion (tiny graphs)
        closure = {i: set(s) for i, s in succ.items()}
        changed = True
        while changed:
            changed = False
            for i in self.ids:
                extra = set()
                for j in closure[i]:
                    extra |= closure[j]
                if not extra <= closure[i]:
                    closure[i] |= extra
                    changed = True
        for i in self.ids:
            if i in closure[i]:
                raise ValidationError("causal precedence contains a cycle")
        self._strict = closure

    def strictly_precedes(self, a: str, b: str) -> bool:
        return b in self._strict[a]

    def descendants_inclusive(self, roots: set) -> set:
        out = set(roots)
        for r in roots:
            out |= self._strict[r]
        return out

    def predecessors(self, i: str) -> set:
        return {j for j in self.ids if i in self._strict[j]}

    def topological_order(self) -> list:
        # ties broken lexicographically so adaptive evaluation is reproducible
        remaining = sorted(self.ids)
        order = []
        placed = set()
        while remaining:
            for i in remaining:
                if self.predecessors(i) <= placed:
                    order.append(i)
                    placed.add(i)
                    remaining.remove(i)
                    break
            else:  # pragma: no cover - cycles already rejected
                raise ValidationError("no topological order exists")
        return order


@dataclass(frozen=True)
class ConstantRule:
    value: Any


@dataclass(frozen=True)
class TableRule:
    """Conditional distribution over a setting's domain given parent values.

    `rows` maps a tuple of parent values (ordered as `parents`) to a
    {value: probability} distribution.
    """

    parents: tuple
    rows: Mapping[tuple, Mapping[Any, float]]


@dataclass(frozen=True)
class Strategy:
    rules: Mapping[str, ConstantRule | TableRule]

    def replaced(self, constants: Assignment) -> "Strategy":
        new = dict(self.rules)
        for sid, val in constants.items():
            new[sid] = ConstantRule(val)
        return Strategy(new)


@dataclass(frozen=True)
class Behavior:
    """Joint outcome table wp(o | z, lambda) plus independent noise priors.

    `outcome_table` maps a frozenset of (id, value) pairs over all settings
    and noise events to a {frozenset of (id, value) outcome pairs: prob}
    distribution.
    """

    noise_priors: Mapping[str, Mapping[Any, float]]
    outcome_table: Mapping[frozenset, Mapping[frozenset, float]]


@dataclass(frozen=True)
class Scenario:
    events: tuple
    causal: CausalStructure
    behavior: Behavior
    strategy: Strategy

    def __post_init__(self):
        ids = [e.id for e in self.events]
        if len(set(ids)) != len(ids):
            raise ValidationError("event ids are not unique")
        self._validate_behavior()
        self._validate_strategy(self.strategy)

    def events_by_kind(self, kind: str) -> list:
        return [e for e in self.events if e.kind == kind]

    def event(self, eid: str) -> Event:
        for e in self.events:
            if e.id == eid:
                return e
        raise InputError(f"unknown event id {eid!r}")

    def ids(self) -> set:
        return {e.id for e in self.events}

    def _validate_behavior(self):
        b = self.behavior
        for nid, prior in b.noise_priors.items():
            ev = self.event(nid)
            if ev.kind != "noise":
                raise ValidationError(f"prior given for non-noise event {nid!r}")
            s = sum(prior.values())
            if abs(s - 1.0) > DIST_TOL or any(p < 0 or p > 1 for p in prior.values()):
                raise ValidationError(f"noise prior for {nid!r} is not a distribution")
        settings = self.events_by_kind("setting")
        noises = self.events_by_kind("noise")
        outcomes = self.events_by_kind("outcome")
        for combo in itertools.product(*[e.domain for e in settings + noises]):
            key = frozenset(zip([e.id for e in settings + noises], combo))
            if key not in b.outcome_table:
                raise ValidationError(f"behavior table misses conditioning {dict(key)}")
            dist = b.outcome_table[key]
            s = sum(dist.values())
            if abs(s - 1.0) > DIST_TOL or any(p < 0 or p > 1 for p in dist.values()):
                raise ValidationError(f"behavior row for {dict(key)} is not a distribution")
            n_out = math.prod(len(e.domain) for e in outcomes)
            if len(dist) > n_out:
                raise ValidationError("behavior row has surplus outcome entries")

    def _validate_strategy(self, strategy: Strategy):
        setting_ids = {e.id for e in self.events_by_kind("setting")}
        if set(strategy.rules) != setting_ids:
            raise ValidationError("strategy must define a rule for every setting")
        for sid, rule in strategy.rules.items():
            if isinstance(rule, TableRule):
                for parent in rule.parents:
                    if not self.causal.strictly_precedes(parent, sid):
                        raise CausalViolationError(
                            f"rule for {sid!r} reads {parent!r}, which does not precede it"
                        )


@dataclass(frozen=True)
class Query:
    evidence: Mapping[str, Any]
    antecedent: Mapping[str, Any]
    consequent: Mapping[str, Any]


def inclusive_descendants(scenario: Scenario, antecedent_ids: set) -> set:
    setting_ids = {e.id for e in scenario.events_by_kind("setting")}
    unknown = set(antecedent_ids) - scenario.ids()
    if unknown:
        raise InputError(f"unknown antecedent ids {sorted(unknown)}")
    if not set(antecedent_ids) <= setting_ids:
        raise InputError("antecedent ids must all be settings")
    if not antecedent_ids:
        return set()
    return scenario.causal.descendants_inclusive(set(antecedent_ids))


def fixtures(scenario: Scenario, antecedent_ids: set) -> set:
    return scenario.ids() - inclusive_descendants(scenario, antecedent_ids)


def _rule_prob(rule, value, partial: dict) -> float:
    if isinstance(rule, ConstantRule):
        return 1.0 if value == rule.value else 0.0
    key = tuple(partial[p] for p in rule.parents)
    if key not in rule.rows:
        raise ValidationError(f"strategy table misses parent values {key}")
    return rule.rows[key].get(value, 0.0)


def joint_distribution(scenario: Scenario, strategy: Strategy | None = None) -> dict:
    """Exact joint distribution over full assignments as {frozenset: prob}.

    Pr(omega) = prod_l p_l(lambda_l) * prod_j S_j(z_j | predecessors) * wp(o|z,lam).
    """
    strategy = strategy if strategy is not None else scenario.strategy
    scenario._validate_strategy(strategy)
    settings = scenario.events_by_kind("setting")
    noises = scenario.events_by_kind("noise")
    outcomes = scenario.events_by_kind("outcome")
    ordered = scenario.events
    joint = {}
    total = 0.0
    for combo in itertools.product(*[e.domain for e in ordered]):
        omega = dict(zip([e.id for e in ordered], combo))
        p = 1.0
        for nv in noises:
            p *= scenario.behavior.noise_priors[nv.id].get(omega[nv.id], 0.0)
        for sv in settings:
            p *= _rule_prob(strategy.rules[sv.id], omega[sv.id], omega)
            if p == 0.0:
                break
        if p == 0.0:
            continue
        cond = frozenset((e.id, omega[e.id]) for e in settings + noises)
        okey = frozenset((e.id, omega[e.id]) for e in outcomes)
        p *= scenario.behavior.outcome_table[cond].get(okey, 0.0)
        if p > 0.0:
            joint[frozenset(omega.items())] = p
            total += p
    if abs(total - 1.0) > SUM_TOL:
        raise ValidationError(f"joint distribution sums to {total}, expected 1")
    return joint


def _marginal(joint: dict, assignment: Assignment) -> float:
    items = set(assignment.items())
    return sum(p for omega, p in joint.items() if items <= omega)


def _validate_query(scenario: Scenario, query: Query):
    setting_ids = {e.id for e in scenario.events_by_kind("setting")}
    outcome_ids = {e.id for e in scenario.events_by_kind("outcome")}
    if not set(query.evidence) <= setting_ids | outcome_ids:
        raise QueryError("evidence keys must be settings or outcomes")
    if not set(query.antecedent) <= setting_ids:
        raise QueryError("antecedent keys must be settings")
    desc = inclusive_descendants(scenario, set(query.antecedent))
    if not set(query.consequent) <= desc:
        raise QueryError("consequent must lie among inclusive descendants of the antecedent")
    for eid, val in {**query.evidence, **query.antecedent, **query.consequent}.items():
        if val not in scenario.event(eid).domain:
            raise QueryError(f"value {val!r} outside domain of event {eid!r}")


def supposability_terms(scenario: Scenario, query: Query) -> list:
    """Per-fixture terms of the supposability sum.

    Returns [(fixture_assignment, posterior, counterfactual_conditional)];
    the supposability is the sum of posterior * conditional.
    """
    _validate_query(scenario, query)
    fix = sorted(fixtures(scenario, set(query.antecedent)))
    actual_joint = joint_distribution(scenario, scenario.strategy)
    p_e = _marginal(actual_joint, query.evidence)
    if p_e <= 0.0:
        raise ConditioningError("evidence has zero probability in the actual world")
    cf_strategy = scenario.strategy.replaced(query.antecedent)
    cf_joint = joint_distribution(scenario, cf_strategy)
    terms = []
    fix_events = [scenario.event(i) for i in fix]
    for combo in itertools.product(*[e.domain for e in fix_events]):
        f_assign = dict(zip(fix, combo))
        posterior = _marginal(actual_joint, {**query.evidence, **f_assign}) / p_e
        if posterior == 0.0:
            continue
        denom = _marginal(cf_joint, {**query.antecedent, **f_assign})
        if denom <= 0.0:
            raise ConditioningError(
                f"fixture {f_assign} has zero probability in the counterfactual world"
            )
        numer = _marginal(cf_joint, {**query.antecedent, **f_assign, **query.consequent})
        terms.append((f_assign, posterior, numer / denom))
    return terms


def supposability(scenario: Scenario, query: Query) -> float:
    return sum(post * cond for _, post, cond in supposability_terms(scenario, query))


# ---------------------------------------------------------------------------
# CHSH worked example
# ---------------------------------------------------------------------------

def chsh_behavior(x_angles, y_angles):
    """Singlet-statistics table wp(a,b|x,y) = (1 - a b cos(x-y)) / 4."""
    table = {}
    for x in x_angles:
        for y in y_angles:
            key = frozenset([("X", x), ("Y", y)])
            dist = {}
            for a in (1, -1):
                for b in (1, -1):
                    dist[frozenset([("A", a), ("B", b)])] = 0.25 * (1.0 - a * b * math.cos(x - y))
            table[key] = dist
    return table


def chsh_scenario(alice_angle: float, bob_angle: float, alice_cf_angle: float):
    """Bell-CHSH scenario plus the standard single-run counterfactual query.

    Angles are Bloch-sphere angles within one great circle; outcomes are
    +1 (spin along the setting axis) and -1 (against it).  The query asks for
    the counterfactual outcome A=+1 had Alice measured `alice_cf_angle`,
    given evidence (X=alice_angle, A=+1, Y=bob_angle).
    """
    x_dom = (alice_angle,) if alice_cf_angle == alice_angle else (alice_angle, alice_cf_angle)
    events = (
        Event("X", "setting", x_dom),
        Event("Y", "setting", (bob_angle,)),
        Event("A", "outcome", (1, -1)),
        Event("B", "outcome", (1, -1)),
    )
    causal = CausalStructure([e.id for e in events], [("X", "A"), ("Y", "B")])
    behavior = Behavior({}, chsh_behavior(x_dom, (bob_angle,)))
    strategy = Strategy({"X": ConstantRule(alice_angle), "Y": ConstantRule(bob_angle)})
    scenario = Scenario(events, causal, behavior, strategy)
    query = Query(
        evidence={"X": alice_angle, "A": 1, "Y": bob_angle},
        antecedent={"X": alice_cf_angle},
        consequent={"A": 1},
    )
    return scenario, query


# ---------------------------------------------------------------------------
# JSON ingestion (schema documented in the README)
# ---------------------------------------------------------------------------

def _dist_from_json(entries) -> dict:
    return {_value(e["value"]): float(e["p"]) for e in entries}


def _value(v):
    # JSON values are used verbatim as domain elements
    return tuple(v) if isinstance(v, list) else v


def scenario_from_json(doc: Mapping) -> tuple:
    """Build (Scenario, Query) from the documented JSON layout."""
    try:
        events = tuple(
            Event(e["id"], e["kind"], tuple(_value(v) for v in e["domain"]))
            for e in doc["events"]
        )
        causal = CausalStructure([e.id for e in events], [tuple(e) for e in doc["precedes"]])
        bdoc = doc["behavior"]
        priors = {nid: _dist_from_json(rows) for nid, rows in bdoc.get("noise", {}).items()}
        table = {}
        for row in bdoc["outcomes"]:
            key = frozenset((k, _value(v)) for k, v in row["given"].items())
            table[key] = {
                frozenset((k, _value(v)) for k, v in entry["assign"].items()): float(entry["p"])
                for entry in row["dist"]
            }
        rules = {}
        for sid, rdoc in doc["strategy"].items():
            if "constant" in rdoc:
                rules[sid] = ConstantRule(_value(rdoc["constant"]))
            else:
                tdoc = rdoc["table"]
                parents = tuple(tdoc["parents"])
                rows = {
                    tuple(_value(r["given"][p]) for p in parents): _dist_from_json(r["dist"])
                    for r in tdoc["rows"]
                }
                rules[sid] = TableRule(parents, rows)
        scenario = Scenario(events, causal, Behavior(priors, table), Strategy(rules))
        qdoc = doc["query"]
        query = Query(
            evidence={k: _value(v) for k, v in qdoc["evidence"].items()},
            antecedent={k: _value(v) for k, v in qdoc["antecedent"].items()},
            consequent={k: _value(v) for k, v in qdoc["consequent"].items()},
        )
    except KeyError as exc:
        raise InputError(f"scenario document misses key {exc}") from exc
    return scenario, query
