"""Candidate evaluation: structural metrics, quality-attribute scoring through
a fixed proxy table, rule-generated risks, and weighted ranking.

Scores are comparative: metric inputs are min-max normalized across the
candidate set under evaluation (an input every candidate shares normalizes to
0.5), so a score of 1.0 means "best of this set", not an absolute guarantee.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .candidates import EVENT_BUS, ArchitectureCandidate, Style
from .domain_scenarios import DomainModel, UseCaseScenario
from .errors import ArchgenError
from .requirements import QualityAttribute, RequirementSet

HOP_RISK_THRESHOLD = 6
DEFAULT_WEIGHT_PRESENT = 1.0
DEFAULT_WEIGHT_ABSENT = 0.25

_SCALABILITY_BONUS = {
    Style.MICROSERVICES_SYNC: 0.8,
    Style.MICROSERVICES_EVENT: 1.0,
    Style.MODULAR_MONOLITH: 0.4,
}
_AVAILABILITY_BONUS = {
    Style.MICROSERVICES_EVENT: 1.0,
    Style.MICROSERVICES_SYNC: 0.7,
    Style.MODULAR_MONOLITH: 0.5,
}


class AllWeightsZero(ArchgenError):
    pass


class NegativeWeight(ArchgenError):
    pass


@dataclass(frozen=True)
class ComponentMetrics:
    ca: int
    ce: int
    instability: float
    cohesion: float | None  # None for the bus, which owns no concepts

    def to_dict(self) -> dict:
        return {
            "ca": self.ca,
            "ce": self.ce,
            "instability": self.instability,
            "cohesion": self.cohesion,
        }


@dataclass(frozen=True)
class MetricsReport:
    components: dict[str, ComponentMetrics]
    cycle_count: int
    max_scenario_hops: int
    mean_scenario_hops: float
    requirement_coverage: float

    def mean_cohesion(self) -> float:
        values = [m.cohesion for m in self.components.values() if m.cohesion is not None]
        return sum(values) / len(values) if values else 1.0

    def max_ca(self) -> int:
        return max((m.ca for m in self.components.values()), default=0)

    def wide_interface_count(self, candidate: ArchitectureCandidate) -> int:
        return sum(1 for c in candidate.components if len(c.provided_interfaces) > 2)

    def to_dict(self) -> dict:
        return {
            "components": {name: m.to_dict() for name, m in sorted(self.components.items())},
            "cycle_count": self.cycle_count,
            "max_scenario_hops": self.max_scenario_hops,
            "mean_scenario_hops": self.mean_scenario_hops,
            "requirement_coverage": self.requirement_coverage,
        }


@dataclass(frozen=True)
class Risk:
    attribute: QualityAttribute
    rule: str
    detail: str

    def to_dict(self) -> dict:
        return {"attribute": self.attribute.value, "rule": self.rule, "detail": self.detail}


@dataclass(frozen=True)
class QualityScores:
    scores: dict[QualityAttribute, float]
    risks: tuple[Risk, ...]

    def scores_dict(self) -> dict:
        return {attr.value: score for attr, score in sorted(self.scores.items())}


@dataclass(frozen=True)
class Ranking:
    weights: dict[QualityAttribute, float]
    utilities: dict[str, float]
    order: tuple[str, ...]

    def to_weights_dict(self) -> dict:
        return {attr.value: weight for attr, weight in sorted(self.weights.items())}


# ---------------------------------------------------------------------------
# Metrics


def _strongly_connected_cycle_count(nodes: Sequence[str], edges: set[tuple[str, str]]) -> int:
    """Number of strongly connected components of size > 1 (iterative Tarjan)."""
    adjacency: dict[str, list[str]] = {node: [] for node in nodes}
    for source, target in sorted(edges):
        adjacency[source].append(target)

    index_of: dict[str, int] = {}
    lowlink: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    counter = 0
    cycles = 0

    for root in sorted(nodes):
        if root in index_of:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            node, child_index = work[-1]
            if child_index == 0:
                index_of[node] = lowlink[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            for position in range(child_index, len(adjacency[node])):
                child = adjacency[node][position]
                if child not in index_of:
                    work[-1] = (node, position + 1)
                    work.append((child, 0))
                    advanced = True
                    break
                if child in on_stack:
                    lowlink[node] = min(lowlink[node], index_of[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index_of[node]:
                size = 0
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    size += 1
                    if member == node:
                        break
                if size > 1:
                    cycles += 1
    return cycles


def compute_metrics(
    candidate: ArchitectureCandidate,
    model: DomainModel,
    scenarios: Sequence[UseCaseScenario],
    reqs: RequirementSet,
) -> MetricsReport:
    """Structural metrics for one candidate; pure and deterministic."""
    names = candidate.component_names()
    outgoing: dict[str, set[str]] = {name: set() for name in names}
    incoming: dict[str, set[str]] = {name: set() for name in names}
    edge_set: set[tuple[str, str]] = set()
    for dep in candidate.dependencies:
        outgoing[dep.source].add(dep.target)
        incoming[dep.target].add(dep.source)
        edge_set.add((dep.source, dep.target))

    internal_pairs: dict[str, set[frozenset[str]]] = {name: set() for name in names}
    owner = candidate.owner_of()
    for relation in model.relations:
        if relation.source == relation.target:
            continue
        source_owner = owner.get(relation.source)
        if source_owner is not None and source_owner == owner.get(relation.target):
            internal_pairs[source_owner].add(frozenset((relation.source, relation.target)))

    components: dict[str, ComponentMetrics] = {}
    for component in candidate.components:
        ca = len(incoming[component.name])
        ce = len(outgoing[component.name])
        instability = ce / (ca + ce) if (ca + ce) > 0 else 0.0
        if component.name == EVENT_BUS:
            cohesion: float | None = None
        else:
            n = len(component.owned_concepts)
            if n <= 1:
                cohesion = 1.0
            else:
                possible = n * (n - 1) // 2
                cohesion = len(internal_pairs[component.name]) / possible
        components[component.name] = ComponentMetrics(
            ca=ca, ce=ce, instability=instability, cohesion=cohesion
        )

    hops = [trace.hops for trace in candidate.traces]
    traced_ids = {trace.scenario_id for trace in candidate.traces}
    functional_ids = {req.id for req in reqs.functional()}
    covered: set[str] = set()
    for scenario in scenarios:
        if scenario.id in traced_ids:
            covered |= scenario.linked_requirements & functional_ids
    coverage = len(covered) / len(functional_ids) if functional_ids else 1.0

    return MetricsReport(
        components=components,
        cycle_count=_strongly_connected_cycle_count(names, edge_set),
        max_scenario_hops=max(hops, default=0),
        mean_scenario_hops=sum(hops) / len(hops) if hops else 0.0,
        requirement_coverage=coverage,
    )


# ---------------------------------------------------------------------------
# Scoring


def _normalize(values: dict[str, float]) -> dict[str, float]:
    """Min-max across the candidate set; a shared value normalizes to 0.5."""
    low = min(values.values())
    high = max(values.values())
    if high - low == 0:
        return {key: 0.5 for key in values}
    return {key: (value - low) / (high - low) for key, value in values.items()}


def score_all(
    candidates: Sequence[ArchitectureCandidate],
    reports: dict[str, MetricsReport],
    scenarios: Sequence[UseCaseScenario],
    hop_risk_threshold: int = HOP_RISK_THRESHOLD,
) -> dict[str, QualityScores]:
    """Apply the proxy table and risk rules to every candidate of a set.

    Normalization is a property of the set, so scoring one candidate alone is
    the degenerate set of size one (every normalized input 0.5).
    """
    by_id = {c.id: c for c in candidates}
    norm_mean_hops = _normalize({i: reports[i].mean_scenario_hops for i in by_id})
    norm_max_ca = _normalize({i: float(reports[i].max_ca()) for i in by_id})
    norm_cycles = _normalize({i: float(reports[i].cycle_count) for i in by_id})
    norm_wide = _normalize(
        {i: float(reports[i].wide_interface_count(by_id[i])) for i in by_id}
    )
    scenario_tags = {s.id: s.quality_tags for s in scenarios}

    out: dict[str, QualityScores] = {}
    for candidate_id, candidate in by_id.items():
        report = reports[candidate_id]
        scores = {
            QualityAttribute.PERFORMANCE: 1.0 - norm_mean_hops[candidate_id],
            QualityAttribute.SCALABILITY: _SCALABILITY_BONUS[candidate.style]
            * (1.0 - norm_max_ca[candidate_id]),
            QualityAttribute.MAINTAINABILITY: report.mean_cohesion()
            * (1.0 - norm_cycles[candidate_id]),
            QualityAttribute.SECURITY: 1.0 - norm_wide[candidate_id],
            QualityAttribute.AVAILABILITY: _AVAILABILITY_BONUS[candidate.style],
            QualityAttribute.USABILITY: report.requirement_coverage,
        }

        risks: list[Risk] = []
        if report.cycle_count > 0:
            risks.append(
                Risk(
                    attribute=QualityAttribute.MAINTAINABILITY,
                    rule="dependency cycle",
                    detail=f"cycle_count={report.cycle_count} exceeds 0",
                )
            )
        for trace in candidate.traces:
            if trace.hops > hop_risk_threshold and QualityAttribute.PERFORMANCE in scenario_tags.get(
                trace.scenario_id, frozenset()
            ):
                risks.append(
                    Risk(
                        attribute=QualityAttribute.PERFORMANCE,
                        rule="scenario hops",
                        detail=(
                            f"scenario {trace.scenario_id}: hops={trace.hops}"
                            f" exceeds threshold {hop_risk_threshold}"
                        ),
                    )
                )
        for name, metrics in sorted(report.components.items()):
            component = next(c for c in candidate.components if c.name == name)
            if (
                metrics.cohesion is not None
                and metrics.cohesion < 0.2
                and len(component.owned_concepts) >= 3
            ):
                risks.append(
                    Risk(
                        attribute=QualityAttribute.MAINTAINABILITY,
                        rule="low cohesion",
                        detail=f"component {name}: cohesion={metrics.cohesion:.3f} below 0.2",
                    )
                )
        out[candidate_id] = QualityScores(scores=scores, risks=tuple(risks))
    return out


# ---------------------------------------------------------------------------
# Ranking


def default_weights(reqs: RequirementSet) -> dict[QualityAttribute, float]:
    """Full weight for attributes named by a quality requirement, token weight
    for the rest."""
    present = {
        req.quality_attribute for req in reqs.non_functional() if req.quality_attribute is not None
    }
    return {
        attr: DEFAULT_WEIGHT_PRESENT if attr in present else DEFAULT_WEIGHT_ABSENT
        for attr in QualityAttribute
    }


def rank(
    scored: dict[str, QualityScores], weights: dict[QualityAttribute, float]
) -> Ranking:
    for attr, weight in weights.items():
        if weight < 0:
            raise NegativeWeight(f"negative weight for {attr.value}: {weight}")
    total = sum(weights.values())
    if total <= 0:
        raise AllWeightsZero("at least one attribute weight must be positive")

    utilities = {
        candidate_id: sum(
            weights.get(attr, 0.0) * score for attr, score in quality.scores.items()
        )
        / total
        for candidate_id, quality in scored.items()
    }
    order = tuple(sorted(utilities, key=lambda cid: (-utilities[cid], cid)))
    return Ranking(weights=dict(weights), utilities=utilities, order=order)


# ---------------------------------------------------------------------------
# Assembly


@dataclass
class Evaluation:
    weights: dict[QualityAttribute, float]
    reports: dict[str, MetricsReport]
    scored: dict[str, QualityScores]
    ranking: Ranking
    extras: dict[str, dict] = field(default_factory=dict)

    def to_dict(self, candidate_order: Sequence[str]) -> dict:
        entries = []
        for candidate_id in candidate_order:
            entry = {
                "id": candidate_id,
                "metrics": self.reports[candidate_id].to_dict(),
                "scores": self.scored[candidate_id].scores_dict(),
                "risks": [risk.to_dict() for risk in self.scored[candidate_id].risks],
                "utility": self.ranking.utilities[candidate_id],
            }
            entry.update(self.extras.get(candidate_id, {}))
            entries.append(entry)
        return {
            "weights": self.ranking.to_weights_dict(),
            "candidates": entries,
            "order": list(self.ranking.order),
        }


def evaluate(
    candidates: Sequence[ArchitectureCandidate],
    model: DomainModel,
    scenarios: Sequence[UseCaseScenario],
    reqs: RequirementSet,
    weights: dict[QualityAttribute, float] | None = None,
    hop_risk_threshold: int = HOP_RISK_THRESHOLD,
) -> Evaluation:
    if weights is None:
        weights = default_weights(reqs)
    reports = {c.id: compute_metrics(c, model, scenarios, reqs) for c in candidates}
    scored = score_all(candidates, reports, scenarios, hop_risk_threshold)
    ranking = rank(scored, weights)
    return Evaluation(weights=weights, reports=reports, scored=scored, ranking=ranking)
