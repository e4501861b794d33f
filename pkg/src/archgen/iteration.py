"""Iteration support: structural diff of a candidate against the previously
selected architecture, a unitless change cost, and the blended objective that
ranks quality against the expense of moving.

Rename detection requires exact concept-set equality; anything less is
modeled as concept moves. Comparative, not person-days.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .candidates import ArchitectureCandidate, Dependency
from .errors import ArchgenError


class NegativeCostEntry(ArchgenError):
    pass


@dataclass(frozen=True)
class ArchDiff:
    added_components: tuple[str, ...]
    removed_components: tuple[str, ...]
    renamed_components: tuple[tuple[str, str], ...]
    moved_concepts: tuple[tuple[str, str, str], ...]  # (concept, from, to)
    added_dependencies: tuple[Dependency, ...]
    removed_dependencies: tuple[Dependency, ...]
    style_changed: bool

    def is_empty(self) -> bool:
        return not (
            self.added_components
            or self.removed_components
            or self.renamed_components
            or self.moved_concepts
            or self.added_dependencies
            or self.removed_dependencies
            or self.style_changed
        )

    def to_dict(self) -> dict:
        return {
            "added_components": list(self.added_components),
            "removed_components": list(self.removed_components),
            "renamed_components": [list(pair) for pair in self.renamed_components],
            "moved_concepts": [list(triple) for triple in self.moved_concepts],
            "dependency_changes": {
                "added": [d.to_dict() for d in self.added_dependencies],
                "removed": [d.to_dict() for d in self.removed_dependencies],
            },
            "style_changed": self.style_changed,
        }


def diff_architectures(
    baseline: ArchitectureCandidate, candidate: ArchitectureCandidate
) -> ArchDiff:
    """Structural difference, processed in lexicographic order throughout:
    renames first (identical concept sets), then adds/removes by name, then
    concept moves, then the dependency set difference under the rename map."""
    baseline_names = {c.name for c in baseline.components}
    candidate_names = {c.name for c in candidate.components}
    baseline_by_name = {c.name: c for c in baseline.components}
    candidate_by_name = {c.name: c for c in candidate.components}

    unmatched_old = sorted(baseline_names - candidate_names)
    unmatched_new = sorted(candidate_names - baseline_names)

    rename_map: dict[str, str] = {}
    renamed: list[tuple[str, str]] = []
    remaining_new = list(unmatched_new)
    for old_name in unmatched_old:
        old_concepts = baseline_by_name[old_name].owned_concepts
        match = next(
            (n for n in remaining_new if candidate_by_name[n].owned_concepts == old_concepts),
            None,
        )
        if match is not None:
            rename_map[old_name] = match
            renamed.append((old_name, match))
            remaining_new.remove(match)
    added = tuple(remaining_new)
    removed = tuple(n for n in unmatched_old if n not in rename_map)

    old_owner = baseline.owner_of()
    new_owner = candidate.owner_of()
    moved: list[tuple[str, str, str]] = []
    for concept in sorted(set(old_owner) & set(new_owner)):
        before = old_owner[concept]
        after = new_owner[concept]
        if rename_map.get(before, before) != after:
            moved.append((concept, before, after))

    def mapped(dep: Dependency) -> Dependency:
        return Dependency(
            source=rename_map.get(dep.source, dep.source),
            target=rename_map.get(dep.target, dep.target),
            via=dep.via,
        )

    mapped_baseline = {mapped(d): d for d in baseline.dependencies}
    candidate_deps = set(candidate.dependencies)
    added_deps = sorted(candidate_deps - set(mapped_baseline), key=Dependency.sort_key)
    removed_deps = sorted(
        (original for key, original in mapped_baseline.items() if key not in candidate_deps),
        key=Dependency.sort_key,
    )

    return ArchDiff(
        added_components=added,
        removed_components=removed,
        renamed_components=tuple(renamed),
        moved_concepts=tuple(moved),
        added_dependencies=tuple(added_deps),
        removed_dependencies=tuple(removed_deps),
        style_changed=baseline.style is not candidate.style,
    )


# ---------------------------------------------------------------------------
# Cost


@dataclass(frozen=True)
class CostTable:
    component_add: float = 1.0
    component_remove: float = 1.0
    component_rename: float = 0.25
    concept_move: float = 0.5
    dependency_change: float = 0.25
    style_change: float = 2.0

    def validate(self) -> None:
        for name, value in self.__dict__.items():
            if value < 0:
                raise NegativeCostEntry(f"{name} is negative: {value}")


@dataclass(frozen=True)
class ChangeCost:
    total: float
    breakdown: tuple[tuple[str, float], ...]


def change_cost(diff: ArchDiff, table: CostTable = CostTable()) -> ChangeCost:
    table.validate()
    breakdown: list[tuple[str, float]] = []
    for name in diff.added_components:
        breakdown.append((f"add component {name}", table.component_add))
    for name in diff.removed_components:
        breakdown.append((f"remove component {name}", table.component_remove))
    for old_name, new_name in diff.renamed_components:
        breakdown.append((f"rename {old_name} to {new_name}", table.component_rename))
    for concept, source, target in diff.moved_concepts:
        breakdown.append((f"move {concept} from {source} to {target}", table.concept_move))
    for dep in diff.added_dependencies:
        breakdown.append((f"add dependency {dep.source}->{dep.target}", table.dependency_change))
    for dep in diff.removed_dependencies:
        breakdown.append((f"remove dependency {dep.source}->{dep.target}", table.dependency_change))
    if diff.style_changed:
        breakdown.append(("change style", table.style_change))
    return ChangeCost(total=sum(cost for _, cost in breakdown), breakdown=tuple(breakdown))


# ---------------------------------------------------------------------------
# Objective

DEFAULT_LAMBDA = 0.3


def normalize_costs(costs: dict[str, float]) -> dict[str, float]:
    """Min-max across the candidate set; all equal normalizes to 0.5."""
    low = min(costs.values())
    high = max(costs.values())
    if high - low == 0:
        return {key: 0.5 for key in costs}
    return {key: (value - low) / (high - low) for key, value in costs.items()}


def combined_objective(utility: float, normalized_cost: float, lam: float) -> float:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"lambda must lie in [0,1], got {lam}")
    return (1.0 - lam) * utility - lam * normalized_cost


def iteration_order(
    utilities: dict[str, float], costs: dict[str, float], lam: float
) -> tuple[dict[str, float], tuple[str, ...]]:
    """Objectives and ranking order for iteration mode.

    At lambda 0 this reproduces the plain utility order, tie-break included.
    """
    if lam == 0.0:
        objectives = {cid: utilities[cid] for cid in utilities}
    else:
        normalized = normalize_costs(costs)
        objectives = {
            cid: combined_objective(utilities[cid], normalized[cid], lam) for cid in utilities
        }
    order = tuple(sorted(objectives, key=lambda cid: (-objectives[cid], cid)))
    return objectives, order
