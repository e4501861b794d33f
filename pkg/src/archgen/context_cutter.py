"""Bounded-context cutting: greedy modularity clustering over the concept graph.

The domain model is turned into a weighted undirected graph (concepts as
nodes, one edge per related pair, generalization pairs weighted heavier) and
clustered by iterative pair merging on modularity gain. All tie-breaks are
lexicographic, so the cut is a pure function of the model.
"""

from __future__ import annotations

from dataclasses import dataclass

from .domain_scenarios import DomainModel, RelationKind
from .errors import ArchgenError

GENERALIZATION_WEIGHT = 2.0


class EmptyModel(ArchgenError):
    """Cutting needs at least one concept."""


@dataclass(frozen=True)
class WeightedGraph:
    nodes: tuple[str, ...]
    # keys are (u, v) with u < v
    edges: dict[tuple[str, str], float]

    def total_weight(self) -> float:
        return sum(self.edges.values())

    def weighted_degree(self, node: str) -> float:
        return sum(w for (u, v), w in self.edges.items() if node in (u, v))


def build_graph(
    model: DomainModel, generalization_weight: float = GENERALIZATION_WEIGHT
) -> WeightedGraph:
    """Collapse the model's relations into one weighted edge per concept pair.

    Direction and labels are ignored; self-loop relations are dropped; a pair
    with any generalization between it gets the heavier weight.
    """
    edges: dict[tuple[str, str], float] = {}
    for relation in model.relations:
        if relation.source == relation.target:
            continue
        key = (min(relation.source, relation.target), max(relation.source, relation.target))
        weight = generalization_weight if relation.kind is RelationKind.GENERALIZATION else 1.0
        edges[key] = max(edges.get(key, 0.0), weight)
    return WeightedGraph(nodes=tuple(model.concept_names()), edges=edges)


def modularity(graph: WeightedGraph, partition: list[set[str]]) -> float:
    """Newman weighted modularity; 0.0 for an edgeless graph."""
    total = graph.total_weight()
    if total == 0:
        return 0.0
    cluster_of: dict[str, int] = {}
    for index, cluster in enumerate(partition):
        for node in cluster:
            cluster_of[node] = index
    internal = [0.0] * len(partition)
    degree = [0.0] * len(partition)
    for (u, v), w in graph.edges.items():
        cu, cv = cluster_of[u], cluster_of[v]
        degree[cu] += w
        degree[cv] += w
        if cu == cv:
            internal[cu] += w
    return sum(
        internal[i] / total - (degree[i] / (2.0 * total)) ** 2 for i in range(len(partition))
    )


def greedy_modularity_partition(graph: WeightedGraph) -> list[set[str]]:
    """Merge the pair with the largest strictly positive modularity gain until
    none remains. Ties go to the lexicographically smallest cluster-name pair,
    where a cluster is named by its smallest member.
    """
    if not graph.nodes:
        return []
    total = graph.total_weight()
    clusters: dict[str, set[str]] = {node: {node} for node in graph.nodes}
    if total == 0:
        return [clusters[name] for name in sorted(clusters)]

    degree: dict[str, float] = {node: 0.0 for node in graph.nodes}
    between: dict[tuple[str, str], float] = {}
    for (u, v), w in graph.edges.items():
        degree[u] += w
        degree[v] += w
        between[(u, v)] = between.get((u, v), 0.0) + w

    while True:
        best: tuple[float, tuple[str, str]] | None = None
        for (a, b), w in between.items():
            gain = w / total - 2.0 * (degree[a] / (2.0 * total)) * (degree[b] / (2.0 * total))
            if gain <= 1e-12:
                continue
            if best is None or gain > best[0] + 1e-12 or (
                abs(gain - best[0]) <= 1e-12 and (a, b) < best[1]
            ):
                best = (gain, (a, b))
        if best is None:
            break
        a, b = best[1]
        # Fold b into a; a stays the smaller name because keys are ordered.
        clusters[a] |= clusters.pop(b)
        degree[a] += degree.pop(b)
        merged: dict[tuple[str, str], float] = {}
        for (u, v), w in between.items():
            if (u, v) == (a, b):
                continue
            u = a if u == b else u
            v = a if v == b else v
            if u == v:
                continue
            key = (min(u, v), max(u, v))
            merged[key] = merged.get(key, 0.0) + w
        between = merged

    return [clusters[name] for name in sorted(clusters)]


@dataclass(frozen=True)
class BoundedContext:
    name: str
    members: tuple[str, ...]

    def to_dict(self) -> dict:
        return {"name": self.name, "members": list(self.members)}


@dataclass(frozen=True)
class ContextCut:
    modularity: float
    contexts: tuple[BoundedContext, ...]

    def to_dict(self) -> dict:
        return {
            "modularity": self.modularity,
            "contexts": [c.to_dict() for c in self.contexts],
        }

    def owner_of(self) -> dict[str, str]:
        return {member: ctx.name for ctx in self.contexts for member in ctx.members}


def context_name(members: set[str]) -> str:
    return "ctx_" + min(members)


def cut_from_partition(graph: WeightedGraph, partition: list[set[str]]) -> ContextCut:
    contexts = tuple(
        sorted(
            (
                BoundedContext(name=context_name(cluster), members=tuple(sorted(cluster)))
                for cluster in partition
            ),
            key=lambda c: c.name,
        )
    )
    return ContextCut(modularity=modularity(graph, partition), contexts=contexts)


def cut_contexts(
    model: DomainModel, generalization_weight: float = GENERALIZATION_WEIGHT
) -> ContextCut:
    """Cut the model into bounded contexts; deterministic for a given model."""
    if model.is_empty():
        raise EmptyModel("cannot cut a model with no concepts")
    graph = build_graph(model, generalization_weight)
    partition = greedy_modularity_partition(graph)
    return cut_from_partition(graph, partition)
