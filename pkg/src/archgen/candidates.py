"""Architecture candidates: enumeration over explicit decision dimensions,
dependency derivation from the domain relations, scenario tracing through the
component graph, and MADR decision records.

The candidate space is a fixed rule table, not free generation: a modular
monolith, synchronous microservices, event-driven microservices, and (when
coupling justifies it) a coarser synchronous variant with merged contexts.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .context_cutter import BoundedContext, ContextCut, build_graph
from .domain_scenarios import DomainModel, UseCaseScenario
from .errors import ArchgenError
from .llm_gateway import CacheMiss, LlmGateway, OperationalError
from .requirements import RequirementSet

MERGE_THRESHOLD = 3.0
EVENT_BUS = "EventBus"


class UnmappedConcept(ArchgenError):
    def __init__(self, scenario_id: str, step_index: int, name: str) -> None:
        super().__init__(
            f"scenario {scenario_id} step {step_index + 1}: concept {name!r} is owned by no component"
        )
        self.scenario_id = scenario_id
        self.step_index = step_index
        self.name = name


class MalformedRecord(ArchgenError):
    """An ADR document does not follow the expected layout."""


class Style(str, Enum):
    MODULAR_MONOLITH = "ModularMonolith"
    MICROSERVICES_SYNC = "MicroservicesSync"
    MICROSERVICES_EVENT = "MicroservicesEvent"


class RecordStatus(str, Enum):
    PROPOSED = "proposed"
    ACCEPTED = "accepted"
    SUPERSEDED = "superseded"


@dataclass(frozen=True)
class Component:
    name: str
    owned_contexts: frozenset[str]
    owned_concepts: frozenset[str]
    provided_interfaces: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "owned_contexts": sorted(self.owned_contexts),
            "owned_concepts": sorted(self.owned_concepts),
            "provided_interfaces": sorted(self.provided_interfaces),
        }


@dataclass(frozen=True)
class Dependency:
    source: str
    target: str
    via: str

    def to_dict(self) -> dict:
        return {"source": self.source, "target": self.target, "via": self.via}

    def sort_key(self) -> tuple[str, str, str]:
        return (self.source, self.target, self.via)


@dataclass(frozen=True)
class ProcessTrace:
    scenario_id: str
    component_sequence: tuple[str, ...]
    hops: int

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "component_sequence": list(self.component_sequence),
            "hops": self.hops,
        }


@dataclass(frozen=True)
class DecisionRecord:
    id: int
    title: str
    status: RecordStatus
    context: str
    decision: str
    considered_options: tuple[str, ...]
    consequences: str

    def __post_init__(self) -> None:
        if self.id < 1:
            raise MalformedRecord("record ids start at 1")
        if not self.considered_options:
            raise MalformedRecord("a record must list at least one considered option")


@dataclass
class ArchitectureCandidate:
    id: str
    style: Style
    components: list[Component]
    dependencies: list[Dependency] = field(default_factory=list)
    adrs: list[DecisionRecord] = field(default_factory=list)
    traces: list[ProcessTrace] = field(default_factory=list)
    rationale: str = ""

    def component_names(self) -> list[str]:
        return [c.name for c in self.components]

    def owner_of(self) -> dict[str, str]:
        return {
            concept: component.name
            for component in self.components
            for concept in component.owned_concepts
        }

    def validate(self, concept_universe: set[str]) -> None:
        names = self.component_names()
        if len(names) != len(set(names)):
            raise ArchgenError(f"candidate {self.id}: duplicate component names")
        owned: list[str] = []
        for component in self.components:
            if component.name == EVENT_BUS:
                if component.owned_concepts or component.owned_contexts:
                    raise ArchgenError(f"candidate {self.id}: {EVENT_BUS} must own nothing")
                continue
            owned.extend(component.owned_concepts)
        if sorted(owned) != sorted(concept_universe):
            raise ArchgenError(f"candidate {self.id}: components do not partition the concepts")
        known = set(names)
        for dep in self.dependencies:
            if dep.source not in known or dep.target not in known:
                raise ArchgenError(f"candidate {self.id}: dangling dependency {dep.source}->{dep.target}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "style": self.style.value,
            "components": [c.to_dict() for c in sorted(self.components, key=lambda c: c.name)],
            "dependencies": [d.to_dict() for d in sorted(self.dependencies, key=Dependency.sort_key)],
            "traces": [t.to_dict() for t in self.traces],
            "rationale": self.rationale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ArchitectureCandidate":
        components = [
            Component(
                name=c["name"],
                owned_contexts=frozenset(c["owned_contexts"]),
                owned_concepts=frozenset(c["owned_concepts"]),
                provided_interfaces=tuple(c["provided_interfaces"]),
            )
            for c in data["components"]
        ]
        dependencies = [
            Dependency(source=d["source"], target=d["target"], via=d["via"])
            for d in data["dependencies"]
        ]
        traces = [
            ProcessTrace(
                scenario_id=t["scenario_id"],
                component_sequence=tuple(t["component_sequence"]),
                hops=t["hops"],
            )
            for t in data.get("traces", [])
        ]
        return cls(
            id=data["id"],
            style=Style(data["style"]),
            components=components,
            dependencies=dependencies,
            traces=traces,
            rationale=data.get("rationale", ""),
        )


# ---------------------------------------------------------------------------
# Enumeration


def component_name(concepts: frozenset[str]) -> str:
    return "comp_" + min(concepts)


def _components_for(groups: Sequence[Sequence[BoundedContext]]) -> list[Component]:
    components = []
    for group in groups:
        concepts = frozenset(member for ctx in group for member in ctx.members)
        components.append(
            Component(
                name=component_name(concepts),
                owned_contexts=frozenset(ctx.name for ctx in group),
                owned_concepts=concepts,
            )
        )
    return sorted(components, key=lambda c: c.name)


def merged_groups(
    cut: ContextCut, model: DomainModel, merge_threshold: float
) -> list[list[BoundedContext]] | None:
    """Union contexts whose inter-context edge weight reaches the threshold;
    None when no pair does (the merge rule is inert)."""
    graph = build_graph(model)
    owner = cut.owner_of()
    pair_weight: dict[tuple[str, str], float] = {}
    for (u, v), w in graph.edges.items():
        cu, cv = owner[u], owner[v]
        if cu == cv:
            continue
        key = (min(cu, cv), max(cu, cv))
        pair_weight[key] = pair_weight.get(key, 0.0) + w

    to_merge = [pair for pair, weight in sorted(pair_weight.items()) if weight >= merge_threshold]
    if not to_merge:
        return None

    parent = {ctx.name: ctx.name for ctx in cut.contexts}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in to_merge:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    grouped: dict[str, list[BoundedContext]] = {}
    for ctx in cut.contexts:
        grouped.setdefault(find(ctx.name), []).append(ctx)
    return [grouped[root] for root in sorted(grouped)]


def _style_adrs(style: Style, merged: bool, cut: ContextCut, reqs: RequirementSet) -> list[DecisionRecord]:
    n_contexts = len(cut.contexts)
    n_functional = len(reqs.functional())
    n_quality = len(reqs.non_functional())
    backdrop = (
        f"The domain decomposes into {n_contexts} bounded context(s) "
        f"(modularity {cut.modularity:.3f}); {n_functional} functional and "
        f"{n_quality} quality requirement(s) constrain the design."
    )

    style_options = {
        Style.MODULAR_MONOLITH: "Modular monolith, one deployable with internal module boundaries",
        Style.MICROSERVICES_SYNC: "Synchronous microservices, one service per context",
        Style.MICROSERVICES_EVENT: "Event-driven microservices communicating through a bus",
    }
    style_titles = {
        Style.MODULAR_MONOLITH: "Adopt a modular monolith",
        Style.MICROSERVICES_SYNC: "Adopt synchronous microservices",
        Style.MICROSERVICES_EVENT: "Adopt event-driven microservices",
    }
    style_consequences = {
        Style.MODULAR_MONOLITH: (
            "Single deployable simplifies operations and keeps calls in-process; "
            "module boundaries must be enforced by convention, and scaling is all-or-nothing."
        ),
        Style.MICROSERVICES_SYNC: (
            "Services scale and deploy independently; synchronous calls keep the control "
            "flow easy to follow but couple availability across service boundaries."
        ),
        Style.MICROSERVICES_EVENT: (
            "Asynchronous events decouple producers from consumers and absorb load spikes; "
            "the bus becomes shared infrastructure and end-to-end flows get harder to trace."
        ),
    }

    records = [
        DecisionRecord(
            id=1,
            title=style_titles[style],
            status=RecordStatus.PROPOSED,
            context=backdrop,
            decision=f"Use the {style_options[style].split(',')[0].lower()} style for this candidate.",
            considered_options=tuple(
                option + (" (chosen)" if key is style else "")
                for key, option in style_options.items()
            ),
            consequences=style_consequences[style],
        )
    ]

    if merged:
        granularity_decision = (
            "Merge contexts whose mutual coupling reaches the merge threshold into one "
            "component; keep the rest one component per context."
        )
        granularity_consequence = (
            "Fewer, coarser components cut down on remote calls between tightly coupled "
            "concepts at the price of larger service internals."
        )
    else:
        granularity_decision = "Keep one component per bounded context."
        granularity_consequence = (
            "Component boundaries follow the context cut, so each component stays small "
            "and cohesive; chatty context pairs pay for their coupling with extra calls."
        )
    granularity_options = (
        "One component per bounded context" + ("" if merged else " (chosen)"),
        "Merge tightly coupled contexts into coarser components" + (" (chosen)" if merged else ""),
        "Collapse everything into a single component",
    )
    records.append(
        DecisionRecord(
            id=2,
            title="Merge tightly coupled contexts" if merged else "Cut components along bounded contexts",
            status=RecordStatus.PROPOSED,
            context=backdrop,
            decision=granularity_decision,
            considered_options=granularity_options,
            consequences=granularity_consequence,
        )
    )

    if style is Style.MICROSERVICES_EVENT:
        communication_title = "Route communication through an event bus"
        communication_decision = (
            f"All inter-component communication goes through a dedicated {EVENT_BUS} component "
            "as published events."
        )
        communication_consequence = (
            "Components never call each other directly, which isolates failures; every "
            "interaction costs an extra hop and the event schema becomes a contract."
        )
    elif style is Style.MICROSERVICES_SYNC:
        communication_title = "Call services synchronously"
        communication_decision = "Components call each other directly over synchronous interfaces."
        communication_consequence = (
            "Request/response keeps semantics simple and errors immediate; latency and "
            "availability compose across every call in a trace."
        )
    else:
        communication_title = "Use in-process calls between modules"
        communication_decision = "Modules invoke each other in process through their interfaces."
        communication_consequence = (
            "Calls are cheap and transactional consistency is easy; the shared runtime "
            "hides module boundaries at run time."
        )
    communication_options = tuple(
        text + (" (chosen)" if chosen else "")
        for text, chosen in (
            ("In-process calls inside one deployable", style is Style.MODULAR_MONOLITH),
            ("Synchronous remote calls between services", style is Style.MICROSERVICES_SYNC),
            ("Asynchronous events through a shared bus", style is Style.MICROSERVICES_EVENT),
        )
    )
    records.append(
        DecisionRecord(
            id=3,
            title=communication_title,
            status=RecordStatus.PROPOSED,
            context=backdrop,
            decision=communication_decision,
            considered_options=communication_options,
            consequences=communication_consequence,
        )
    )
    return records


def enumerate_candidates(
    cut: ContextCut,
    model: DomainModel,
    reqs: RequirementSet,
    merge_threshold: float = MERGE_THRESHOLD,
) -> list[ArchitectureCandidate]:
    """Build the 3 or 4 candidates of the rule table, with dependencies,
    interfaces, and decision records attached (traces are attached separately).
    """
    per_context = [[ctx] for ctx in cut.contexts]
    candidates = [
        ArchitectureCandidate(id="c1", style=Style.MODULAR_MONOLITH, components=_components_for(per_context)),
        ArchitectureCandidate(id="c2", style=Style.MICROSERVICES_SYNC, components=_components_for(per_context)),
        ArchitectureCandidate(
            id="c3",
            style=Style.MICROSERVICES_EVENT,
            components=_components_for(per_context)
            + [Component(name=EVENT_BUS, owned_contexts=frozenset(), owned_concepts=frozenset())],
        ),
    ]
    groups = merged_groups(cut, model, merge_threshold)
    if groups is not None:
        candidates.append(
            ArchitectureCandidate(id="c4", style=Style.MICROSERVICES_SYNC, components=_components_for(groups))
        )

    universe = set(model.concepts)
    for candidate in candidates:
        merged = candidate.id == "c4"
        derive_dependencies(candidate, model)
        candidate.adrs = _style_adrs(candidate.style, merged, cut, reqs)
        candidate.validate(universe)
    return candidates


def derive_dependencies(candidate: ArchitectureCandidate, model: DomainModel) -> None:
    """Project cross-component domain relations onto directed dependencies and
    derive provided interfaces from the incoming edges."""
    owner = candidate.owner_of()
    seen: set[tuple[str, str, str]] = set()
    deps: list[Dependency] = []
    for relation in model.sorted_relations():
        source = owner[relation.source]
        target = owner[relation.target]
        if source == target:
            continue
        via = relation.label or relation.kind.value
        if candidate.style is Style.MICROSERVICES_EVENT:
            edges = [(source, EVENT_BUS, f"evt:{via}"), (EVENT_BUS, target, f"evt:{via}")]
        else:
            edges = [(source, target, via)]
        for s, t, v in edges:
            if (s, t, v) in seen:
                continue
            seen.add((s, t, v))
            deps.append(Dependency(source=s, target=t, via=v))
    candidate.dependencies = sorted(deps, key=Dependency.sort_key)

    incoming: dict[str, set[str]] = {c.name: set() for c in candidate.components}
    for dep in candidate.dependencies:
        incoming[dep.target].add(f"i_{dep.via}")
    candidate.components = [
        Component(
            name=c.name,
            owned_contexts=c.owned_contexts,
            owned_concepts=c.owned_concepts,
            provided_interfaces=tuple(sorted(incoming[c.name])),
        )
        for c in candidate.components
    ]


def trace_scenario(candidate: ArchitectureCandidate, scenario: UseCaseScenario) -> ProcessTrace:
    """Path of the scenario through the components, consecutive duplicates
    collapsed; in the event style, each logical hop routes through the bus."""
    owner = candidate.owner_of()
    sequence: list[str] = []
    for step_index, step in enumerate(scenario.steps):
        for ref in step.concept_refs:
            if ref not in owner:
                raise UnmappedConcept(scenario.id, step_index, ref)
            component = owner[ref]
            if not sequence or sequence[-1] != component:
                sequence.append(component)

    if candidate.style is Style.MICROSERVICES_EVENT and len(sequence) > 1:
        expanded: list[str] = [sequence[0]]
        for component in sequence[1:]:
            expanded.extend((EVENT_BUS, component))
        sequence = expanded

    hops = sum(1 for a, b in zip(sequence, sequence[1:]) if a != b)
    return ProcessTrace(scenario_id=scenario.id, component_sequence=tuple(sequence), hops=hops)


def attach_traces(
    candidate: ArchitectureCandidate, scenarios: Sequence[UseCaseScenario]
) -> list[str]:
    """Trace every scenario, skipping (with a warning) the ones that do not map."""
    warnings: list[str] = []
    traces: list[ProcessTrace] = []
    for scenario in scenarios:
        try:
            traces.append(trace_scenario(candidate, scenario))
        except UnmappedConcept as exc:
            warnings.append(f"candidate {candidate.id}: trace skipped ({exc})")
    candidate.traces = traces
    return warnings


# ---------------------------------------------------------------------------
# Decision records as Markdown


_SLUG_RE = re.compile(r"[^a-z0-9]+")


def adr_filename(record: DecisionRecord) -> str:
    slug = _SLUG_RE.sub("-", record.title.lower()).strip("-")
    return f"{record.id:04d}-{slug}.md"


def write_adr(record: DecisionRecord) -> str:
    lines = [
        f"# {record.title}",
        "",
        "## Status",
        "",
        record.status.value,
        "",
        "## Context",
        "",
        record.context,
        "",
        "## Decision",
        "",
        record.decision,
        "",
        "## Considered Options",
        "",
    ]
    lines.extend(f"- {option}" for option in record.considered_options)
    lines.extend(["", "## Consequences", "", record.consequences, ""])
    return "\n".join(lines)


_HEADINGS = ("## Status", "## Context", "## Decision", "## Considered Options", "## Consequences")


def parse_adr(text: str, record_id: int) -> DecisionRecord:
    """Inverse of write_adr; the id comes from the filename."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# "):
        raise MalformedRecord("missing top-level title heading")
    title = lines[0][2:].strip()

    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in lines[1:]:
        if line.startswith("## "):
            heading = line.strip()
            if heading not in _HEADINGS:
                raise MalformedRecord(f"unexpected heading {heading!r}")
            if heading in sections:
                raise MalformedRecord(f"duplicate heading {heading!r}")
            current = heading
            sections[current] = []
        elif current is not None:
            sections[current].append(line)
    missing = [h for h in _HEADINGS if h not in sections]
    if missing:
        raise MalformedRecord(f"missing headings: {', '.join(missing)}")

    def body(heading: str) -> str:
        return "\n".join(sections[heading]).strip()

    try:
        status = RecordStatus(body("## Status"))
    except ValueError as exc:
        raise MalformedRecord(f"unknown status {body('## Status')!r}") from exc
    options = tuple(
        line.strip()[2:].strip()
        for line in sections["## Considered Options"]
        if line.strip().startswith("- ")
    )
    if not options:
        raise MalformedRecord("no considered options listed")
    return DecisionRecord(
        id=record_id,
        title=title,
        status=status,
        context=body("## Context"),
        decision=body("## Decision"),
        considered_options=options,
        consequences=body("## Consequences"),
    )


# ---------------------------------------------------------------------------
# Rationales


def generate_rationales(
    candidates: Sequence[ArchitectureCandidate],
    gateway: LlmGateway,
    evaluation_by_id: dict[str, dict],
    notes: str = "",
) -> list[str]:
    """One completion per candidate; failures degrade to an empty rationale
    with a warning instead of aborting the evaluation."""
    warnings: list[str] = []
    for candidate in candidates:
        summary = {
            "id": candidate.id,
            "style": candidate.style.value,
            "components": sorted(c.name for c in candidate.components),
            "decisions": [record.title for record in candidate.adrs],
        }
        request = gateway.render(
            "rationale@1",
            {
                "candidate": json.dumps(summary, indent=2, sort_keys=True),
                "evaluation": json.dumps(
                    evaluation_by_id.get(candidate.id, {}), indent=2, sort_keys=True
                ),
                "notes": notes,
            },
        )
        try:
            candidate.rationale = gateway.complete(request).strip()
        except (CacheMiss, OperationalError) as exc:
            candidate.rationale = ""
            warnings.append(f"candidate {candidate.id}: rationale unavailable ({exc})")
    return warnings
