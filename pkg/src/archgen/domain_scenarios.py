"""Domain model and use-case scenarios: PlantUML-subset parsing and emission,
validation against the requirements, and gateway-backed generation/refinement.

The accepted notation is deliberately small. A model is a sequence of lines
between `@startuml` and `@enduml`:

    class Name               concept declaration
    A --> B : label          association (label optional)
    A o-- B                  aggregation (A aggregates B)
    A *-- B                  composition (A contains B)
    A <|-- B                 generalization (B specializes A)

Attribute/method bodies in braces are discarded with a warning; endpoints
that were never declared are auto-declared with a warning. Everything else
is a syntax error — no line is ever dropped silently.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .errors import ArchgenError
from .llm_gateway import LlmGateway, extract_json_block, extract_model_block
from .requirements import QualityAttribute, RequirementSet


class MissingDelimiters(ArchgenError):
    """The @startuml/@enduml markers are absent or misplaced."""


class ModelSyntaxError(ArchgenError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class InvalidModel(ArchgenError):
    """A DomainModel invariant is violated."""


class GenerationFailed(ArchgenError):
    """The gateway's completion could not be turned into a valid artifact."""


class RelationKind(str, Enum):
    ASSOCIATION = "association"
    AGGREGATION = "aggregation"
    COMPOSITION = "composition"
    GENERALIZATION = "generalization"


_NAME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class Concept:
    name: str
    description: str | None = None

    def __post_init__(self) -> None:
        if not _NAME_RE.match(self.name):
            raise InvalidModel(f"invalid concept name: {self.name!r}")


@dataclass(frozen=True)
class Relation:
    source: str
    target: str
    kind: RelationKind
    label: str | None = None

    def __post_init__(self) -> None:
        if self.kind is RelationKind.GENERALIZATION and self.source == self.target:
            raise InvalidModel(f"self-loop generalization on {self.source!r}")

    def sort_key(self) -> tuple[str, str, str, str]:
        return (self.source, self.target, self.kind.value, self.label or "")


class DomainModel:
    """Named concepts plus typed relations; attributes are deliberately absent."""

    def __init__(self, concepts: Iterable[Concept] = (), relations: Iterable[Relation] = ()) -> None:
        self.concepts: dict[str, Concept] = {}
        self.relations: list[Relation] = []
        for concept in concepts:
            self.add_concept(concept)
        for relation in relations:
            self.add_relation(relation)

    def add_concept(self, concept: Concept) -> bool:
        """Add a concept; returns False when the name is already present."""
        if concept.name in self.concepts:
            return False
        self.concepts[concept.name] = concept
        return True

    def add_relation(self, relation: Relation) -> None:
        for endpoint in (relation.source, relation.target):
            if endpoint not in self.concepts:
                raise InvalidModel(f"relation endpoint {endpoint!r} is not a declared concept")
        self.relations.append(relation)

    def concept_names(self) -> list[str]:
        return sorted(self.concepts)

    def sorted_relations(self) -> list[Relation]:
        return sorted(self.relations, key=Relation.sort_key)

    def degree(self, name: str) -> int:
        return sum(1 for r in self.relations if name in (r.source, r.target))

    def is_empty(self) -> bool:
        return not self.concepts

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DomainModel):
            return NotImplemented
        return (
            self.concepts == other.concepts
            and self.sorted_relations() == other.sorted_relations()
        )

    def __repr__(self) -> str:
        return f"DomainModel({len(self.concepts)} concepts, {len(self.relations)} relations)"


@dataclass
class ParseResult:
    model: DomainModel
    warnings: list[str] = field(default_factory=list)


_CLASS_RE = re.compile(r"^class\s+(?P<name>\S+)\s*(?P<brace>\{\s*\}?|\{.*\})?\s*$")
_RELATION_RE = re.compile(
    r"^(?P<left>[A-Za-z][A-Za-z0-9_]*)\s*"
    r"(?P<op><\|--|o--|\*--|-->)\s*"
    r"(?P<right>[A-Za-z][A-Za-z0-9_]*)"
    r"(?:\s*:\s*(?P<label>.*))?$"
)

_OP_KINDS = {
    "-->": RelationKind.ASSOCIATION,
    "o--": RelationKind.AGGREGATION,
    "*--": RelationKind.COMPOSITION,
    "<|--": RelationKind.GENERALIZATION,
}


def parse_domain_model(source: str) -> ParseResult:
    """Parse the PlantUML subset into a DomainModel plus warnings.

    Raises MissingDelimiters when the @startuml/@enduml pair is absent and
    ModelSyntaxError (with a line number) for any unrecognized line.
    """
    lines = source.splitlines()
    significant = [(i + 1, line.strip()) for i, line in enumerate(lines) if line.strip()]
    if not significant or significant[0][1] != "@startuml" or significant[-1][1] != "@enduml":
        raise MissingDelimiters("model must start with @startuml and end with @enduml")

    model = DomainModel()
    warnings: list[str] = []
    pending_relations: list[tuple[int, Relation]] = []
    body_of: str | None = None
    body_seen = False

    for number, line in significant[1:-1]:
        if body_of is not None:
            if line == "}":
                if body_seen:
                    warnings.append(f"line {number}: attribute body of '{body_of}' discarded")
                body_of = None
                body_seen = False
            else:
                body_seen = True
            continue
        if line in ("@startuml", "@enduml"):
            raise ModelSyntaxError(number, f"unexpected delimiter {line!r}")

        class_match = _CLASS_RE.match(line)
        if class_match:
            name = class_match.group("name")
            if not _NAME_RE.match(name):
                raise ModelSyntaxError(number, f"invalid concept name {name!r}")
            if not model.add_concept(Concept(name)):
                warnings.append(f"line {number}: duplicate declaration of '{name}' ignored")
            brace = class_match.group("brace")
            if brace:
                inner = brace.strip()[1:-1].strip() if brace.strip().endswith("}") else None
                if inner is None:
                    body_of = name
                    body_seen = False
                elif inner:
                    warnings.append(f"line {number}: attribute body of '{name}' discarded")
            continue

        relation_match = _RELATION_RE.match(line)
        if relation_match:
            left = relation_match.group("left")
            right = relation_match.group("right")
            op = relation_match.group("op")
            label = relation_match.group("label")
            label = label.strip() if label and label.strip() else None
            kind = _OP_KINDS[op]
            if kind is RelationKind.GENERALIZATION:
                if left == right:
                    raise ModelSyntaxError(number, f"self-loop generalization on {left!r}")
                # `A <|-- B`: B is the specialization, A the general concept.
                relation = Relation(source=right, target=left, kind=kind, label=label)
            else:
                relation = Relation(source=left, target=right, kind=kind, label=label)
            pending_relations.append((number, relation))
            continue

        raise ModelSyntaxError(number, f"unrecognized line {line!r}")

    if body_of is not None:
        raise ModelSyntaxError(significant[-1][0], f"unterminated body of '{body_of}'")

    for number, relation in pending_relations:
        for endpoint in (relation.source, relation.target):
            if endpoint not in model.concepts:
                model.add_concept(Concept(endpoint))
                warnings.append(f"line {number}: undeclared concept '{endpoint}' auto-declared")
        model.add_relation(relation)

    return ParseResult(model=model, warnings=warnings)


def emit_plantuml(model: DomainModel) -> str:
    """Emit the canonical form: sorted concepts, blank line, sorted relations.

    The output re-parses to an equal model and emission is idempotent.
    """
    lines = ["@startuml"]
    concept_lines = [f"class {name}" for name in model.concept_names()]
    relation_lines = []
    for relation in model.sorted_relations():
        if relation.kind is RelationKind.GENERALIZATION:
            text = f"{relation.target} <|-- {relation.source}"
        elif relation.kind is RelationKind.AGGREGATION:
            text = f"{relation.source} o-- {relation.target}"
        elif relation.kind is RelationKind.COMPOSITION:
            text = f"{relation.source} *-- {relation.target}"
        else:
            text = f"{relation.source} --> {relation.target}"
        if relation.label is not None:
            text += f" : {relation.label}"
        relation_lines.append(text)
    lines.extend(concept_lines)
    if concept_lines and relation_lines:
        lines.append("")
    lines.extend(relation_lines)
    lines.append("@enduml")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Use-case scenarios


@dataclass(frozen=True)
class Step:
    text: str
    concept_refs: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.concept_refs:
            raise InvalidModel("a scenario step must reference at least one concept")


@dataclass(frozen=True)
class UseCaseScenario:
    id: str
    title: str
    actor: str
    steps: tuple[Step, ...]
    quality_tags: frozenset[QualityAttribute] = frozenset()
    linked_requirements: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        if not self.steps:
            raise InvalidModel(f"scenario {self.id!r} has no steps")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "title": self.title,
            "actor": self.actor,
            "quality_tags": sorted(tag.value for tag in self.quality_tags),
            "linked_requirements": sorted(self.linked_requirements),
            "steps": [{"text": s.text, "concept_refs": list(s.concept_refs)} for s in self.steps],
        }


def scenarios_to_json(scenarios: Sequence[UseCaseScenario]) -> dict:
    return {"scenarios": [s.to_dict() for s in scenarios]}


def scenarios_from_payload(payload: object) -> list[UseCaseScenario]:
    """Build scenarios from the wire-format dict, raising ValueError on shape errors."""

    def fail(message: str) -> None:
        raise ValueError(message)

    if not isinstance(payload, dict) or "scenarios" not in payload:
        fail("top level must be an object with a 'scenarios' array")
    raw_scenarios = payload["scenarios"]
    if not isinstance(raw_scenarios, list):
        fail("'scenarios' must be an array")

    scenarios: list[UseCaseScenario] = []
    seen_ids: set[str] = set()
    for index, raw in enumerate(raw_scenarios):
        where = f"scenarios[{index}]"
        if not isinstance(raw, dict):
            fail(f"{where} must be an object")
        for key in ("id", "title", "actor", "steps"):
            if key not in raw:
                fail(f"{where} is missing '{key}'")
        for key in ("id", "title", "actor"):
            if not isinstance(raw[key], str) or not raw[key].strip():
                fail(f"{where}.{key} must be a non-empty string")
        if raw["id"] in seen_ids:
            fail(f"duplicate scenario id {raw['id']!r}")
        seen_ids.add(raw["id"])

        tags: set[QualityAttribute] = set()
        for tag in raw.get("quality_tags", []):
            try:
                tags.add(QualityAttribute(tag))
            except ValueError:
                fail(f"{where}.quality_tags contains unknown attribute {tag!r}")
        linked = raw.get("linked_requirements", [])
        if not isinstance(linked, list) or not all(isinstance(x, str) for x in linked):
            fail(f"{where}.linked_requirements must be an array of strings")

        raw_steps = raw["steps"]
        if not isinstance(raw_steps, list) or not raw_steps:
            fail(f"{where}.steps must be a non-empty array")
        steps: list[Step] = []
        for step_index, raw_step in enumerate(raw_steps):
            step_where = f"{where}.steps[{step_index}]"
            if not isinstance(raw_step, dict):
                fail(f"{step_where} must be an object")
            if not isinstance(raw_step.get("text"), str) or not raw_step["text"].strip():
                fail(f"{step_where}.text must be a non-empty string")
            refs = raw_step.get("concept_refs")
            if not isinstance(refs, list) or not refs or not all(isinstance(x, str) and x for x in refs):
                fail(f"{step_where}.concept_refs must be a non-empty array of names")
            steps.append(Step(text=raw_step["text"].strip(), concept_refs=tuple(refs)))

        scenarios.append(
            UseCaseScenario(
                id=raw["id"].strip(),
                title=raw["title"].strip(),
                actor=raw["actor"].strip(),
                steps=tuple(steps),
                quality_tags=frozenset(tags),
                linked_requirements=frozenset(linked),
            )
        )
    return scenarios


# ---------------------------------------------------------------------------
# Validation


@dataclass
class ValidationReport:
    """Advisory findings; never fatal."""

    missing_concepts: list[str] = field(default_factory=list)
    isolated_concepts: list[str] = field(default_factory=list)
    unresolved_step_refs: list[tuple[str, int, str]] = field(default_factory=list)
    uncovered_requirements: list[str] = field(default_factory=list)

    def is_empty(self) -> bool:
        return not (
            self.missing_concepts
            or self.isolated_concepts
            or self.unresolved_step_refs
            or self.uncovered_requirements
        )

    def messages(self) -> list[str]:
        out = [f"MissingConcept: {term}" for term in self.missing_concepts]
        out += [f"IsolatedConcept: {name}" for name in self.isolated_concepts]
        out += [
            f"UnresolvedStepRef: scenario {sid} step {idx + 1} references unknown '{name}'"
            for sid, idx, name in self.unresolved_step_refs
        ]
        out += [f"UncoveredRequirement: {rid}" for rid in self.uncovered_requirements]
        return out


_TOKEN_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_SENTENCE_SPLIT_RE = re.compile(r"[.!?]\s+")
_CAP_STOPWORDS = {
    "the", "a", "an", "this", "that", "these", "those", "it", "they", "we", "you", "i",
    "if", "when", "while", "after", "before", "each", "every", "all", "any", "no",
}


def _fold_plural(token: str) -> str:
    lower = token.lower()
    if lower.endswith(("ses", "xes", "zes", "ches", "shes")) and len(lower) > 4:
        return lower[:-2]
    if lower.endswith("s") and not lower.endswith("ss") and len(lower) > 3:
        return lower[:-1]
    return lower


def _capitalized_terms(text: str) -> set[str]:
    """Capitalized tokens that are not sentence-initial and not stopwords."""
    terms: set[str] = set()
    for sentence in _SENTENCE_SPLIT_RE.split(text):
        tokens = _TOKEN_RE.findall(sentence)
        for position, token in enumerate(tokens):
            if position == 0:
                continue
            if not token[0].isupper():
                continue
            if token.lower() in _CAP_STOPWORDS:
                continue
            terms.add(token)
    return terms


def validate(
    model: DomainModel,
    scenarios: Sequence[UseCaseScenario],
    reqs: RequirementSet,
) -> ValidationReport:
    """Cross-check model, scenarios, and requirements; purely advisory."""
    report = ValidationReport()

    folded_concepts = {_fold_plural(name) for name in model.concepts}

    term_counts: dict[str, tuple[str, set[str]]] = {}
    for req in reqs.functional():
        for term in _capitalized_terms(req.text):
            folded = _fold_plural(term)
            surface, req_ids = term_counts.setdefault(folded, (term, set()))
            req_ids.add(req.id)
            if term < surface:
                term_counts[folded] = (term, req_ids)
    for folded, (surface, req_ids) in sorted(term_counts.items()):
        if len(req_ids) >= 2 and folded not in folded_concepts:
            report.missing_concepts.append(_singular_surface(surface))

    for name in model.concept_names():
        if model.degree(name) == 0:
            report.isolated_concepts.append(name)

    for scenario in scenarios:
        for index, step in enumerate(scenario.steps):
            for ref in step.concept_refs:
                if ref not in model.concepts:
                    report.unresolved_step_refs.append((scenario.id, index, ref))

    covered: set[str] = set()
    for scenario in scenarios:
        covered.update(scenario.linked_requirements)
    for req in reqs.functional():
        if req.id not in covered:
            report.uncovered_requirements.append(req.id)

    return report


def _singular_surface(token: str) -> str:
    lower = token.lower()
    if lower.endswith(("ses", "xes", "zes", "ches", "shes")) and len(token) > 4:
        return token[:-2]
    if lower.endswith("s") and not lower.endswith("ss") and len(token) > 3:
        return token[:-1]
    return token


# ---------------------------------------------------------------------------
# Generation and refinement through the gateway


def _requirements_binding(reqs: RequirementSet, functional_only: bool = False) -> str:
    chosen = reqs.functional() if functional_only else reqs.requirements
    return "\n".join(f"- [{r.id}] {r.text}" for r in chosen)


def _parse_completion_model(text: str) -> tuple[DomainModel, list[str]]:
    block, extract_warnings = extract_model_block(text)
    result = parse_domain_model(block)
    return result.model, extract_warnings + result.warnings


def generate_domain_model(
    reqs: RequirementSet, gateway: LlmGateway
) -> tuple[DomainModel, list[str]]:
    """Generate and parse a domain model, applying one repair round on failure."""
    request = gateway.render(
        "domain_model@1", {"requirements": _requirements_binding(reqs)}
    )
    model, warnings = gateway.complete_with_repair(request, _parse_completion_model)
    if model.is_empty():
        raise GenerationFailed("the generated domain model declares no concepts")
    return model, warnings


def _parse_completion_scenarios(text: str) -> tuple[list[UseCaseScenario], list[str]]:
    payload = extract_json_block(text)
    try:
        scenarios = scenarios_from_payload(payload)
    except ValueError as exc:
        raise GenerationFailed(f"scenarios schema violation: {exc}") from exc
    return scenarios, []


def generate_scenarios(
    reqs: RequirementSet, model: DomainModel, gateway: LlmGateway
) -> tuple[list[UseCaseScenario], list[str]]:
    """Generate use-case scenarios for the functional requirements.

    Returns (scenarios, warnings). Steps whose concept refs do not resolve are
    kept but flagged; linked requirement ids outside the set are dropped with
    a warning so the scenario invariant holds.
    """
    functional = reqs.functional()
    if not functional:
        return [], []

    request = gateway.render(
        "scenarios@1",
        {
            "requirements": _requirements_binding(reqs, functional_only=True),
            "domain_model": emit_plantuml(model),
        },
    )
    scenarios, warnings = gateway.complete_with_repair(request, _parse_completion_scenarios)
    return _sanitize_scenarios(scenarios, model, reqs, warnings)


def _sanitize_scenarios(
    scenarios: list[UseCaseScenario],
    model: DomainModel,
    reqs: RequirementSet,
    warnings: list[str],
) -> tuple[list[UseCaseScenario], list[str]]:
    known_ids = set(reqs.ids())
    sanitized: list[UseCaseScenario] = []
    for scenario in scenarios:
        unknown = sorted(scenario.linked_requirements - known_ids)
        if unknown:
            warnings.append(
                f"scenario {scenario.id}: dropped unknown requirement links {', '.join(unknown)}"
            )
            scenario = UseCaseScenario(
                id=scenario.id,
                title=scenario.title,
                actor=scenario.actor,
                steps=scenario.steps,
                quality_tags=scenario.quality_tags,
                linked_requirements=frozenset(scenario.linked_requirements & known_ids),
            )
        for index, step in enumerate(scenario.steps):
            for ref in step.concept_refs:
                if ref not in model.concepts:
                    warnings.append(
                        f"scenario {scenario.id} step {index + 1}: unresolved concept '{ref}'"
                    )
        sanitized.append(scenario)
    return sanitized, warnings


def _parse_refinement(text: str) -> tuple[tuple[DomainModel, list[UseCaseScenario]], list[str]]:
    model, warnings = _parse_completion_model(text)
    scenarios, more = _parse_completion_scenarios(text)
    return (model, scenarios), warnings + more


def refine(
    model: DomainModel,
    scenarios: Sequence[UseCaseScenario],
    instruction: str,
    reqs: RequirementSet,
    gateway: LlmGateway,
) -> tuple[DomainModel, list[UseCaseScenario], list[str]]:
    """Apply a refinement instruction; on failure the inputs remain in force.

    The completion must contain both an updated model block and an updated
    scenarios JSON block.
    """
    if not instruction.strip():
        raise ValueError("refinement instruction must be non-empty")
    request = gateway.render(
        "refine_artifacts@1",
        {
            "domain_model": emit_plantuml(model),
            "scenarios": json.dumps(scenarios_to_json(list(scenarios)), indent=2, sort_keys=True),
            "instruction": instruction.strip(),
        },
    )
    (new_model, new_scenarios), warnings = gateway.complete_with_repair(request, _parse_refinement)
    new_scenarios, warnings = _sanitize_scenarios(new_scenarios, new_model, reqs, warnings)
    return new_model, new_scenarios, warnings


def model_diff(old: DomainModel, new: DomainModel) -> dict:
    """Concept/relation additions and removals between two models (for audits and UIs)."""

    def relation_entry(relation: Relation) -> dict:
        return {
            "source": relation.source,
            "target": relation.target,
            "kind": relation.kind.value,
            "label": relation.label,
        }

    old_relations = {r.sort_key(): r for r in old.relations}
    new_relations = {r.sort_key(): r for r in new.relations}
    return {
        "added_concepts": sorted(set(new.concepts) - set(old.concepts)),
        "removed_concepts": sorted(set(old.concepts) - set(new.concepts)),
        "added_relations": [
            relation_entry(new_relations[k]) for k in sorted(set(new_relations) - set(old_relations))
        ],
        "removed_relations": [
            relation_entry(old_relations[k]) for k in sorted(set(old_relations) - set(new_relations))
        ],
    }
