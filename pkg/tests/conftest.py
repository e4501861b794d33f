"""Shared builders for the test suite.

The replay corpus under tests/fixtures/avp drives every end-to-end test:
it holds one requirements document and the recorded completions for both the
plain and the refined pipeline path.
"""

from __future__ import annotations

import shutil
from pathlib import Path

import pytest

from archgen.domain_scenarios import (
    Concept,
    DomainModel,
    Relation,
    RelationKind,
    Step,
    UseCaseScenario,
)
from archgen.workflow import Project

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "avp"
REQUIREMENTS_DOC = FIXTURE_DIR / "requirements.md"
FIXTURE_CACHE = FIXTURE_DIR / "llm_cache"

# Must match the instruction the refined-path fixtures were recorded with.
REFINE_INSTRUCTION = (
    "Add an AuditTrail concept that records every issued steering and brake "
    "command, and link it to both command concepts."
)


def make_model(concepts: list[str], relations: list[tuple] = ()) -> DomainModel:
    """Build a model from names and (source, target, kind[, label]) tuples."""
    model = DomainModel()
    for name in concepts:
        model.add_concept(Concept(name))
    for entry in relations:
        source, target, kind = entry[0], entry[1], entry[2]
        label = entry[3] if len(entry) > 3 else None
        model.add_relation(Relation(source, target, RelationKind(kind), label))
    return model


def make_scenario(
    scenario_id: str,
    refs_per_step: list[list[str]],
    tags: tuple[str, ...] = (),
    linked: tuple[str, ...] = (),
) -> UseCaseScenario:
    steps = tuple(
        Step(text=f"step {i}", concept_refs=tuple(refs))
        for i, refs in enumerate(refs_per_step, start=1)
    )
    from archgen.requirements import QualityAttribute

    return UseCaseScenario(
        id=scenario_id,
        title=f"scenario {scenario_id}",
        actor="Actor",
        steps=steps,
        quality_tags=frozenset(QualityAttribute(t) for t in tags),
        linked_requirements=frozenset(linked),
    )


def seed_cache(project_root: Path) -> None:
    cache = project_root / "llm_cache"
    cache.mkdir(parents=True, exist_ok=True)
    for fixture in FIXTURE_CACHE.glob("*.json"):
        shutil.copy2(fixture, cache / fixture.name)


def bootstrap_project(root: Path, refined: bool = False, evaluated: bool = True) -> Project:
    """Run the replay pipeline into `root` and return the opened project."""
    project = Project.initialize(root, "avp")
    seed_cache(root)
    project.ingest([REQUIREMENTS_DOC])
    project.generate_domain()
    if refined:
        project.refine_domain(REFINE_INSTRUCTION)
    project.approve_domain()
    project.generate_candidates()
    if evaluated:
        project.evaluate()
    return project


@pytest.fixture
def evaluated_project(tmp_path: Path) -> Project:
    return bootstrap_project(tmp_path / "proj")


# One line per acceptance criterion, echoed into the terminal summary so the
# verdicts are visible without -s.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
