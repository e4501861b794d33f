"""Project orchestration: each architect-facing step as one operation that
loads artifacts, runs the module work, persists results, and advances the
state machine with an audit entry.

This is the layer the CLI and the HTTP server both call; neither adds
behavior of its own beyond transport concerns.
"""

from __future__ import annotations

import fcntl
import shutil
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

from . import candidates as cand
from . import domain_scenarios as ds
from . import evaluation as ev
from . import iteration as it
from .canonical import atomic_write_text, read_json, sha256_hex, write_json
from .context_cutter import cut_contexts
from .errors import ArchgenError, OperationalError
from .llm_gateway import LlmGateway, ProviderConfig
from .requirements import QualityAttribute, RequirementSet, parse_requirements
from .session import (
    TRANSITIONS,
    Actor,
    InvalidTransition,
    Phase,
    PhaseEvent,
    ProjectState,
    ProjectStore,
)


class WorkflowError(ArchgenError):
    """A step was invoked against a project that cannot accept it."""


class LockHeld(OperationalError):
    pass


@contextmanager
def project_lock(root: Path) -> Iterator[None]:
    """Non-blocking single-writer lock; concurrent writers fail fast."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    lock_path = root / ".lock"
    handle = open(lock_path, "w")
    try:
        try:
            fcntl.flock(handle, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError as exc:
            raise LockHeld(f"another process holds the lock on {root}") from exc
        yield
    finally:
        try:
            fcntl.flock(handle, fcntl.LOCK_UN)
        finally:
            handle.close()


@dataclass
class IngestReport:
    files: list[str]
    total: int
    functional: int
    non_functional: int
    ambiguous: list[str]
    document_digest: str


class Project:
    """One project directory plus its loaded state."""

    def __init__(self, store: ProjectStore, state: ProjectState) -> None:
        self.store = store
        self.state = state

    @property
    def paths(self):
        return self.store.paths

    @classmethod
    def initialize(
        cls, root: Path, project_id: str, provider: ProviderConfig | None = None
    ) -> "Project":
        store = ProjectStore(root)
        state = store.create(project_id, provider or ProviderConfig())
        return cls(store, state)

    @classmethod
    def open(cls, root: Path, provider: ProviderConfig | None = None) -> "Project":
        store = ProjectStore(root)
        state = store.load()
        if provider is not None:
            # Per-invocation override; not persisted.
            state.provider = provider
        return cls(store, state)

    def gateway(self) -> LlmGateway:
        return LlmGateway(self.state.provider, self.paths.root)

    # -- readers ------------------------------------------------------------

    def _require(self, path: Path, what: str) -> Path:
        if not path.is_file():
            raise WorkflowError(f"{what} not found at {path}")
        return path

    def load_requirements(self) -> RequirementSet:
        directory = self.paths.requirements_dir
        documents = [
            (path.name, path.read_text(encoding="utf-8"))
            for path in sorted(directory.glob("*.md"))
        ]
        if not documents:
            raise WorkflowError("no requirement documents ingested yet")
        return parse_requirements(documents)

    def read_domain(self, iteration: int | None = None) -> ds.DomainModel:
        n = self.state.current_iteration if iteration is None else iteration
        path = self._require(self.paths.domain_model(n), "domain model")
        return ds.parse_domain_model(path.read_text(encoding="utf-8")).model

    def read_scenarios(self, iteration: int | None = None) -> list[ds.UseCaseScenario]:
        n = self.state.current_iteration if iteration is None else iteration
        path = self._require(self.paths.scenarios(n), "scenarios")
        return ds.scenarios_from_payload(read_json(path))

    def read_candidates(self, iteration: int | None = None) -> list[cand.ArchitectureCandidate]:
        n = self.state.current_iteration if iteration is None else iteration
        directory = self.paths.candidates_dir(n)
        if not directory.is_dir():
            raise WorkflowError(f"no candidates generated for iteration {n}")
        out = []
        for architecture in sorted(directory.glob("*/architecture.json")):
            out.append(cand.ArchitectureCandidate.from_dict(read_json(architecture)))
        if not out:
            raise WorkflowError(f"no candidates generated for iteration {n}")
        return out

    def read_candidate_adrs(self, candidate_id: str, iteration: int | None = None) -> list[cand.DecisionRecord]:
        n = self.state.current_iteration if iteration is None else iteration
        adr_dir = self.paths.adr_dir(n, candidate_id)
        records = []
        for path in sorted(adr_dir.glob("*.md")):
            record_id = int(path.name.split("-", 1)[0])
            records.append(cand.parse_adr(path.read_text(encoding="utf-8"), record_id))
        return records

    def read_evaluation(self, iteration: int | None = None) -> dict:
        n = self.state.current_iteration if iteration is None else iteration
        path = self._require(self.paths.evaluation(n), "evaluation")
        return read_json(path)

    # -- steps --------------------------------------------------------------

    def _check_event(self, event: PhaseEvent) -> None:
        if (self.state.phase, event) not in TRANSITIONS:
            raise InvalidTransition(self.state.phase, event)

    def ingest(self, documents: Sequence[Path]) -> IngestReport:
        """Copy requirement documents into the project and classify them.

        Only legal before domain generation (or after an iteration reset).
        """
        if self.state.phase is not Phase.INGESTED:
            raise WorkflowError(
                f"ingest is only allowed in phase {Phase.INGESTED.value},"
                f" current phase is {self.state.phase.value}"
            )
        if not documents:
            raise WorkflowError("ingest needs at least one document")
        copied = []
        for source in documents:
            source = Path(source)
            if not source.is_file():
                raise WorkflowError(f"document not found: {source}")
            text = source.read_text(encoding="utf-8")
            atomic_write_text(self.paths.requirements_dir / source.name, text)
            copied.append(source.name)

        reqs = self.load_requirements()
        self.store.record(
            self.state,
            Actor.ARCHITECT,
            "ingest",
            {"files": sorted(copied), "document_digest": reqs.document_digest},
        )
        return IngestReport(
            files=sorted(copied),
            total=len(reqs.requirements),
            functional=len(reqs.functional()),
            non_functional=len(reqs.non_functional()),
            ambiguous=[r.id for r in reqs.requirements if r.ambiguous],
            document_digest=reqs.document_digest,
        )

    def generate_domain(self) -> tuple[ds.ValidationReport, list[str]]:
        self._check_event(PhaseEvent.DOMAIN_GENERATED)
        reqs = self.load_requirements()
        gateway = self.gateway()
        model, warnings = ds.generate_domain_model(reqs, gateway)
        scenarios, more = ds.generate_scenarios(reqs, model, gateway)
        warnings += more

        n = self.state.current_iteration
        self.paths.iteration_dir(n).mkdir(parents=True, exist_ok=True)
        model_text = ds.emit_plantuml(model)
        atomic_write_text(self.paths.domain_model(n), model_text)
        write_json(self.paths.scenarios(n), ds.scenarios_to_json(scenarios))

        self.store.advance_phase(
            self.state,
            PhaseEvent.DOMAIN_GENERATED,
            Actor.TOOL,
            "gen_domain",
            {
                "model_digest": sha256_hex(model_text),
                "concepts": len(model.concepts),
                "scenarios": len(scenarios),
            },
        )
        report = ds.validate(model, scenarios, reqs)
        return report, warnings

    def refine_domain(self, instruction: str) -> tuple[dict, list[str]]:
        """Prompt-mediated change to model and scenarios; failures leave the
        stored artifacts untouched."""
        self._check_event(PhaseEvent.DOMAIN_REFINED)
        reqs = self.load_requirements()
        model = self.read_domain()
        scenarios = self.read_scenarios()
        new_model, new_scenarios, warnings = ds.refine(
            model, scenarios, instruction, reqs, self.gateway()
        )
        diff = ds.model_diff(model, new_model)

        n = self.state.current_iteration
        atomic_write_text(self.paths.domain_model(n), ds.emit_plantuml(new_model))
        write_json(self.paths.scenarios(n), ds.scenarios_to_json(new_scenarios))
        self.store.advance_phase(
            self.state,
            PhaseEvent.DOMAIN_REFINED,
            Actor.ARCHITECT,
            "refine_domain",
            {"instruction": instruction, "diff": diff},
        )
        return diff, warnings

    def approve_domain(self) -> None:
        self.store.advance_phase(
            self.state,
            PhaseEvent.DOMAIN_APPROVED,
            Actor.ARCHITECT,
            "approve_domain",
            {"iteration": self.state.current_iteration},
        )

    def generate_candidates(
        self, event: PhaseEvent = PhaseEvent.CANDIDATES_GENERATED, instruction: str | None = None
    ) -> list[str]:
        self._check_event(event)

        reqs = self.load_requirements()
        model = self.read_domain()
        scenarios = self.read_scenarios()
        cut = cut_contexts(model)

        n = self.state.current_iteration
        write_json(self.paths.contexts(n), cut.to_dict())

        generated = cand.enumerate_candidates(cut, model, reqs)
        warnings: list[str] = []
        for candidate in generated:
            warnings += cand.attach_traces(candidate, scenarios)

        candidates_dir = self.paths.candidates_dir(n)
        if candidates_dir.is_dir():
            shutil.rmtree(candidates_dir)
        for candidate in generated:
            write_json(self.paths.architecture(n, candidate.id), candidate.to_dict())
            adr_dir = self.paths.adr_dir(n, candidate.id)
            adr_dir.mkdir(parents=True, exist_ok=True)
            for record in candidate.adrs:
                atomic_write_text(adr_dir / cand.adr_filename(record), cand.write_adr(record))

        if instruction is not None:
            self.state.settings.refinement_notes.append(instruction)
        actor = Actor.ARCHITECT if event is PhaseEvent.CANDIDATES_REFINED else Actor.TOOL
        action = "refine_candidates" if event is PhaseEvent.CANDIDATES_REFINED else "gen_candidates"
        payload: dict = {
            "candidates": [c.id for c in generated],
            "contexts": len(cut.contexts),
            "modularity": cut.modularity,
        }
        if instruction is not None:
            payload["instruction"] = instruction
        self.store.advance_phase(self.state, event, actor, action, payload)
        return warnings

    def refine_candidates(self, instruction: str) -> list[str]:
        """Regenerate the candidate set with the architect's instruction on
        record; the note steers the rationale texts at evaluation time."""
        if not instruction.strip():
            raise WorkflowError("refinement instruction must be non-empty")
        return self.generate_candidates(
            event=PhaseEvent.CANDIDATES_REFINED, instruction=instruction.strip()
        )

    def evaluate(self, weights: dict[str, float] | None = None) -> tuple[dict, list[str]]:
        self._check_event(PhaseEvent.EVALUATED)

        reqs = self.load_requirements()
        model = self.read_domain()
        scenarios = self.read_scenarios()
        generated = self.read_candidates()
        n = self.state.current_iteration
        for candidate in generated:
            candidate.adrs = self.read_candidate_adrs(candidate.id)

        if weights is not None:
            self.state.settings.weights = dict(weights)
        attr_weights = self._effective_weights(reqs)

        result = ev.evaluate(generated, model, scenarios, reqs, attr_weights)

        rationale_context = {
            cid: {
                "metrics": result.reports[cid].to_dict(),
                "scores": result.scored[cid].scores_dict(),
                "utility": result.ranking.utilities[cid],
            }
            for cid in result.ranking.utilities
        }
        warnings = cand.generate_rationales(
            generated,
            self.gateway(),
            rationale_context,
            notes="\n".join(self.state.settings.refinement_notes),
        )
        for candidate in generated:
            write_json(self.paths.architecture(n, candidate.id), candidate.to_dict())

        if self.state.baseline is not None:
            baseline = cand.ArchitectureCandidate.from_dict(
                read_json(
                    self.paths.architecture(
                        self.state.baseline.iteration, self.state.baseline.candidate_id
                    )
                )
            )
            costs: dict[str, float] = {}
            for candidate in generated:
                diff = it.diff_architectures(baseline, candidate)
                cost = it.change_cost(diff)
                costs[candidate.id] = cost.total
                result.extras[candidate.id] = {
                    "diff": diff.to_dict(),
                    "change_cost": cost.total,
                }
            objectives, order = it.iteration_order(
                result.ranking.utilities, costs, self.state.settings.objective_lambda
            )
            for candidate_id, objective in objectives.items():
                result.extras[candidate_id]["objective"] = objective
            result.ranking = ev.Ranking(
                weights=result.ranking.weights,
                utilities=result.ranking.utilities,
                order=order,
            )

        payload = result.to_dict([c.id for c in generated])
        write_json(self.paths.evaluation(n), payload)
        self.store.advance_phase(
            self.state,
            PhaseEvent.EVALUATED,
            Actor.TOOL,
            "evaluate",
            {"order": list(result.ranking.order), "weights": result.ranking.to_weights_dict()},
        )
        return payload, warnings

    def _effective_weights(self, reqs: RequirementSet) -> dict[QualityAttribute, float]:
        if self.state.settings.weights is not None:
            out: dict[QualityAttribute, float] = {}
            for name, value in self.state.settings.weights.items():
                try:
                    out[QualityAttribute(name)] = float(value)
                except ValueError as exc:
                    raise WorkflowError(f"unknown quality attribute {name!r}") from exc
            return out
        return ev.default_weights(reqs)

    def select(self, candidate_id: str) -> None:
        """Record the architect's choice and freeze its decision records."""
        self._check_event(PhaseEvent.SELECT)
        generated = {c.id for c in self.read_candidates()}
        if candidate_id not in generated:
            raise WorkflowError(
                f"unknown candidate {candidate_id!r}; available: {', '.join(sorted(generated))}"
            )
        self.store.advance_phase(
            self.state,
            PhaseEvent.SELECT,
            Actor.ARCHITECT,
            "select",
            {"candidate_id": candidate_id},
        )
        n = self.state.current_iteration
        for record in self.read_candidate_adrs(candidate_id):
            accepted = cand.DecisionRecord(
                id=record.id,
                title=record.title,
                status=cand.RecordStatus.ACCEPTED,
                context=record.context,
                decision=record.decision,
                considered_options=record.considered_options,
                consequences=record.consequences,
            )
            atomic_write_text(
                self.paths.adr_dir(n, candidate_id) / cand.adr_filename(accepted),
                cand.write_adr(accepted),
            )

    def iterate(self) -> None:
        self.store.begin_iteration(self.state)

    # -- knobs --------------------------------------------------------------

    def set_weights(self, weights: dict[str, float]) -> dict | None:
        """Store attribute weights; when an evaluation exists for the current
        iteration, re-rank it in place without touching the LLM."""
        for name in weights:
            try:
                QualityAttribute(name)
            except ValueError as exc:
                raise WorkflowError(f"unknown quality attribute {name!r}") from exc
        self.state.settings.weights = {k: float(v) for k, v in weights.items()}
        if self.state.phase is Phase.EVALUATED:
            payload = self._rerank_stored()
            self.store.advance_phase(
                self.state,
                PhaseEvent.EVALUATED,
                Actor.ARCHITECT,
                "set_weights",
                {"weights": self.state.settings.weights},
            )
            return payload
        self.store.record(
            self.state, Actor.ARCHITECT, "set_weights", {"weights": self.state.settings.weights}
        )
        return None

    def set_lambda(self, value: float) -> dict | None:
        if not 0.0 <= value <= 1.0:
            raise WorkflowError(f"lambda must lie in [0,1], got {value}")
        self.state.settings.objective_lambda = value
        if self.state.phase is Phase.EVALUATED and self.state.baseline is not None:
            payload = self._rerank_stored()
            self.store.advance_phase(
                self.state,
                PhaseEvent.EVALUATED,
                Actor.ARCHITECT,
                "set_lambda",
                {"lambda": value},
            )
            return payload
        self.store.record(self.state, Actor.ARCHITECT, "set_lambda", {"lambda": value})
        return None

    def _rerank_stored(self) -> dict:
        """Recompute utilities, objectives, and order of the stored evaluation
        from its frozen scores under the current weights and lambda."""
        payload = self.read_evaluation()
        reqs = self.load_requirements()
        attr_weights = self._effective_weights(reqs)
        total = sum(attr_weights.values())
        if total <= 0:
            raise ev.AllWeightsZero("at least one attribute weight must be positive")

        utilities: dict[str, float] = {}
        for entry in payload["candidates"]:
            utilities[entry["id"]] = (
                sum(
                    attr_weights.get(QualityAttribute(attr), 0.0) * score
                    for attr, score in entry["scores"].items()
                )
                / total
            )
            entry["utility"] = utilities[entry["id"]]

        iteration_mode = any("change_cost" in entry for entry in payload["candidates"])
        if iteration_mode:
            costs = {entry["id"]: entry["change_cost"] for entry in payload["candidates"]}
            objectives, order = it.iteration_order(
                utilities, costs, self.state.settings.objective_lambda
            )
            for entry in payload["candidates"]:
                entry["objective"] = objectives[entry["id"]]
        else:
            order = tuple(sorted(utilities, key=lambda cid: (-utilities[cid], cid)))

        payload["weights"] = {attr.value: w for attr, w in sorted(attr_weights.items())}
        payload["order"] = list(order)
        write_json(self.paths.evaluation(self.state.current_iteration), payload)
        return payload

    # -- reporting ----------------------------------------------------------

    def export_markdown(self) -> str:
        """Self-contained report of the current iteration's artifacts."""
        state = self.state
        n = state.current_iteration
        lines = [
            f"# Architecture workbench report: {state.project_id}",
            "",
            f"- Iteration: {n}",
            f"- Phase: {state.phase.value}",
        ]
        if state.selected_candidate:
            lines.append(f"- Selected candidate: {state.selected_candidate}")
        lines.append("")

        try:
            reqs = self.load_requirements()
        except (WorkflowError, ArchgenError):
            reqs = None
        if reqs:
            lines += [
                "## Requirements",
                "",
                f"{len(reqs.requirements)} requirements"
                f" ({len(reqs.functional())} functional, {len(reqs.non_functional())} quality).",
                "",
            ]

        if self.paths.domain_model(n).is_file():
            lines += [
                "## Domain model",
                "",
                "```plantuml",
                self.paths.domain_model(n).read_text(encoding="utf-8").rstrip("\n"),
                "```",
                "",
            ]

        if self.paths.contexts(n).is_file():
            contexts = read_json(self.paths.contexts(n))
            lines += ["## Bounded contexts", ""]
            lines.append(f"Modularity: {contexts['modularity']:.4f}")
            lines.append("")
            for context in contexts["contexts"]:
                lines.append(f"- **{context['name']}**: {', '.join(context['members'])}")
            lines.append("")

        evaluation = None
        if self.paths.evaluation(n).is_file():
            evaluation = self.read_evaluation()

        candidates_dir = self.paths.candidates_dir(n)
        if candidates_dir.is_dir():
            lines += ["## Candidates", ""]
            for architecture in sorted(candidates_dir.glob("*/architecture.json")):
                candidate = cand.ArchitectureCandidate.from_dict(read_json(architecture))
                lines.append(f"### {candidate.id}: {candidate.style.value}")
                lines.append("")
                for component in sorted(candidate.components, key=lambda c: c.name):
                    owned = ", ".join(sorted(component.owned_concepts)) or "(infrastructure)"
                    lines.append(f"- `{component.name}`: {owned}")
                lines.append("")
                if candidate.dependencies:
                    lines.append(
                        "Dependencies: "
                        + "; ".join(
                            f"{d.source} -> {d.target} ({d.via})"
                            for d in sorted(candidate.dependencies, key=cand.Dependency.sort_key)
                        )
                    )
                    lines.append("")
                if candidate.rationale:
                    lines += [f"> {candidate.rationale}", ""]
                for record in self.read_candidate_adrs(candidate.id):
                    lines.append(cand.write_adr(record).rstrip("\n"))
                    lines.append("")

        if evaluation:
            attrs = sorted(evaluation["weights"])
            lines += ["## Evaluation", ""]
            lines.append("| candidate | " + " | ".join(attrs) + " | utility |")
            lines.append("|" + "---|" * (len(attrs) + 2))
            for entry in evaluation["candidates"]:
                row = [entry["id"]]
                row += [f"{entry['scores'][a]:.3f}" for a in attrs]
                row.append(f"{entry['utility']:.3f}")
                lines.append("| " + " | ".join(row) + " |")
            lines.append("")
            for entry in evaluation["candidates"]:
                for risk in entry["risks"]:
                    lines.append(f"- Risk ({entry['id']}, {risk['attribute']}): {risk['detail']}")
            lines.append("")
            lines.append("Ranking: " + " > ".join(evaluation["order"]))
            lines.append("")

        return "\n".join(lines).rstrip("\n") + "\n"
