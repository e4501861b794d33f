"""Project lifecycle: the phase state machine, the append-only audit log, and
atomic persistence of project state in a plain-file project directory.

Single-writer by contract: callers serialize mutating operations on one
project; readers are free. Every mutating operation appends exactly one audit
entry and lands on disk via write-to-temp-then-rename, so a crash mid-write
leaves the previous state intact.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from pathlib import Path

from .canonical import digest_payload, read_json, write_json
from .errors import ArchgenError, OperationalError
from .llm_gateway import ProviderConfig


class Phase(str, Enum):
    INGESTED = "Ingested"
    DOMAIN_GENERATED = "DomainGenerated"
    DOMAIN_APPROVED = "DomainApproved"
    CANDIDATES_GENERATED = "CandidatesGenerated"
    EVALUATED = "Evaluated"
    SELECTED = "Selected"


class PhaseEvent(str, Enum):
    DOMAIN_GENERATED = "DomainGenerated"
    DOMAIN_REFINED = "DomainRefined"
    DOMAIN_APPROVED = "DomainApproved"
    CANDIDATES_GENERATED = "CandidatesGenerated"
    CANDIDATES_REFINED = "CandidatesRefined"
    EVALUATED = "Evaluated"
    SELECT = "Select"
    ITERATE = "Iterate"


# The forward chain of the process, the two refinement self-loops, candidate
# regeneration, re-ranking, and the iteration reset. Everything else is illegal.
TRANSITIONS: dict[tuple[Phase, PhaseEvent], Phase] = {
    (Phase.INGESTED, PhaseEvent.DOMAIN_GENERATED): Phase.DOMAIN_GENERATED,
    (Phase.DOMAIN_GENERATED, PhaseEvent.DOMAIN_REFINED): Phase.DOMAIN_GENERATED,
    (Phase.DOMAIN_GENERATED, PhaseEvent.DOMAIN_APPROVED): Phase.DOMAIN_APPROVED,
    (Phase.DOMAIN_APPROVED, PhaseEvent.CANDIDATES_GENERATED): Phase.CANDIDATES_GENERATED,
    (Phase.CANDIDATES_GENERATED, PhaseEvent.CANDIDATES_GENERATED): Phase.CANDIDATES_GENERATED,
    (Phase.CANDIDATES_GENERATED, PhaseEvent.CANDIDATES_REFINED): Phase.CANDIDATES_GENERATED,
    (Phase.CANDIDATES_GENERATED, PhaseEvent.EVALUATED): Phase.EVALUATED,
    (Phase.EVALUATED, PhaseEvent.EVALUATED): Phase.EVALUATED,
    (Phase.EVALUATED, PhaseEvent.SELECT): Phase.SELECTED,
    (Phase.SELECTED, PhaseEvent.ITERATE): Phase.INGESTED,
}


def legal_events(phase: Phase) -> set[PhaseEvent]:
    return {event for (p, event) in TRANSITIONS if p is phase}


class InvalidTransition(ArchgenError):
    def __init__(self, phase: Phase, event: PhaseEvent) -> None:
        super().__init__(f"event {event.value} is illegal in phase {phase.value}")
        self.phase = phase
        self.event = event


class MissingProject(OperationalError):
    pass


class ProjectExists(OperationalError):
    pass


class CorruptState(OperationalError):
    pass


class Actor(str, Enum):
    ARCHITECT = "Architect"
    TOOL = "Tool"


@dataclass(frozen=True)
class AuditEntry:
    timestamp: str
    actor: Actor
    action: str
    payload_digest: str

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "actor": self.actor.value,
            "action": self.action,
            "payload_digest": self.payload_digest,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AuditEntry":
        return cls(
            timestamp=data["timestamp"],
            actor=Actor(data["actor"]),
            action=data["action"],
            payload_digest=data["payload_digest"],
        )


@dataclass
class Settings:
    weights: dict[str, float] | None = None
    objective_lambda: float = 0.3
    refinement_notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights,
            "lambda": self.objective_lambda,
            "refinement_notes": list(self.refinement_notes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Settings":
        return cls(
            weights=data.get("weights"),
            objective_lambda=data.get("lambda", 0.3),
            refinement_notes=list(data.get("refinement_notes", [])),
        )


@dataclass
class Baseline:
    iteration: int
    candidate_id: str

    def to_dict(self) -> dict:
        return {"iteration": self.iteration, "candidate_id": self.candidate_id}


@dataclass
class ProjectState:
    project_id: str
    current_iteration: int = 0
    phase: Phase = Phase.INGESTED
    selected_candidate: str | None = None
    audit_log: list[AuditEntry] = field(default_factory=list)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    settings: Settings = field(default_factory=Settings)
    baseline: Baseline | None = None

    def check_invariants(self) -> None:
        if (self.phase is Phase.SELECTED) != (self.selected_candidate is not None):
            raise CorruptState(
                "selected_candidate must be set exactly when the phase is Selected"
            )
        if self.current_iteration < 0:
            raise CorruptState("iteration counter must be non-negative")
        timestamps = [entry.timestamp for entry in self.audit_log]
        if timestamps != sorted(timestamps):
            raise CorruptState("audit log timestamps must be monotonic")

    def to_dict(self) -> dict:
        return {
            "project_id": self.project_id,
            "current_iteration": self.current_iteration,
            "phase": self.phase.value,
            "selected_candidate": self.selected_candidate,
            "audit_log": [entry.to_dict() for entry in self.audit_log],
            "provider": self.provider.to_dict(),
            "settings": self.settings.to_dict(),
            "baseline": self.baseline.to_dict() if self.baseline else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ProjectState":
        try:
            baseline_data = data.get("baseline")
            state = cls(
                project_id=data["project_id"],
                current_iteration=data["current_iteration"],
                phase=Phase(data["phase"]),
                selected_candidate=data.get("selected_candidate"),
                audit_log=[AuditEntry.from_dict(e) for e in data.get("audit_log", [])],
                provider=ProviderConfig.from_dict(data.get("provider", {})),
                settings=Settings.from_dict(data.get("settings", {})),
                baseline=Baseline(**baseline_data) if baseline_data else None,
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise CorruptState(f"project state does not deserialize: {exc}") from exc
        state.check_invariants()
        return state


class ProjectPaths:
    """All artifact locations, derived from the project root."""

    def __init__(self, root: Path) -> None:
        self.root = Path(root)

    @property
    def project_json(self) -> Path:
        return self.root / "project.json"

    @property
    def requirements_dir(self) -> Path:
        return self.root / "requirements"

    @property
    def llm_cache_dir(self) -> Path:
        return self.root / "llm_cache"

    def iteration_dir(self, iteration: int) -> Path:
        return self.root / "iterations" / str(iteration)

    def domain_model(self, iteration: int) -> Path:
        return self.iteration_dir(iteration) / "domain_model.puml"

    def scenarios(self, iteration: int) -> Path:
        return self.iteration_dir(iteration) / "scenarios.json"

    def contexts(self, iteration: int) -> Path:
        return self.iteration_dir(iteration) / "contexts.json"

    def candidates_dir(self, iteration: int) -> Path:
        return self.iteration_dir(iteration) / "candidates"

    def candidate_dir(self, iteration: int, candidate_id: str) -> Path:
        return self.candidates_dir(iteration) / candidate_id

    def architecture(self, iteration: int, candidate_id: str) -> Path:
        return self.candidate_dir(iteration, candidate_id) / "architecture.json"

    def adr_dir(self, iteration: int, candidate_id: str) -> Path:
        return self.candidate_dir(iteration, candidate_id) / "adr"

    def evaluation(self, iteration: int) -> Path:
        return self.iteration_dir(iteration) / "evaluation.json"


def _bump_timestamp(last: str | None) -> str:
    now = datetime.now(timezone.utc)
    if last is not None:
        previous = datetime.fromisoformat(last)
        if now <= previous:
            now = previous + timedelta(microseconds=1)
    return now.isoformat()


class ProjectStore:
    """Loads, mutates, and atomically persists one project's state."""

    def __init__(self, root: Path) -> None:
        self.paths = ProjectPaths(Path(root))

    def exists(self) -> bool:
        return self.paths.project_json.is_file()

    def create(self, project_id: str, provider: ProviderConfig) -> ProjectState:
        if self.exists():
            raise ProjectExists(f"project already initialized at {self.paths.root}")
        self.paths.root.mkdir(parents=True, exist_ok=True)
        self.paths.requirements_dir.mkdir(exist_ok=True)
        self.paths.llm_cache_dir.mkdir(exist_ok=True)
        state = ProjectState(project_id=project_id, provider=provider)
        self.record(state, Actor.ARCHITECT, "init", {"project_id": project_id})
        return state

    def load(self) -> ProjectState:
        if not self.exists():
            raise MissingProject(f"no project at {self.paths.root}")
        data = read_json(self.paths.project_json)
        if not isinstance(data, dict):
            raise CorruptState("project.json must hold an object")
        return ProjectState.from_dict(data)

    def save(self, state: ProjectState) -> None:
        state.check_invariants()
        write_json(self.paths.project_json, state.to_dict())

    def append_audit(
        self, state: ProjectState, actor: Actor, action: str, payload: dict
    ) -> None:
        last = state.audit_log[-1].timestamp if state.audit_log else None
        state.audit_log.append(
            AuditEntry(
                timestamp=_bump_timestamp(last),
                actor=actor,
                action=action,
                payload_digest=digest_payload(payload),
            )
        )

    def record(
        self, state: ProjectState, actor: Actor, action: str, payload: dict
    ) -> None:
        """Audit a non-transition mutation and persist."""
        self.append_audit(state, actor, action, payload)
        self.save(state)

    def advance_phase(
        self,
        state: ProjectState,
        event: PhaseEvent,
        actor: Actor,
        action: str,
        payload: dict,
    ) -> ProjectState:
        """Apply one legal event, audit it, persist atomically.

        On InvalidTransition nothing is mutated, in memory or on disk.
        """
        key = (state.phase, event)
        if key not in TRANSITIONS:
            raise InvalidTransition(state.phase, event)
        next_phase = TRANSITIONS[key]

        if event is PhaseEvent.SELECT:
            candidate_id = payload.get("candidate_id")
            if not candidate_id:
                raise ArchgenError("Select requires a candidate_id payload")
            state.selected_candidate = candidate_id
        elif event is PhaseEvent.ITERATE:
            if state.selected_candidate is None:
                raise InvalidTransition(state.phase, event)
            state.baseline = Baseline(
                iteration=state.current_iteration, candidate_id=state.selected_candidate
            )
            state.current_iteration += 1
            state.selected_candidate = None

        state.phase = next_phase
        self.append_audit(state, actor, action, payload)
        self.save(state)
        return state

    def begin_iteration(self, state: ProjectState) -> ProjectState:
        return self.advance_phase(
            state,
            PhaseEvent.ITERATE,
            Actor.ARCHITECT,
            "iterate",
            {"from_iteration": state.current_iteration},
        )
