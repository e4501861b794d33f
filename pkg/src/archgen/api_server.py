"""HTTP facade over the workflow for the web UI.

A thin adapter: every endpoint maps to exactly one workflow operation plus
audit logging. Long LLM-backed steps run as pollable jobs on a single FIFO
worker; quick mutations run synchronously. Concurrent mutations are refused
with 409 rather than queued behind each other invisibly.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response

from .canonical import tree_entries
from .errors import ArchgenError, OperationalError
from .session import (
    TRANSITIONS,
    Actor,
    InvalidTransition,
    MissingProject,
    Phase,
    PhaseEvent,
)
from .workflow import Project, WorkflowError

ARTIFACT_SUBDIRS = ["requirements", "iterations", "llm_cache"]


class Busy(ArchgenError):
    """A mutation arrived while another mutation or job was running."""


class JobKind(str, Enum):
    GEN_DOMAIN = "GenDomain"
    REFINE = "Refine"
    GEN_CANDIDATES = "GenCandidates"
    EVALUATE = "Evaluate"


class JobStatus(str, Enum):
    PENDING = "Pending"
    RUNNING = "Running"
    DONE = "Done"
    FAILED = "Failed"


@dataclass
class Job:
    job_id: str
    kind: JobKind
    payload: dict
    status: JobStatus = JobStatus.PENDING
    result_ref: str | None = None
    error: str | None = None
    warnings: list[str] = field(default_factory=list)
    # Server-computed domain diff for Refine jobs; the UI never diffs locally.
    diff: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "job_id": self.job_id,
            "kind": self.kind.value,
            "status": self.status.value,
            "result_ref": self.result_ref,
            "error": self.error,
            "warnings": list(self.warnings),
        }
        if self.diff is not None:
            out["diff"] = self.diff
        return out


def _error_body(code: str, message: str, detail: dict | None = None) -> dict:
    return {"code": code, "message": message, "detail": detail or {}}


def _error_response(status: int, code: str, message: str, detail: dict | None = None) -> JSONResponse:
    return JSONResponse(status_code=status, content=_error_body(code, message, detail))


def _exception_response(exc: ArchgenError, status: int) -> JSONResponse:
    detail: dict = {}
    if isinstance(exc, InvalidTransition):
        detail = {"phase": exc.phase.value, "event": exc.event.value}
    return _error_response(status, type(exc).__name__, str(exc), detail)


class ProjectService:
    """Owns the job queue and the single-writer discipline for one project."""

    def __init__(self, project_dir: Path) -> None:
        self.project_dir = Path(project_dir)
        self.jobs: dict[str, Job] = {}
        self.job_order: list[str] = []
        self.queue: "queue.Queue[Job]" = queue.Queue()
        self.mutation_lock = threading.Lock()
        self._counter = 0
        self._counter_lock = threading.Lock()
        self._worker = threading.Thread(target=self._run_jobs, daemon=True)
        self._worker.start()

    def _next_job_id(self) -> str:
        with self._counter_lock:
            self._counter += 1
            return f"job-{self._counter}"

    def open_project(self) -> Project:
        return Project.open(self.project_dir)

    # -- jobs ---------------------------------------------------------------

    def submit(self, kind: JobKind, payload: dict) -> Job:
        project = self.open_project()
        phase = project.state.phase
        event = self._event_for(kind, phase)
        if event is None or (phase, event) not in TRANSITIONS:
            raise InvalidTransition(phase, event or PhaseEvent.DOMAIN_GENERATED)
        if kind is JobKind.REFINE:
            instruction = payload.get("instruction")
            if not isinstance(instruction, str) or not instruction.strip():
                raise WorkflowError("Refine requires a non-empty 'instruction' string")
        job = Job(job_id=self._next_job_id(), kind=kind, payload=payload)
        self.jobs[job.job_id] = job
        self.job_order.append(job.job_id)
        self.queue.put(job)
        return job

    @staticmethod
    def _event_for(kind: JobKind, phase: Phase) -> PhaseEvent | None:
        if kind is JobKind.GEN_DOMAIN:
            return PhaseEvent.DOMAIN_GENERATED
        if kind is JobKind.EVALUATE:
            return PhaseEvent.EVALUATED
        if kind is JobKind.GEN_CANDIDATES:
            # Submitting from the approval gate implies approval (see execute).
            if phase is Phase.DOMAIN_GENERATED:
                return PhaseEvent.DOMAIN_APPROVED
            return PhaseEvent.CANDIDATES_GENERATED
        if kind is JobKind.REFINE:
            # One verb, two loops: which one depends on where the project is.
            if phase is Phase.CANDIDATES_GENERATED:
                return PhaseEvent.CANDIDATES_REFINED
            return PhaseEvent.DOMAIN_REFINED
        return None

    def _run_jobs(self) -> None:
        while True:
            job = self.queue.get()
            with self.mutation_lock:
                job.status = JobStatus.RUNNING
                try:
                    self._execute(job)
                    job.status = JobStatus.DONE
                except ArchgenError as exc:
                    job.status = JobStatus.FAILED
                    job.error = f"{type(exc).__name__}: {exc}"
                except Exception as exc:  # a failed job must never kill the worker
                    job.status = JobStatus.FAILED
                    job.error = f"{type(exc).__name__}: {exc}"
            self.queue.task_done()

    def _execute(self, job: Job) -> None:
        project = self.open_project()
        n = project.state.current_iteration
        if job.kind is JobKind.GEN_DOMAIN:
            report, warnings = project.generate_domain()
            job.warnings = warnings + report.messages()
            job.result_ref = f"iterations/{n}/domain_model.puml"
        elif job.kind is JobKind.REFINE:
            instruction = job.payload["instruction"].strip()
            if project.state.phase is Phase.CANDIDATES_GENERATED:
                job.warnings = project.refine_candidates(instruction)
                job.result_ref = f"iterations/{n}/contexts.json"
            else:
                diff, warnings = project.refine_domain(instruction)
                job.diff = diff
                job.warnings = warnings
                job.result_ref = f"iterations/{n}/domain_model.puml"
        elif job.kind is JobKind.GEN_CANDIDATES:
            if project.state.phase is Phase.DOMAIN_GENERATED:
                project.approve_domain()
            job.warnings = project.generate_candidates()
            job.result_ref = f"iterations/{n}/contexts.json"
        elif job.kind is JobKind.EVALUATE:
            weights = job.payload.get("weights")
            _, warnings = project.evaluate(weights)
            job.warnings = warnings
            job.result_ref = f"iterations/{n}/evaluation.json"

    # -- state --------------------------------------------------------------

    def state_snapshot(self) -> dict:
        project = self.open_project()
        state = project.state
        return {
            "project_id": state.project_id,
            "phase": state.phase.value,
            "iteration": state.current_iteration,
            "selected_candidate": state.selected_candidate,
            "settings": state.settings.to_dict(),
            "baseline": state.baseline.to_dict() if state.baseline else None,
            "audit_length": len(state.audit_log),
            "artifacts": [
                {"path": path, "digest": digest}
                for path, digest in tree_entries(self.project_dir, ARTIFACT_SUBDIRS)
            ],
            "jobs": [self.jobs[job_id].to_dict() for job_id in self.job_order],
        }


def create_app(project_dir: Path) -> FastAPI:
    service = ProjectService(project_dir)
    app = FastAPI(title="archgen", docs_url=None, redoc_url=None)
    app.state.service = service

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError) -> JSONResponse:
        return _error_response(400, "MalformedPayload", "request body does not validate", {})

    @app.exception_handler(ArchgenError)
    async def domain_error(request: Request, exc: ArchgenError) -> JSONResponse:
        if isinstance(exc, (InvalidTransition, Busy)):
            return _exception_response(exc, 409)
        if isinstance(exc, MissingProject):
            return _exception_response(exc, 404)
        if isinstance(exc, OperationalError):
            return _exception_response(exc, 500)
        return _exception_response(exc, 400)

    @app.get("/api/state")
    def get_state() -> dict:
        return service.state_snapshot()

    @app.post("/api/jobs", status_code=202)
    def submit_job(body: dict) -> dict:
        kind_raw = body.get("kind")
        try:
            kind = JobKind(kind_raw)
        except ValueError:
            return _error_response(
                400, "MalformedPayload", f"unknown job kind {kind_raw!r}",
                {"known": [k.value for k in JobKind]},
            )
        payload = body.get("payload") or {}
        if not isinstance(payload, dict):
            return _error_response(400, "MalformedPayload", "payload must be an object", {})
        job = service.submit(kind, payload)
        return {"job_id": job.job_id, "status": job.status.value}

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str) -> dict:
        job = service.jobs.get(job_id)
        if job is None:
            return _error_response(404, "UnknownJob", f"no job {job_id}", {})
        return job.to_dict()

    @app.get("/api/artifacts/{path:path}")
    def get_artifact(path: str) -> Response:
        root = service.project_dir.resolve()
        target = (root / path).resolve()
        if not target.is_relative_to(root) or target == root / "project.json":
            return _error_response(404, "UnknownArtifact", f"no artifact {path}", {})
        if not target.is_file():
            return _error_response(404, "UnknownArtifact", f"no artifact {path}", {})
        media = "application/json" if target.suffix == ".json" else "text/plain"
        return Response(content=target.read_bytes(), media_type=media)

    def _synchronous_mutation(run) -> dict:
        if not service.mutation_lock.acquire(blocking=False):
            raise Busy("a job is currently mutating the project")
        try:
            return run()
        finally:
            service.mutation_lock.release()

    @app.post("/api/select")
    def select(body: dict) -> dict:
        candidate_id = body.get("candidate_id")
        if not isinstance(candidate_id, str) or not candidate_id:
            return _error_response(400, "MalformedPayload", "candidate_id must be a string", {})

        def run() -> dict:
            project = service.open_project()
            project.select(candidate_id)
            return service.state_snapshot()

        return _synchronous_mutation(run)

    @app.post("/api/iterate")
    def iterate() -> dict:
        def run() -> dict:
            project = service.open_project()
            project.iterate()
            return service.state_snapshot()

        return _synchronous_mutation(run)

    @app.post("/api/weights")
    def set_weights(body: dict) -> dict:
        if not body or not all(isinstance(v, (int, float)) for v in body.values()):
            return _error_response(
                400, "MalformedPayload", "body must map attributes to numbers", {}
            )

        def run() -> dict:
            project = service.open_project()
            evaluation = project.set_weights({k: float(v) for k, v in body.items()})
            snapshot = service.state_snapshot()
            snapshot["evaluation"] = evaluation
            return snapshot

        return _synchronous_mutation(run)

    @app.post("/api/lambda")
    def set_lambda(body: dict) -> dict:
        value = body.get("value")
        if not isinstance(value, (int, float)):
            return _error_response(400, "MalformedPayload", "value must be a number", {})

        def run() -> dict:
            project = service.open_project()
            evaluation = project.set_lambda(float(value))
            snapshot = service.state_snapshot()
            snapshot["evaluation"] = evaluation
            return snapshot

        return _synchronous_mutation(run)

    return app
