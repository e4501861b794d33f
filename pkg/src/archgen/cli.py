"""Command-line entry point: the six process steps as subcommands, runnable
headless end to end.

Exit codes: 0 success, 1 domain errors (illegal transitions, bad input),
2 operational errors (I/O, lock contention, provider failures).
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .errors import ArchgenError, OperationalError
from .llm_gateway import ProviderConfig
from .requirements import QualityAttribute
from .workflow import Project, WorkflowError, project_lock

EXIT_DOMAIN_ERROR = 1
EXIT_OPERATIONAL_ERROR = 2


def _fail(exc: ArchgenError) -> None:
    click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
    code = EXIT_OPERATIONAL_ERROR if isinstance(exc, OperationalError) else EXIT_DOMAIN_ERROR
    sys.exit(code)


def _provider_override(provider: str | None, record: bool, stored: ProviderConfig | None = None) -> ProviderConfig | None:
    if provider is None and not record:
        return None
    base = stored or ProviderConfig()
    return ProviderConfig(
        kind=provider or base.kind,
        endpoint=base.endpoint,
        model=base.model,
        record=record or base.record,
        cache_dir=base.cache_dir,
    )


def _open(project_dir: str, provider: str | None, record: bool) -> Project:
    stored = Project.open(Path(project_dir))
    override = _provider_override(provider, record, stored.state.provider)
    if override is not None:
        stored.state.provider = override
    return stored


def _parse_weights(text: str | None) -> dict[str, float] | None:
    if text is None:
        return None
    weights: dict[str, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise click.BadParameter(f"expected attr=number, got {part!r}", param_hint="--weights")
        name, _, raw = part.partition("=")
        try:
            weights[name.strip()] = float(raw)
        except ValueError:
            raise click.BadParameter(f"not a number: {raw!r}", param_hint="--weights") from None
    if not weights:
        raise click.BadParameter("no weights given", param_hint="--weights")
    return weights


def _instruction_or_stdin(instruction: str | None) -> str:
    if instruction is not None:
        return instruction
    return click.get_text_stream("stdin").read()


def _echo_warnings(warnings: list[str]) -> None:
    for warning in warnings:
        click.echo(f"warning: {warning}")


project_option = click.option(
    "--project", "project_dir", required=True, type=click.Path(), help="Project directory."
)
provider_option = click.option(
    "--provider", type=click.Choice(["live", "replay"]), default=None,
    help="Override the stored completion provider for this invocation.",
)
record_option = click.option(
    "--record", is_flag=True, default=False,
    help="With the live provider, record fixtures for later replay.",
)


@click.group()
def main() -> None:
    """Derive architecture candidates from textual requirements."""


@main.command()
@project_option
@click.option("--name", default=None, help="Project id (defaults to the directory name).")
@provider_option
@record_option
def init(project_dir: str, name: str | None, provider: str | None, record: bool) -> None:
    """Create a new project directory."""
    try:
        config = _provider_override(provider, record) or ProviderConfig()
        with project_lock(Path(project_dir)):
            project = Project.initialize(
                Path(project_dir), name or Path(project_dir).resolve().name, config
            )
        click.echo(f"initialized project {project.state.project_id} at {project_dir}")
    except ArchgenError as exc:
        _fail(exc)


@main.command()
@project_option
@click.argument("documents", nargs=-1, required=True, type=click.Path())
def ingest(project_dir: str, documents: tuple[str, ...]) -> None:
    """Copy requirement documents into the project and classify them."""
    try:
        with project_lock(Path(project_dir)):
            project = Project.open(Path(project_dir))
            report = project.ingest([Path(d) for d in documents])
        click.echo(
            f"ingested {len(report.files)} file(s): {report.total} requirements"
            f" ({report.functional} functional, {report.non_functional} quality)"
        )
        if report.ambiguous:
            click.echo("ambiguous classification: " + ", ".join(report.ambiguous))
    except ArchgenError as exc:
        _fail(exc)


@main.command("gen-domain")
@project_option
@provider_option
@record_option
def gen_domain(project_dir: str, provider: str | None, record: bool) -> None:
    """Generate the domain model and use-case scenarios."""
    try:
        with project_lock(Path(project_dir)):
            project = _open(project_dir, provider, record)
            report, warnings = project.generate_domain()
        _echo_warnings(warnings)
        n = project.state.current_iteration
        model = project.read_domain()
        scenarios = project.read_scenarios()
        click.echo(
            f"iteration {n}: domain model with {len(model.concepts)} concepts,"
            f" {len(model.relations)} relations; {len(scenarios)} scenarios"
        )
        for message in report.messages():
            click.echo(f"finding: {message}")
    except ArchgenError as exc:
        _fail(exc)


@main.command("refine-domain")
@project_option
@provider_option
@record_option
@click.argument("instruction", required=False)
def refine_domain(project_dir: str, provider: str | None, record: bool, instruction: str | None) -> None:
    """Apply a refinement instruction to model and scenarios (argument or stdin)."""
    try:
        text = _instruction_or_stdin(instruction)
        with project_lock(Path(project_dir)):
            project = _open(project_dir, provider, record)
            diff, warnings = project.refine_domain(text)
        _echo_warnings(warnings)
        click.echo(
            "refined: "
            f"+{len(diff['added_concepts'])}/-{len(diff['removed_concepts'])} concepts, "
            f"+{len(diff['added_relations'])}/-{len(diff['removed_relations'])} relations"
        )
    except ArchgenError as exc:
        _fail(exc)


@main.command("approve-domain")
@project_option
def approve_domain(project_dir: str) -> None:
    """Approve the domain model, unlocking candidate generation."""
    try:
        with project_lock(Path(project_dir)):
            project = Project.open(Path(project_dir))
            project.approve_domain()
        click.echo("domain approved")
    except ArchgenError as exc:
        _fail(exc)


@main.command("gen-candidates")
@project_option
@provider_option
@record_option
def gen_candidates(project_dir: str, provider: str | None, record: bool) -> None:
    """Cut bounded contexts and enumerate architecture candidates."""
    try:
        with project_lock(Path(project_dir)):
            project = _open(project_dir, provider, record)
            warnings = project.generate_candidates()
            generated = project.read_candidates()
        _echo_warnings(warnings)
        for candidate in generated:
            click.echo(
                f"{candidate.id}: {candidate.style.value}"
                f" ({len(candidate.components)} components,"
                f" {len(candidate.dependencies)} dependencies)"
            )
    except ArchgenError as exc:
        _fail(exc)


@main.command("refine-candidates")
@project_option
@provider_option
@record_option
@click.argument("instruction", required=False)
def refine_candidates(project_dir: str, provider: str | None, record: bool, instruction: str | None) -> None:
    """Regenerate candidates with an architect instruction on record."""
    try:
        text = _instruction_or_stdin(instruction)
        with project_lock(Path(project_dir)):
            project = _open(project_dir, provider, record)
            warnings = project.refine_candidates(text)
        _echo_warnings(warnings)
        click.echo("candidates regenerated with instruction on record")
    except ArchgenError as exc:
        _fail(exc)


@main.command()
@project_option
@provider_option
@record_option
@click.option("--weights", default=None, help="Attribute weights, e.g. Performance=2,Security=1.")
@click.option("--lambda", "lambda_", type=float, default=None, help="Change-cost emphasis in [0,1].")
def evaluate(
    project_dir: str, provider: str | None, record: bool, weights: str | None, lambda_: float | None
) -> None:
    """Compute metrics, scores, risks, and the candidate ranking."""
    try:
        parsed = _parse_weights(weights)
        with project_lock(Path(project_dir)):
            project = _open(project_dir, provider, record)
            if lambda_ is not None:
                if not 0.0 <= lambda_ <= 1.0:
                    raise WorkflowError(f"lambda must lie in [0,1], got {lambda_}")
                project.state.settings.objective_lambda = lambda_
            payload, warnings = project.evaluate(parsed)
        _echo_warnings(warnings)
        for entry in payload["candidates"]:
            extra = f", objective {entry['objective']:.3f}" if "objective" in entry else ""
            click.echo(f"{entry['id']}: utility {entry['utility']:.3f}{extra}")
        click.echo("ranking: " + " > ".join(payload["order"]))
    except ArchgenError as exc:
        _fail(exc)


@main.command()
@project_option
@click.argument("candidate_id")
def select(project_dir: str, candidate_id: str) -> None:
    """Select the winning candidate; its decision records become accepted."""
    try:
        with project_lock(Path(project_dir)):
            project = Project.open(Path(project_dir))
            project.select(candidate_id)
        click.echo(f"selected {candidate_id}")
    except ArchgenError as exc:
        _fail(exc)


@main.command()
@project_option
def iterate(project_dir: str) -> None:
    """Start the next iteration with the selected candidate as baseline."""
    try:
        with project_lock(Path(project_dir)):
            project = Project.open(Path(project_dir))
            project.iterate()
        click.echo(
            f"iteration {project.state.current_iteration} started"
            f" (baseline: {project.state.baseline.candidate_id})"
        )
    except ArchgenError as exc:
        _fail(exc)


@main.command()
@project_option
@click.option("--out", default=None, type=click.Path(), help="Write the report here instead of stdout.")
def export(project_dir: str, out: str | None) -> None:
    """Emit a self-contained Markdown report of the current iteration."""
    try:
        project = Project.open(Path(project_dir))
        report = project.export_markdown()
        if out is None:
            click.echo(report, nl=False)
        else:
            Path(out).write_text(report, encoding="utf-8")
            click.echo(f"report written to {out}")
    except ArchgenError as exc:
        _fail(exc)


@main.command()
@project_option
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
def serve(project_dir: str, port: int, host: str) -> None:
    """Serve the HTTP API for the web UI (holds the project lock)."""
    try:
        import uvicorn

        from .api_server import create_app

        with project_lock(Path(project_dir)):
            app = create_app(Path(project_dir))
            uvicorn.run(app, host=host, port=port, log_level="warning")
    except ArchgenError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
