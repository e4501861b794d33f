"""Command-line interface: step commands, output lines, exit codes."""

from __future__ import annotations

from pathlib import Path

import pytest
from click.testing import CliRunner

from archgen.cli import main

from conftest import REFINE_INSTRUCTION, REQUIREMENTS_DOC, seed_cache


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


def run(runner: CliRunner, *args: str, expect: int = 0):
    result = runner.invoke(main, list(args))
    if result.exit_code != expect:  # pragma: no cover - debugging aid
        raise AssertionError(
            f"exit {result.exit_code} (wanted {expect}) for {args}\n"
            f"stdout: {result.output}\nstderr: {result.stderr}"
        )
    return result


def init_project(runner: CliRunner, root: Path) -> str:
    project_dir = str(root / "proj")
    run(runner, "init", "--project", project_dir, "--name", "avp")
    seed_cache(Path(project_dir))
    return project_dir


def project_through_candidates(runner: CliRunner, root: Path) -> str:
    project_dir = init_project(runner, root)
    run(runner, "ingest", "--project", project_dir, str(REQUIREMENTS_DOC))
    run(runner, "gen-domain", "--project", project_dir)
    run(runner, "approve-domain", "--project", project_dir)
    run(runner, "gen-candidates", "--project", project_dir)
    return project_dir


class TestInit:
    def test_creates_project(self, runner, tmp_path):
        result = run(runner, "init", "--project", str(tmp_path / "p"), "--name", "demo")
        assert "initialized project demo" in result.output
        assert (tmp_path / "p" / "project.json").is_file()

    def test_name_defaults_to_directory(self, runner, tmp_path):
        run(runner, "init", "--project", str(tmp_path / "garage"))
        import json

        data = json.loads((tmp_path / "garage" / "project.json").read_text())
        assert data["project_id"] == "garage"

    def test_double_init_is_operational_error(self, runner, tmp_path):
        run(runner, "init", "--project", str(tmp_path / "p"))
        result = run(runner, "init", "--project", str(tmp_path / "p"), expect=2)
        assert "ProjectExists" in result.stderr


class TestIngest:
    def test_summary_lines(self, runner, tmp_path):
        project_dir = init_project(runner, tmp_path)
        result = run(runner, "ingest", "--project", project_dir, str(REQUIREMENTS_DOC))
        assert "ingested 1 file(s): 91 requirements (65 functional, 26 quality)" in result.output
        assert "ambiguous classification: NFR-23" in result.output

    def test_missing_project_is_operational_error(self, runner, tmp_path):
        result = run(
            runner, "ingest", "--project", str(tmp_path / "nowhere"), str(REQUIREMENTS_DOC),
            expect=2,
        )
        assert "MissingProject" in result.stderr


class TestGenDomain:
    def test_reports_model_size_and_findings(self, runner, tmp_path):
        project_dir = init_project(runner, tmp_path)
        run(runner, "ingest", "--project", project_dir, str(REQUIREMENTS_DOC))
        result = run(runner, "gen-domain", "--project", project_dir)
        assert (
            "iteration 0: domain model with 22 concepts, 30 relations; 8 scenarios"
            in result.output
        )
        assert "warning: line 5: attribute body of 'Vehicle' discarded" in result.output
        assert result.output.count("finding: UncoveredRequirement:") == 8

    def test_repeat_is_domain_error(self, runner, tmp_path):
        project_dir = init_project(runner, tmp_path)
        run(runner, "ingest", "--project", project_dir, str(REQUIREMENTS_DOC))
        run(runner, "gen-domain", "--project", project_dir)
        result = run(runner, "gen-domain", "--project", project_dir, expect=1)
        assert "InvalidTransition" in result.stderr


class TestRefineDomain:
    def test_instruction_argument(self, runner, tmp_path):
        project_dir = init_project(runner, tmp_path)
        run(runner, "ingest", "--project", project_dir, str(REQUIREMENTS_DOC))
        run(runner, "gen-domain", "--project", project_dir)
        result = run(runner, "refine-domain", "--project", project_dir, REFINE_INSTRUCTION)
        assert "refined: +1/-0 concepts, +2/-0 relations" in result.output

    def test_instruction_from_stdin(self, runner, tmp_path):
        project_dir = init_project(runner, tmp_path)
        run(runner, "ingest", "--project", project_dir, str(REQUIREMENTS_DOC))
        run(runner, "gen-domain", "--project", project_dir)
        result = runner.invoke(
            main, ["refine-domain", "--project", project_dir], input=REFINE_INSTRUCTION
        )
        assert result.exit_code == 0
        assert "refined: +1/-0 concepts" in result.output


class TestCandidatesAndEvaluate:
    def test_candidate_listing(self, runner, tmp_path):
        project_dir = project_through_candidates(runner, tmp_path)
        result = run(runner, "gen-candidates", "--project", project_dir)
        for cid in ("c1", "c2", "c3", "c4"):
            assert f"{cid}: " in result.output

    def test_evaluation_output(self, runner, tmp_path):
        project_dir = project_through_candidates(runner, tmp_path)
        result = run(runner, "evaluate", "--project", project_dir)
        assert "c1: utility 0.666" in result.output
        assert "c2: utility 0.733" in result.output
        assert "c3: utility 0.313" in result.output
        assert "c4: utility 0.811" in result.output
        assert "ranking: c4 > c2 > c1 > c3" in result.output

    def test_evaluate_with_weights(self, runner, tmp_path):
        project_dir = project_through_candidates(runner, tmp_path)
        result = run(
            runner, "evaluate", "--project", project_dir, "--weights", "Usability=1"
        )
        assert "ranking: " in result.output

    def test_malformed_weights_is_usage_error(self, runner, tmp_path):
        project_dir = project_through_candidates(runner, tmp_path)
        result = runner.invoke(
            main, ["evaluate", "--project", project_dir, "--weights", "Performance"]
        )
        assert result.exit_code == 2
        assert "attr=number" in result.stderr

    def test_lambda_out_of_range(self, runner, tmp_path):
        project_dir = project_through_candidates(runner, tmp_path)
        result = run(
            runner, "evaluate", "--project", project_dir, "--lambda", "2.0", expect=1
        )
        assert "lambda" in result.stderr

    def test_refine_candidates_instruction(self, runner, tmp_path):
        project_dir = project_through_candidates(runner, tmp_path)
        result = run(
            runner, "refine-candidates", "--project", project_dir, "prefer fewer parts"
        )
        assert "candidates regenerated" in result.output


class TestSelectIterateExport:
    def evaluated(self, runner, tmp_path) -> str:
        project_dir = project_through_candidates(runner, tmp_path)
        run(runner, "evaluate", "--project", project_dir)
        return project_dir

    def test_select(self, runner, tmp_path):
        project_dir = self.evaluated(runner, tmp_path)
        result = run(runner, "select", "--project", project_dir, "c4")
        assert "selected c4" in result.output

    def test_select_unknown_candidate(self, runner, tmp_path):
        project_dir = self.evaluated(runner, tmp_path)
        result = run(runner, "select", "--project", project_dir, "c9", expect=1)
        assert "unknown candidate" in result.stderr

    def test_iterate(self, runner, tmp_path):
        project_dir = self.evaluated(runner, tmp_path)
        run(runner, "select", "--project", project_dir, "c4")
        result = run(runner, "iterate", "--project", project_dir)
        assert "iteration 1 started (baseline: c4)" in result.output

    def test_export_to_stdout(self, runner, tmp_path):
        project_dir = self.evaluated(runner, tmp_path)
        result = run(runner, "export", "--project", project_dir)
        assert result.output.startswith("# Architecture workbench report: avp")
        assert "Ranking: c4 > c2 > c1 > c3" in result.output

    def test_export_to_file(self, runner, tmp_path):
        project_dir = self.evaluated(runner, tmp_path)
        out = tmp_path / "report.md"
        result = run(runner, "export", "--project", project_dir, "--out", str(out))
        assert f"report written to {out}" in result.output
        assert out.read_text().startswith("# Architecture workbench report")

    def test_full_run_exit_codes(self, runner, tmp_path):
        """The whole six-step flow, each command exiting zero."""
        project_dir = self.evaluated(runner, tmp_path)
        run(runner, "select", "--project", project_dir, "c4")
        run(runner, "iterate", "--project", project_dir)
        run(runner, "ingest", "--project", project_dir, str(REQUIREMENTS_DOC))
        run(runner, "gen-domain", "--project", project_dir)
        run(runner, "approve-domain", "--project", project_dir)
        run(runner, "gen-candidates", "--project", project_dir)
        result = run(runner, "evaluate", "--project", project_dir)
        assert "objective" in result.output  # iteration mode adds the blend
