// Single-page client: mirrors project state, submits the six-step verbs as
// jobs, and renders evaluation results. At most one mutating request is in
// flight at a time; while a job runs the forms are disabled and the job is
// polled at 1 s.

import { ApiClient, ApiRequestError, pollJob } from "./api.js";
import type { EvaluationPayload, JobKind, StateSnapshot } from "./types.js";
import {
	TABS,
	adrPaths,
	buildComparisonView,
	buildDiffView,
	buildDomainView,
	buildSelectionConfirmation,
	controlsForPhase,
	refinementTargetForPhase,
	validateInstruction,
	validateWeights,
	type ComparisonView,
	type DiffView,
	type Tab,
} from "./viewmodel.js";

const client = new ApiClient("");

interface ViewState {
	snapshot: StateSnapshot | null;
	selectedTab: Tab;
	pendingJob: string | null;
	lastDiff: DiffView | null;
	notice: string;
	error: string;
}

const state: ViewState = {
	snapshot: null,
	selectedTab: "Evaluation",
	pendingJob: null,
	lastDiff: null,
	notice: "",
	error: "",
};

function el<K extends keyof HTMLElementTagNameMap>(
	tag: K,
	className?: string,
	text?: string,
): HTMLElementTagNameMap[K] {
	const node = document.createElement(tag);
	if (className) node.className = className;
	if (text !== undefined) node.textContent = text;
	return node;
}

function describeError(err: unknown): string {
	if (err instanceof ApiRequestError) {
		if (err.status === 409 && err.body.code === "InvalidTransition") {
			return "Not available in this phase.";
		}
		if (err.status === 409) return "Busy: another operation is running.";
		return `${err.body.code}: ${err.body.message}`;
	}
	return String(err);
}

async function refresh(): Promise<void> {
	state.snapshot = await client.state();
	render();
}

async function runJob(kind: JobKind, payload?: Record<string, unknown>): Promise<void> {
	if (state.pendingJob) return;
	state.error = "";
	try {
		const submission = await client.submitJob(kind, payload);
		state.pendingJob = submission.job_id;
		render();
		const job = await pollJob(client, submission.job_id);
		state.pendingJob = null;
		if (job.status === "Failed") {
			state.error = job.error ?? "job failed";
		} else {
			state.notice = `${kind} finished.`;
			state.lastDiff = buildDiffView(job.diff) ?? state.lastDiff;
			if (kind !== "Refine") state.lastDiff = null;
		}
		await refresh();
	} catch (err) {
		state.pendingJob = null;
		state.error = describeError(err);
		render();
	}
}

async function mutate(action: () => Promise<unknown>): Promise<void> {
	state.error = "";
	try {
		await action();
		await refresh();
	} catch (err) {
		state.error = describeError(err);
		render();
	}
}

// ---------------------------------------------------------------------------
// panels

async function renderDomainPanel(panel: HTMLElement): Promise<void> {
	const snapshot = state.snapshot;
	if (!snapshot) return;
	const path = `iterations/${snapshot.iteration}/domain_model.puml`;
	let source: string;
	try {
		source = await client.artifactText(path);
	} catch {
		panel.append(el("p", "empty", "No domain model yet. Run Generate domain."));
		return;
	}
	const view = buildDomainView(source);
	if (view.kind === "diagram") {
		const list = el("ul", "concepts");
		for (const concept of view.concepts) {
			list.append(el("li", "concept", concept));
		}
		panel.append(el("h3", undefined, `Concepts (${view.concepts.length})`), list);
		const relations = el("ul", "relations");
		for (const relation of view.relations) {
			relations.append(el("li", "relation", relation));
		}
		panel.append(el("h3", undefined, `Relations (${view.relations.length})`), relations);
	}
	const pre = el("pre", "puml-source");
	pre.textContent = source;
	panel.append(el("h3", undefined, "Diagram text"), pre);

	if (state.lastDiff && !state.lastDiff.empty) {
		const diffBox = el("div", "diff-box");
		diffBox.append(el("h3", undefined, "Last refinement"));
		for (const concept of state.lastDiff.addedConcepts) {
			diffBox.append(el("div", "diff-added", `+ ${concept}`));
		}
		for (const concept of state.lastDiff.removedConcepts) {
			diffBox.append(el("div", "diff-removed", `- ${concept}`));
		}
		for (const relation of state.lastDiff.addedRelations) {
			diffBox.append(el("div", "diff-added", `+ ${relation}`));
		}
		for (const relation of state.lastDiff.removedRelations) {
			diffBox.append(el("div", "diff-removed", `- ${relation}`));
		}
		panel.append(diffBox);
	}
}

function renderComparison(panel: HTMLElement, view: ComparisonView): void {
	if (view.kind === "empty") {
		panel.append(el("p", "empty", view.message));
		return;
	}
	const table = el("table", "comparison");
	table.dataset.columnOrder = view.columns.map((c) => c.id).join(",");
	const head = el("tr");
	head.append(el("th", undefined, "Attribute"));
	for (const column of view.columns) {
		head.append(el("th", "candidate-col", column.id));
	}
	table.append(head);
	for (const [rowIndex, attribute] of view.attributes.entries()) {
		const row = el("tr");
		row.append(el("td", "attr-name", attribute));
		for (const column of view.columns) {
			const cell = column.cells[rowIndex];
			const td = el("td", "score", cell ? cell.score.toFixed(3) : "");
			if (cell && cell.risks.length > 0) {
				const badge = el("span", "risk-badge", String(cell.risks.length));
				badge.title = cell.risks.map((risk) => `${risk.rule}: ${risk.detail}`).join("\n");
				td.append(badge);
			}
			row.append(td);
		}
		table.append(row);
	}
	const utilityRow = el("tr", "utility-row");
	utilityRow.append(el("td", "attr-name", "Utility"));
	for (const column of view.columns) {
		utilityRow.append(el("td", "utility", column.utility.toFixed(3)));
	}
	table.append(utilityRow);
	if (view.iterationMode) {
		const costRow = el("tr", "cost-row");
		costRow.append(el("td", "attr-name", "Change cost"));
		const objectiveRow = el("tr", "objective-row");
		objectiveRow.append(el("td", "attr-name", "Objective"));
		for (const column of view.columns) {
			costRow.append(el("td", undefined, column.changeCost?.toFixed(2) ?? ""));
			objectiveRow.append(el("td", undefined, column.objective?.toFixed(3) ?? ""));
		}
		table.append(costRow, objectiveRow);
	}
	panel.append(table);
}

async function renderEvaluationPanel(panel: HTMLElement): Promise<void> {
	const snapshot = state.snapshot;
	if (!snapshot) return;
	let evaluation: EvaluationPayload | null = null;
	try {
		evaluation = await client.evaluation(snapshot.iteration);
	} catch {
		evaluation = null;
	}
	renderComparison(panel, buildComparisonView(evaluation));

	const controls = controlsForPhase(snapshot.phase);
	if (controls.adjustWeights && evaluation) {
		panel.append(renderWeightForm(evaluation));
	}
	if (controls.select && evaluation) {
		for (const candidateId of evaluation.order) {
			const button = el("button", "select-btn", `Select ${candidateId}`);
			button.disabled = state.pendingJob !== null;
			button.addEventListener("click", () => void confirmSelect(candidateId));
			panel.append(button);
		}
	}
}

function renderWeightForm(evaluation: EvaluationPayload): HTMLElement {
	const form = el("div", "weight-form");
	form.append(el("h3", undefined, "Attribute weights"));
	const inputs = new Map<string, HTMLInputElement>();
	for (const [attribute, weight] of Object.entries(evaluation.weights)) {
		const label = el("label", "weight-label", `${attribute} `);
		const input = el("input");
		input.type = "number";
		input.min = "0";
		input.step = "0.25";
		input.value = String(weight);
		inputs.set(attribute, input);
		label.append(input);
		form.append(label);
	}
	const apply = el("button", "apply-weights", "Re-rank");
	apply.addEventListener("click", () => {
		const weights: Record<string, number> = {};
		for (const [attribute, input] of inputs) {
			weights[attribute] = Number(input.value);
		}
		const problem = validateWeights(weights);
		if (problem) {
			state.error = problem;
			render();
			return;
		}
		void mutate(() => client.setWeights(weights));
	});
	form.append(apply);
	return form;
}

async function confirmSelect(candidateId: string): Promise<void> {
	const snapshot = state.snapshot;
	if (!snapshot) return;
	const paths = adrPaths(snapshot.artifacts, snapshot.iteration, candidateId);
	const documents = await Promise.all(paths.map((path) => client.artifactText(path)));
	const confirmation = buildSelectionConfirmation(candidateId, documents);
	const message = `${confirmation.prompt}\n\n${confirmation.adrTitles.join("\n")}`;
	if (!window.confirm(message)) return;
	await mutate(() => client.select(candidateId));
}

function renderRefineForm(container: HTMLElement): void {
	const snapshot = state.snapshot;
	if (!snapshot) return;
	const target = refinementTargetForPhase(snapshot.phase);
	if (!target) return;
	const form = el("div", "refine-form");
	form.append(el("h3", undefined, `Refine ${target.toLowerCase()}`));
	const input = el("textarea", "refine-input");
	input.placeholder = "Describe the change...";
	const submit = el("button", "refine-submit", "Submit refinement");
	submit.disabled = state.pendingJob !== null;
	submit.addEventListener("click", () => {
		const problem = validateInstruction(input.value);
		if (problem) {
			state.error = problem;
			render();
			return;
		}
		void runJob("Refine", { instruction: input.value });
	});
	form.append(input, submit);
	container.append(form);
}

async function renderTextArtifact(panel: HTMLElement, path: string, missing: string): Promise<void> {
	try {
		const text = await client.artifactText(path);
		const pre = el("pre", "artifact-text");
		pre.textContent = text;
		panel.append(pre);
	} catch {
		panel.append(el("p", "empty", missing));
	}
}

// ---------------------------------------------------------------------------
// top-level render

function render(): void {
	const root = document.getElementById("app");
	if (!root) return;
	root.textContent = "";
	const snapshot = state.snapshot;

	const header = el("header");
	header.append(el("h1", undefined, "Architecture workbench"));
	if (snapshot) {
		header.append(
			el(
				"div",
				"status-line",
				`${snapshot.project_id} | phase ${snapshot.phase} | iteration ${snapshot.iteration}`,
			),
		);
	}
	if (state.pendingJob) {
		header.append(el("div", "pending", `Job ${state.pendingJob} running...`));
	}
	if (state.error) header.append(el("div", "error", state.error));
	else if (state.notice) header.append(el("div", "notice", state.notice));
	root.append(header);

	if (!snapshot) {
		root.append(el("p", "empty", "Connecting..."));
		return;
	}

	const controls = controlsForPhase(snapshot.phase);
	const actionBar = el("div", "actions");
	const actions: [string, boolean, () => void][] = [
		["Generate domain", controls.genDomain, () => void runJob("GenDomain")],
		["Generate candidates", controls.genCandidates, () => void runJob("GenCandidates")],
		["Evaluate", controls.evaluate, () => void runJob("Evaluate")],
		["Start next iteration", controls.iterate, () => void mutate(() => client.iterate())],
	];
	for (const [labelText, enabled, handler] of actions) {
		const button = el("button", "action", labelText);
		button.disabled = !enabled || state.pendingJob !== null;
		button.addEventListener("click", handler);
		actionBar.append(button);
	}
	root.append(actionBar);

	const tabBar = el("nav", "tabs");
	for (const tab of TABS) {
		const button = el("button", tab === state.selectedTab ? "tab active" : "tab", tab);
		button.addEventListener("click", () => {
			state.selectedTab = tab;
			render();
		});
		tabBar.append(button);
	}
	root.append(tabBar);

	const panel = el("section", "panel");
	root.append(panel);
	const iteration = snapshot.iteration;
	switch (state.selectedTab) {
		case "Requirements": {
			const doc = snapshot.artifacts.find((a) => a.path.startsWith("requirements/"));
			if (doc) void renderTextArtifact(panel, doc.path, "No requirements ingested.");
			else panel.append(el("p", "empty", "No requirements ingested."));
			break;
		}
		case "Domain":
			void renderDomainPanel(panel);
			renderRefineForm(panel);
			break;
		case "Scenarios":
			void renderTextArtifact(
				panel,
				`iterations/${iteration}/scenarios.json`,
				"No scenarios yet.",
			);
			break;
		case "Candidates":
			void renderTextArtifact(
				panel,
				`iterations/${iteration}/contexts.json`,
				"No candidates yet.",
			);
			renderRefineForm(panel);
			break;
		case "Evaluation":
			void renderEvaluationPanel(panel);
			break;
	}
}

async function main(): Promise<void> {
	try {
		await refresh();
	} catch (err) {
		state.error = describeError(err);
		render();
	}
}

if (typeof document !== "undefined" && document.getElementById("app")) {
	void main();
}
