// Pure presenters turning server payloads into view structures. No scores,
// rankings, or diffs are computed here; columns follow the server's order
// field and diffs come from the refine job's result.

import type {
	CandidateEntry,
	DomainDiff,
	EvaluationPayload,
	Phase,
	RiskEntry,
} from "./types.js";

export type Tab =
	| "Requirements"
	| "Domain"
	| "Scenarios"
	| "Candidates"
	| "Evaluation";

export const TABS: readonly Tab[] = [
	"Requirements",
	"Domain",
	"Scenarios",
	"Candidates",
	"Evaluation",
];

// ---------------------------------------------------------------------------
// comparison table

export interface ComparisonCell {
	attribute: string;
	score: number;
	risks: RiskEntry[];
}

export interface ComparisonColumn {
	id: string;
	utility: number;
	changeCost: number | null;
	objective: number | null;
	riskTotal: number;
	cells: ComparisonCell[];
}

export interface ComparisonTable {
	kind: "table";
	attributes: string[];
	columns: ComparisonColumn[];
	iterationMode: boolean;
}

export interface EmptyState {
	kind: "empty";
	message: string;
}

export type ComparisonView = ComparisonTable | EmptyState;

function column(entry: CandidateEntry, attributes: string[]): ComparisonColumn {
	return {
		id: entry.id,
		utility: entry.utility,
		changeCost: entry.change_cost ?? null,
		objective: entry.objective ?? null,
		riskTotal: entry.risks.length,
		cells: attributes.map((attribute) => ({
			attribute,
			score: entry.scores[attribute] ?? 0,
			risks: entry.risks.filter((risk) => risk.attribute === attribute),
		})),
	};
}

export function buildComparisonView(
	evaluation: EvaluationPayload | null | undefined,
): ComparisonView {
	if (!evaluation || evaluation.candidates.length === 0) {
		return { kind: "empty", message: "No evaluation yet. Run Evaluate first." };
	}
	// row order mirrors the server's weight serialization, column order the
	// server's ranking; neither is re-sorted locally
	const attributes = Object.keys(evaluation.weights);
	const byId = new Map(evaluation.candidates.map((c) => [c.id, c]));
	const columns: ComparisonColumn[] = [];
	for (const id of evaluation.order) {
		const entry = byId.get(id);
		if (entry) columns.push(column(entry, attributes));
	}
	return {
		kind: "table",
		attributes,
		columns,
		iterationMode: evaluation.candidates.some((c) => c.objective !== undefined),
	};
}

// ---------------------------------------------------------------------------
// domain model view

export interface DomainView {
	// "diagram" when the text parsed as a class diagram, "text" as fallback;
	// the source is always carried so a render failure never hides the model
	kind: "diagram" | "text";
	concepts: string[];
	relations: string[];
	source: string;
}

const CLASS_LINE = /^\s*class\s+([A-Za-z_][A-Za-z0-9_]*)/;
const EDGE_LINE =
	/^\s*([A-Za-z_][A-Za-z0-9_]*)\s+(--|\.\.|<\|--|--\|>|o--|--o|\*--|--\*)\s+([A-Za-z_][A-Za-z0-9_]*)\s*(?::\s*(.+?)\s*)?$/;

export function buildDomainView(source: string): DomainView {
	const concepts: string[] = [];
	const relations: string[] = [];
	if (source.includes("@startuml")) {
		for (const line of source.split("\n")) {
			const cls = CLASS_LINE.exec(line);
			if (cls?.[1]) {
				concepts.push(cls[1]);
				continue;
			}
			const edge = EDGE_LINE.exec(line);
			if (edge) {
				const label = edge[4] ? ` : ${edge[4]}` : "";
				relations.push(`${edge[1]} ${edge[2]} ${edge[3]}${label}`);
			}
		}
	}
	if (concepts.length === 0) {
		return { kind: "text", concepts: [], relations: [], source };
	}
	return { kind: "diagram", concepts, relations, source };
}

// ---------------------------------------------------------------------------
// refinement

export function validateInstruction(text: string): string | null {
	if (text.trim().length === 0) return "Instruction must not be empty.";
	return null;
}

export interface DiffView {
	addedConcepts: string[];
	removedConcepts: string[];
	addedRelations: string[];
	removedRelations: string[];
	empty: boolean;
}

function relationLine(rel: {
	source: string;
	target: string;
	kind: string;
	label: string | null;
}): string {
	const label = rel.label ? ` "${rel.label}"` : "";
	return `${rel.source} -> ${rel.target} (${rel.kind}${label})`;
}

export function buildDiffView(diff: DomainDiff | undefined | null): DiffView | null {
	if (!diff) return null;
	const view = {
		addedConcepts: [...diff.added_concepts],
		removedConcepts: [...diff.removed_concepts],
		addedRelations: diff.added_relations.map(relationLine),
		removedRelations: diff.removed_relations.map(relationLine),
	};
	const empty =
		view.addedConcepts.length === 0 &&
		view.removedConcepts.length === 0 &&
		view.addedRelations.length === 0 &&
		view.removedRelations.length === 0;
	return { ...view, empty };
}

// ---------------------------------------------------------------------------
// phase-dependent controls

export interface ControlSet {
	genDomain: boolean;
	refineDomain: boolean;
	genCandidates: boolean;
	refineCandidates: boolean;
	evaluate: boolean;
	adjustWeights: boolean;
	select: boolean;
	iterate: boolean;
}

const NO_CONTROLS: ControlSet = {
	genDomain: false,
	refineDomain: false,
	genCandidates: false,
	refineCandidates: false,
	evaluate: false,
	adjustWeights: false,
	select: false,
	iterate: false,
};

/** Controls whose transition would be illegal in the phase are disabled. */
export function controlsForPhase(phase: Phase): ControlSet {
	switch (phase) {
		case "Ingested":
			return { ...NO_CONTROLS, genDomain: true };
		case "DomainGenerated":
			// generating candidates from here implies approval server-side
			return { ...NO_CONTROLS, refineDomain: true, genCandidates: true };
		case "DomainApproved":
			return { ...NO_CONTROLS, genCandidates: true };
		case "CandidatesGenerated":
			return {
				...NO_CONTROLS,
				genCandidates: true,
				refineCandidates: true,
				evaluate: true,
			};
		case "Evaluated":
			return { ...NO_CONTROLS, evaluate: true, adjustWeights: true, select: true };
		case "Selected":
			return { ...NO_CONTROLS, iterate: true };
	}
}

export function refinementTargetForPhase(
	phase: Phase,
): "Domain" | "Candidates" | null {
	if (phase === "DomainGenerated") return "Domain";
	if (phase === "CandidatesGenerated") return "Candidates";
	return null;
}

// ---------------------------------------------------------------------------
// weights

export function validateWeights(weights: Record<string, number>): string | null {
	const values = Object.values(weights);
	if (values.length === 0) return "At least one weight is required.";
	if (values.some((value) => value < 0 || !Number.isFinite(value))) {
		return "Weights must be non-negative numbers.";
	}
	if (!values.some((value) => value > 0)) {
		return "At least one weight must be positive.";
	}
	return null;
}

// ---------------------------------------------------------------------------
// selection confirmation

export interface SelectionConfirmation {
	candidateId: string;
	adrTitles: string[];
	prompt: string;
}

const HEADING = /^#\s+(.+?)\s*$/m;

/** The confirmation dialog lists the candidate's decision-record titles. */
export function buildSelectionConfirmation(
	candidateId: string,
	adrDocuments: string[],
): SelectionConfirmation {
	const adrTitles = adrDocuments.map((doc, index) => {
		const match = HEADING.exec(doc);
		return match?.[1] ?? `decision record ${index + 1}`;
	});
	return {
		candidateId,
		adrTitles,
		prompt:
			`Select ${candidateId} as the final architecture? ` +
			`Its ${adrTitles.length} decision record(s) will be marked accepted.`,
	};
}

/** Artifact paths of a candidate's decision records, in record order. */
export function adrPaths(
	artifacts: { path: string }[],
	iteration: number,
	candidateId: string,
): string[] {
	const prefix = `iterations/${iteration}/candidates/${candidateId}/adr/`;
	return artifacts
		.map((a) => a.path)
		.filter((path) => path.startsWith(prefix) && path.endsWith(".md"))
		.sort();
}
