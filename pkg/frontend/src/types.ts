// Payload shapes of the workbench HTTP API. The server is the single source
// of truth; nothing here is recomputed client-side.

export type Phase =
	| "Ingested"
	| "DomainGenerated"
	| "DomainApproved"
	| "CandidatesGenerated"
	| "Evaluated"
	| "Selected";

export type JobKind = "GenDomain" | "Refine" | "GenCandidates" | "Evaluate";

export type JobStatus = "Pending" | "Running" | "Done" | "Failed";

export interface ApiError {
	code: string;
	message: string;
	detail: Record<string, unknown>;
}

export interface RelationRef {
	source: string;
	target: string;
	kind: string;
	label: string | null;
}

export interface DomainDiff {
	added_concepts: string[];
	removed_concepts: string[];
	added_relations: RelationRef[];
	removed_relations: RelationRef[];
}

export interface JobInfo {
	job_id: string;
	kind: JobKind;
	status: JobStatus;
	result_ref: string | null;
	error: string | null;
	warnings: string[];
	// present only on finished domain-refinement jobs
	diff?: DomainDiff;
}

export interface ArtifactRef {
	path: string;
	digest: string;
}

export interface BaselineRef {
	iteration: number;
	candidate_id: string;
}

export interface ProjectSettings {
	lambda: number;
	refinement_notes: string[];
	weights: Record<string, number> | null;
}

export interface StateSnapshot {
	project_id: string;
	phase: Phase;
	iteration: number;
	selected_candidate: string | null;
	settings: ProjectSettings;
	baseline: BaselineRef | null;
	audit_length: number;
	artifacts: ArtifactRef[];
	jobs: JobInfo[];
}

export interface ComponentMetrics {
	ca: number | null;
	ce: number | null;
	instability: number | null;
	cohesion: number | null;
}

export interface CandidateMetrics {
	components: Record<string, ComponentMetrics>;
	cycle_count: number;
	max_scenario_hops: number;
	mean_scenario_hops: number;
	requirement_coverage: number;
}

export interface RiskEntry {
	attribute: string;
	rule: string;
	detail: string;
}

export interface CandidateEntry {
	id: string;
	metrics: CandidateMetrics;
	scores: Record<string, number>;
	risks: RiskEntry[];
	utility: number;
	// iteration mode only (a baseline exists)
	change_cost?: number;
	objective?: number;
	diff?: Record<string, unknown>;
}

export interface EvaluationPayload {
	weights: Record<string, number>;
	candidates: CandidateEntry[];
	order: string[];
}

export interface SnapshotWithEvaluation extends StateSnapshot {
	evaluation: EvaluationPayload;
}

export interface JobSubmission {
	job_id: string;
	status: JobStatus;
}
