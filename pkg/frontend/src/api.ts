// Thin typed wrapper over the workbench REST endpoints. One method per
// documented endpoint, nothing else; errors surface as ApiRequestError with
// the server's {code, message, detail} body attached.

import type {
	ApiError,
	EvaluationPayload,
	JobInfo,
	JobKind,
	JobSubmission,
	SnapshotWithEvaluation,
	StateSnapshot,
} from "./types.js";

export type FetchLike = (
	input: string,
	init?: RequestInit,
) => Promise<Response>;

export class ApiRequestError extends Error {
	constructor(
		public readonly status: number,
		public readonly body: ApiError,
	) {
		super(`${body.code}: ${body.message}`);
		this.name = "ApiRequestError";
	}
}

async function toError(response: Response): Promise<ApiRequestError> {
	let body: ApiError;
	try {
		body = (await response.json()) as ApiError;
	} catch {
		body = { code: "InvalidResponse", message: response.statusText, detail: {} };
	}
	return new ApiRequestError(response.status, body);
}

export class ApiClient {
	private readonly fetchImpl: FetchLike;

	constructor(
		public readonly baseUrl: string = "",
		fetchImpl?: FetchLike,
	) {
		// bind explicitly: an unbound global fetch throws "Illegal invocation"
		this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
	}

	private async request<T>(
		method: string,
		path: string,
		body?: unknown,
	): Promise<T> {
		const init: RequestInit = { method, headers: { Accept: "application/json" } };
		if (body !== undefined) {
			init.headers = { ...init.headers, "Content-Type": "application/json" };
			init.body = JSON.stringify(body);
		}
		const response = await this.fetchImpl(this.baseUrl + path, init);
		if (!response.ok) throw await toError(response);
		return (await response.json()) as T;
	}

	state(): Promise<StateSnapshot> {
		return this.request("GET", "/api/state");
	}

	submitJob(
		kind: JobKind,
		payload?: Record<string, unknown>,
	): Promise<JobSubmission> {
		return this.request("POST", "/api/jobs", { kind, payload: payload ?? {} });
	}

	job(jobId: string): Promise<JobInfo> {
		return this.request("GET", `/api/jobs/${jobId}`);
	}

	async artifactText(path: string): Promise<string> {
		const response = await this.fetchImpl(`${this.baseUrl}/api/artifacts/${path}`);
		if (!response.ok) throw await toError(response);
		return response.text();
	}

	async artifactJson<T>(path: string): Promise<T> {
		const response = await this.fetchImpl(`${this.baseUrl}/api/artifacts/${path}`);
		if (!response.ok) throw await toError(response);
		return (await response.json()) as T;
	}

	evaluation(iteration: number): Promise<EvaluationPayload> {
		return this.artifactJson(`iterations/${iteration}/evaluation.json`);
	}

	select(candidateId: string): Promise<StateSnapshot> {
		return this.request("POST", "/api/select", { candidate_id: candidateId });
	}

	iterate(): Promise<StateSnapshot> {
		return this.request("POST", "/api/iterate");
	}

	setWeights(weights: Record<string, number>): Promise<SnapshotWithEvaluation> {
		return this.request("POST", "/api/weights", weights);
	}

	setLambda(value: number): Promise<SnapshotWithEvaluation> {
		return this.request("POST", "/api/lambda", { value });
	}
}

export type SleepFn = (ms: number) => Promise<void>;

const defaultSleep: SleepFn = (ms) =>
	new Promise((resolve) => setTimeout(resolve, ms));

export class JobTimeout extends Error {
	constructor(jobId: string, attempts: number) {
		super(`job ${jobId} still pending after ${attempts} polls`);
		this.name = "JobTimeout";
	}
}

/** Poll one job until it reaches Done or Failed; 1 s cadence by default. */
export async function pollJob(
	client: ApiClient,
	jobId: string,
	intervalMs = 1000,
	sleep: SleepFn = defaultSleep,
	maxAttempts = 600,
): Promise<JobInfo> {
	for (let attempt = 0; attempt < maxAttempts; attempt++) {
		const info = await client.job(jobId);
		if (info.status === "Done" || info.status === "Failed") return info;
		await sleep(intervalMs);
	}
	throw new JobTimeout(jobId, maxAttempts);
}
