import { describe, expect, it } from "vitest";

import { ApiClient, ApiRequestError, JobTimeout, pollJob } from "../src/api.js";
import type { FetchLike } from "../src/api.js";

interface RecordedCall {
	url: string;
	method: string;
	body: unknown;
}

function fakeFetch(
	responder: (url: string, init?: RequestInit) => { status: number; body: unknown },
): { fetch: FetchLike; calls: RecordedCall[] } {
	const calls: RecordedCall[] = [];
	const fetch: FetchLike = async (url, init) => {
		calls.push({
			url,
			method: init?.method ?? "GET",
			body: typeof init?.body === "string" ? JSON.parse(init.body) : undefined,
		});
		const { status, body } = responder(url, init);
		const text = typeof body === "string" ? body : JSON.stringify(body);
		return new Response(text, {
			status,
			headers: { "Content-Type": "application/json" },
		});
	};
	return { fetch, calls };
}

const SNAPSHOT = {
	project_id: "avp",
	phase: "Evaluated",
	iteration: 0,
	selected_candidate: null,
	settings: { lambda: 0.3, refinement_notes: [], weights: null },
	baseline: null,
	audit_length: 7,
	artifacts: [],
	jobs: [],
};

describe("ApiClient", () => {
	it("fetches state from GET /api/state", async () => {
		const { fetch, calls } = fakeFetch(() => ({ status: 200, body: SNAPSHOT }));
		const client = new ApiClient("http://host", fetch);
		const snapshot = await client.state();
		expect(snapshot.phase).toBe("Evaluated");
		expect(calls).toHaveLength(1);
		expect(calls[0]?.url).toBe("http://host/api/state");
		expect(calls[0]?.method).toBe("GET");
	});

	it("submits jobs with kind and payload", async () => {
		const { fetch, calls } = fakeFetch(() => ({
			status: 202,
			body: { job_id: "j1", status: "Pending" },
		}));
		const client = new ApiClient("", fetch);
		const submission = await client.submitJob("Refine", { instruction: "split X" });
		expect(submission.job_id).toBe("j1");
		expect(calls[0]?.url).toBe("/api/jobs");
		expect(calls[0]?.method).toBe("POST");
		expect(calls[0]?.body).toEqual({ kind: "Refine", payload: { instruction: "split X" } });
	});

	it("defaults the job payload to an empty object", async () => {
		const { fetch, calls } = fakeFetch(() => ({
			status: 202,
			body: { job_id: "j2", status: "Pending" },
		}));
		await new ApiClient("", fetch).submitJob("GenDomain");
		expect(calls[0]?.body).toEqual({ kind: "GenDomain", payload: {} });
	});

	it("posts exactly one select request with the candidate id", async () => {
		const { fetch, calls } = fakeFetch(() => ({ status: 200, body: SNAPSHOT }));
		await new ApiClient("", fetch).select("c4");
		const selects = calls.filter((c) => c.url === "/api/select");
		expect(selects).toHaveLength(1);
		expect(selects[0]?.method).toBe("POST");
		expect(selects[0]?.body).toEqual({ candidate_id: "c4" });
	});

	it("sends weights as the whole body and lambda wrapped in value", async () => {
		const withEvaluation = {
			...SNAPSHOT,
			evaluation: { weights: {}, candidates: [], order: [] },
		};
		const { fetch, calls } = fakeFetch(() => ({ status: 200, body: withEvaluation }));
		const client = new ApiClient("", fetch);
		await client.setWeights({ Performance: 2, Security: 1 });
		await client.setLambda(0.5);
		expect(calls[0]?.url).toBe("/api/weights");
		expect(calls[0]?.body).toEqual({ Performance: 2, Security: 1 });
		expect(calls[1]?.url).toBe("/api/lambda");
		expect(calls[1]?.body).toEqual({ value: 0.5 });
	});

	it("reads artifacts as text or json", async () => {
		const { fetch, calls } = fakeFetch((url) =>
			url.endsWith(".json")
				? { status: 200, body: { order: ["c1"] } }
				: { status: 200, body: "@startuml\nclass Vehicle\n@enduml" },
		);
		const client = new ApiClient("", fetch);
		const text = await client.artifactText("iterations/0/domain_model.puml");
		expect(text).toContain("class Vehicle");
		const json = await client.evaluation(0);
		expect(json.order).toEqual(["c1"]);
		expect(calls[1]?.url).toBe("/api/artifacts/iterations/0/evaluation.json");
	});

	it("raises ApiRequestError carrying the server error body", async () => {
		const { fetch } = fakeFetch(() => ({
			status: 409,
			body: { code: "Busy", message: "a job is currently mutating the project", detail: {} },
		}));
		const client = new ApiClient("", fetch);
		const failure = await client.iterate().catch((err: unknown) => err);
		expect(failure).toBeInstanceOf(ApiRequestError);
		if (failure instanceof ApiRequestError) {
			expect(failure.status).toBe(409);
			expect(failure.body.code).toBe("Busy");
			expect(failure.message).toContain("Busy");
		}
	});

	it("wraps non-json error bodies instead of throwing a parse error", async () => {
		const fetch: FetchLike = async () =>
			new Response("<html>gateway error</html>", { status: 502, statusText: "Bad Gateway" });
		const failure = await new ApiClient("", fetch).state().catch((err: unknown) => err);
		expect(failure).toBeInstanceOf(ApiRequestError);
		if (failure instanceof ApiRequestError) {
			expect(failure.body.code).toBe("InvalidResponse");
		}
	});
});

describe("pollJob", () => {
	function jobSequence(statuses: string[]): FetchLike {
		let index = 0;
		return async () => {
			const status = statuses[Math.min(index, statuses.length - 1)];
			index += 1;
			return new Response(
				JSON.stringify({
					job_id: "j1",
					kind: "GenDomain",
					status,
					result_ref: status === "Done" ? "iterations/0/domain_model.puml" : null,
					error: null,
					warnings: [],
				}),
				{ status: 200 },
			);
		};
	}

	it("polls until the job is done, sleeping between attempts", async () => {
		const sleeps: number[] = [];
		const client = new ApiClient("", jobSequence(["Pending", "Running", "Done"]));
		const job = await pollJob(client, "j1", 1000, async (ms) => {
			sleeps.push(ms);
		});
		expect(job.status).toBe("Done");
		expect(job.result_ref).toBe("iterations/0/domain_model.puml");
		expect(sleeps).toEqual([1000, 1000]);
	});

	it("returns failed jobs instead of spinning forever", async () => {
		const client = new ApiClient("", jobSequence(["Running", "Failed"]));
		const job = await pollJob(client, "j1", 1, async () => {});
		expect(job.status).toBe("Failed");
	});

	it("gives up after maxAttempts", async () => {
		const client = new ApiClient("", jobSequence(["Running"]));
		const failure = await pollJob(client, "j1", 1, async () => {}, 3).catch(
			(err: unknown) => err,
		);
		expect(failure).toBeInstanceOf(JobTimeout);
	});
});
