import { defineConfig } from "vitest/config";

export default defineConfig({
	test: {
		// the integration file spawns and drives a real backend process
		testTimeout: 90_000,
		hookTimeout: 90_000,
	},
});
