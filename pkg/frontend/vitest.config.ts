import { defineConfig } from "vitest/config";

// every engine call is a fresh python process, and the gradient and
// conformance suites make thousands of them
export default defineConfig({
  test: {
    testTimeout: 600_000,
    hookTimeout: 60_000,
  },
});
