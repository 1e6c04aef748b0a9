import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    // the session tests spawn the review server and wait for its banner
    testTimeout: 20000,
    hookTimeout: 20000,
  },
});
