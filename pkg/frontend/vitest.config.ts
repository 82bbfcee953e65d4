import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    // the e2e suite boots the Python review service
    testTimeout: 30_000,
    hookTimeout: 60_000,
  },
});
