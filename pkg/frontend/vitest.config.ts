import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // each suite boots a real session server
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
