import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    // the teleop round-trip test spawns the Python service and waits on it
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
