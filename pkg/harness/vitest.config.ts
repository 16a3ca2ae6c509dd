import { defineConfig } from "vitest/config";

// Offline builds + cc invocations dominate; individual cases stay well under
// these caps on a laptop-class machine but need far more than the defaults.
export default defineConfig({
  test: {
    testTimeout: 600_000,
    hookTimeout: 600_000,
  },
});
