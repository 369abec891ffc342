import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // the integration suite boots a local session service
    testTimeout: 60000,
    hookTimeout: 60000,
  },
});
