/// <reference types="vitest/config" />
import { defineConfig } from "vite";

export default defineConfig({
  build: {
    outDir: "dist",
    sourcemap: true,
  },
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    // the e2e suite builds a store and boots the scoring service
    testTimeout: 60_000,
    hookTimeout: 120_000,
  },
});
