import { defineConfig } from 'vitest/config'

export default defineConfig({
  test: {
    include: ['test/**/*.test.ts'],
    // the learning-signal test trains a policy end to end against a live
    // environment server; everything else finishes in seconds
    testTimeout: 1_800_000,
    hookTimeout: 120_000,
    // tests spawn their own server subprocesses; keep them out of each
    // other's way on the single-CPU runner
    fileParallelism: false,
  },
})
