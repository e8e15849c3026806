import { defineConfig } from 'vitest/config';

export default defineConfig({
  test: {
    // live.test.ts boots the real review service; give it room to start
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
