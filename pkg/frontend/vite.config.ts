import { defineConfig } from 'vitest/config';

export default defineConfig({
  server: {
    // the inversion service; run `makeitso serve` alongside `npm run dev`
    proxy: { '/api': 'http://127.0.0.1:8000' },
  },
  preview: {
    proxy: { '/api': 'http://127.0.0.1:8000' },
  },
  test: {
    environment: 'jsdom',
  },
});
