import { defineConfig } from "vite";

// the dev server proxies API calls to the shape server
export default defineConfig({
  base: "./",
  server: {
    proxy: {
      "/shapes": "http://127.0.0.1:7373",
    },
  },
});
