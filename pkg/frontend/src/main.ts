/** Browser entry point: mount the app on #app against the same-origin API. */

import { createApp } from "./app.js";

function mount(): void {
  const root = document.querySelector<HTMLElement>("#app");
  if (root === null) {
    throw new Error("missing #app mount point");
  }
  createApp(root);
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", mount);
} else {
  mount();
}
