/** Bootstrap: load model metadata, presets, and sensitivity, then mount the
 * explorer. A failed startup shows a blocking banner with retry. */

import { ApiClient } from "./api.js";
import { deriveRegion } from "./region.js";
import { UiStore } from "./state.js";
import { App } from "./ui.js";

const api = new ApiClient();

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  root.textContent = "loading…";
  try {
    const [model, presets, sensitivity] = await Promise.all([
      api.model(),
      api.presets(),
      api.sensitivity(),
    ]);
    const store = new UiStore(deriveRegion(presets), presets, sensitivity.entries);
    new App(root, store, api, model).mount();
  } catch (error) {
    root.replaceChildren();
    const banner = document.createElement("div");
    banner.className = "banner blocking";
    banner.textContent = `cannot reach the ortg-lab API: ${String(error)} `;
    const retry = document.createElement("button");
    retry.textContent = "retry";
    retry.addEventListener("click", () => void boot());
    banner.append(retry);
    root.append(banner);
  }
}

void boot();
