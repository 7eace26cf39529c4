/** DOM layer: builds the slider panels, meters, badges, and charts, and
 * wires them to the store and API client. All prediction math happens on the
 * server; this file only displays response values. */

import { ApiClient, ApiError, type ModelInfo } from "./api.js";
import { Debouncer } from "./debounce.js";
import { FEATURE_NAMES, METRICS, PLAYTYPES, freqSum } from "./features.js";
import { ortg, pct } from "./format.js";
import { UiStore } from "./state.js";

const PREDICT_DEBOUNCE_MS = 150;

const BADGE_LABELS: Record<string, string> = {
  isolation_frequency: "Isolation 20-25%",
  spotup_quality: "Spot-up 25-28% @ 40%+ FG",
  transition_frequency: "Transition 17-20%",
  pnr_combined_frequency: "PnR combined ~15%",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  private debouncer = new Debouncer(PREDICT_DEBOUNCE_MS);
  private sliders = new Map<string, HTMLInputElement>();
  private readouts = new Map<string, HTMLElement>();
  private rows = new Map<string, HTMLElement>();

  constructor(
    private root: HTMLElement,
    private store: UiStore,
    private api: ApiClient,
    private model: ModelInfo,
  ) {}

  mount(): void {
    this.root.replaceChildren(
      this.header(),
      this.banner(),
      this.controls(),
      this.panels(),
      this.sensitivityChart(),
    );
    this.store.subscribe(() => this.render());
    this.render();
    this.requestPrediction();
  }

  /** Debounced predict: one request per slider-drag settle. */
  schedulePrediction(): void {
    this.debouncer.schedule(() => this.requestPrediction());
  }

  requestPrediction(): void {
    const generation = this.store.nextGeneration();
    this.api.predict({ ...this.store.features }).then(
      (response) => this.store.acceptPrediction(generation, response),
      (error) => {
        if (error instanceof ApiError) {
          this.store.predictionRejected(generation, error.code, error.message, error.field);
        } else {
          this.store.networkFailed();
        }
      },
    );
  }

  private header(): HTMLElement {
    const box = el("header", "masthead");
    const shape = this.model.shape ? ` [${this.model.shape.join(", ")}]` : "";
    box.append(
      el("h1", undefined, "ortg-lab gameplan explorer"),
      el("p", "modelinfo",
         `${this.model.kind}${shape} model, k=${this.model.k}, ` +
         `data ${this.model.dataset_fingerprint}`),
    );
    const ortgBox = el("div", "ortg-display");
    ortgBox.append(el("span", "ortg-label", "predicted ORTG"),
                   el("span", "ortg-value"), el("span", "ortg-flags"));
    box.append(ortgBox);
    return box;
  }

  private banner(): HTMLElement {
    const banner = el("div", "banner hidden");
    banner.append(el("span", "banner-text"));
    const retry = el("button", undefined, "retry");
    retry.addEventListener("click", () => this.requestPrediction());
    banner.append(retry);
    return banner;
  }

  private controls(): HTMLElement {
    const bar = el("div", "controls");

    const presetSelect = el("select", "preset-select");
    presetSelect.append(el("option", undefined, "— preset —"));
    for (const preset of this.store.presets) {
      const option = el("option", undefined,
                        `${this.store.presetId(preset)} (${ortg(preset.ortg)})`);
      option.value = this.store.presetId(preset);
      presetSelect.append(option);
    }
    presetSelect.addEventListener("change", () => {
      const preset = this.store.presets.find(
        (p) => this.store.presetId(p) === presetSelect.value,
      );
      if (preset) {
        this.store.applyPreset(preset);
        this.requestPrediction(); // presets apply immediately, no debounce
      }
    });

    const seedInput = el("input", "seed-input") as HTMLInputElement;
    seedInput.type = "number";
    seedInput.value = "0";

    const optimizeButton = el("button", "optimize", "lock & optimize");
    optimizeButton.addEventListener("click", async () => {
      this.store.optimizePending = true;
      optimizeButton.disabled = true;
      try {
        const response = await this.api.optimize(
          this.store.lockedValues(), Number(seedInput.value) || 0,
        );
        this.store.applyGameplan(response);
        this.requestPrediction();
      } catch (error) {
        if (error instanceof ApiError && error.code === "locked_conflict") {
          window.alert(`locked value conflicts with the region: ${error.message}`);
        } else if (error instanceof ApiError) {
          window.alert(`optimize failed: ${error.message}`);
        } else {
          this.store.networkFailed();
        }
      } finally {
        this.store.optimizePending = false;
        optimizeButton.disabled = false;
      }
    });

    const badges = el("div", "badges");
    bar.append(presetSelect, el("label", undefined, "seed"), seedInput,
               optimizeButton, badges);
    return bar;
  }

  private panels(): HTMLElement {
    const grid = el("div", "panel-grid");
    for (const playtype of PLAYTYPES) {
      const panel = el("section", "panel");
      panel.append(el("h2", undefined, playtype.label));
      if (playtype.code === PLAYTYPES[0].code) {
        // the frequency meter lives on the first panel; it tracks all eight
      }
      for (const metric of METRICS) {
        panel.append(this.sliderRow(`${playtype.code}_${metric.code}`, metric.label));
      }
      grid.append(panel);
    }
    const meterPanel = el("section", "panel meter-panel");
    meterPanel.append(el("h2", undefined, "Playtype frequency budget"));
    const meter = el("div", "freq-meter");
    meter.append(el("div", "freq-meter-fill"), el("div", "freq-meter-capline"));
    meterPanel.append(meter, el("p", "freq-meter-text"));
    grid.prepend(meterPanel);
    return grid;
  }

  private sliderRow(name: string, metricLabel: string): HTMLElement {
    const row = el("div", "slider-row");
    const lower = this.store.region.lower[name];
    const upper = this.store.region.upper[name];

    const lock = el("input") as HTMLInputElement;
    lock.type = "checkbox";
    lock.title = `lock ${name}`;
    lock.addEventListener("change", () => this.store.toggleLock(name));

    const slider = el("input", "slider") as HTMLInputElement;
    slider.type = "range";
    slider.min = String(lower);
    slider.max = String(upper);
    slider.step = "0.0001";
    slider.disabled = upper - lower <= 0;
    slider.addEventListener("input", () => {
      // readout updates on the same frame as the drag
      this.store.setFeature(name, Number(slider.value));
      this.schedulePrediction();
    });

    const label = el("span", "slider-label", metricLabel);
    label.title = `${name}: ${pct(lower)} to ${pct(upper)}`;
    const readout = el("span", "slider-readout");

    row.append(lock, label, slider, readout);
    this.sliders.set(name, slider);
    this.readouts.set(name, readout);
    this.rows.set(name, row);
    return row;
  }

  private sensitivityChart(): HTMLElement {
    const box = el("section", "panel sensitivity");
    box.append(el("h2", undefined, "Feature sensitivity (model gradient x spread)"));
    const maxScore = Math.max(
      ...this.store.sensitivity.map((entry) => Math.abs(entry.score)), 1e-12,
    );
    for (const entry of this.store.sensitivity.slice(0, 16)) {
      const row = el("div", "sense-row");
      const bar = el("div", `sense-bar ${entry.score < 0 ? "negative" : ""}`);
      bar.style.width = `${(Math.abs(entry.score) / maxScore) * 100}%`;
      row.append(el("span", "sense-name", entry.name), bar,
                 el("span", "sense-score", entry.score.toFixed(3)));
      box.append(row);
    }
    return box;
  }

  private render(): void {
    const store = this.store;
    for (const name of FEATURE_NAMES) {
      const slider = this.sliders.get(name)!;
      if (Number(slider.value) !== store.features[name]) {
        slider.value = String(store.features[name]);
      }
      this.readouts.get(name)!.textContent = pct(store.features[name]);
      const row = this.rows.get(name)!;
      row.classList.toggle("locked", store.locked.has(name));
      row.classList.toggle(
        "out-of-region",
        store.prediction?.outOfRegion.includes(name) ?? false,
      );
      row.classList.toggle("field-error", store.fieldError?.field === name);
    }

    const value = this.root.querySelector<HTMLElement>(".ortg-value")!;
    value.textContent = store.prediction ? ortg(store.prediction.ortg) : "…";
    value.classList.toggle("greyed", store.connectionLost || store.predictionStale);
    this.root.querySelector<HTMLElement>(".ortg-flags")!.textContent =
      store.prediction && store.prediction.outOfRegion.length > 0
        ? `outside observed range: ${store.prediction.outOfRegion.join(", ")}`
        : "";

    const banner = this.root.querySelector<HTMLElement>(".banner")!;
    banner.classList.toggle("hidden", !store.connectionLost && !store.fieldError);
    this.root.querySelector<HTMLElement>(".banner-text")!.textContent =
      store.connectionLost
        ? "server unreachable; showing the last good prediction"
        : store.fieldError
          ? store.fieldError.message
          : "";

    const sum = freqSum(store.features);
    const cap = store.region.freqSumCap;
    const fill = this.root.querySelector<HTMLElement>(".freq-meter-fill")!;
    fill.style.width = `${Math.min(100, sum * 100)}%`;
    fill.classList.toggle("over-cap", sum > cap + 1e-9);
    this.root.querySelector<HTMLElement>(".freq-meter-capline")!.style.left =
      `${cap * 100}%`;
    this.root.querySelector<HTMLElement>(".freq-meter-text")!.textContent =
      `${pct(sum)} of possessions on tracked playtypes (cap ${pct(cap)})`;

    const badges = this.root.querySelector<HTMLElement>(".badges")!;
    badges.replaceChildren();
    if (store.lastOptimize) {
      for (const [check, verdict] of Object.entries(store.lastOptimize.verdicts)) {
        badges.append(
          el("span", `badge badge-${verdict}`,
             `${BADGE_LABELS[check] ?? check}: ${verdict}`),
        );
      }
      badges.append(
        el("span", "badge badge-info",
           `optimum ${ortg(store.lastOptimize.predictedOrtg)}, ` +
           `${store.lastOptimize.activeConstraints.length} active constraints`),
      );
    }
  }
}
