import { describe, expect, it } from "vitest";

import type { GameplanResponse, PredictResponse } from "../src/api.js";
import { FEATURE_NAMES } from "../src/features.js";
import { deriveRegion } from "../src/region.js";
import { UiStore } from "../src/state.js";
import { makePreset } from "./helpers.js";

function makeStore() {
  const presets = [makePreset("2021-22", "AAA", 1), makePreset("2021-22", "BBB", 2)];
  return new UiStore(deriveRegion(presets), presets, []);
}

function predictResponse(ortg: number): PredictResponse {
  return { ortg, normalized: ortg / 200, out_of_region: [] };
}

describe("UiStore presets", () => {
  it("applying a preset copies all 48 features exactly", () => {
    const store = makeStore();
    const preset = store.presets[1];
    store.applyPreset(preset);
    for (const name of FEATURE_NAMES) {
      expect(store.features[name]).toBe(preset.features[name]);
    }
    expect(store.selectedPreset).toBe("2021-22 BBB");
  });

  it("moving any slider deselects the preset", () => {
    const store = makeStore();
    store.applyPreset(store.presets[0]);
    store.setFeature("iso_freq", store.features.iso_freq + 0.001);
    expect(store.selectedPreset).toBeNull();
  });

  it("rejects unknown feature names", () => {
    const store = makeStore();
    expect(() => store.setFeature("putbacks_freq", 0.1)).toThrow();
  });
});

describe("UiStore generation counter", () => {
  it("drops a response that was superseded while in flight", () => {
    const store = makeStore();
    const g1 = store.nextGeneration();
    const g2 = store.nextGeneration();
    expect(store.acceptPrediction(g2, predictResponse(111))).toBe(true);
    expect(store.acceptPrediction(g1, predictResponse(99))).toBe(false);
    expect(store.prediction?.ortg).toBe(111);
  });

  it("never applies an older generation after a newer one", () => {
    const store = makeStore();
    const g1 = store.nextGeneration();
    store.acceptPrediction(g1, predictResponse(100));
    const g2 = store.nextGeneration();
    const g3 = store.nextGeneration();
    expect(store.acceptPrediction(g3, predictResponse(103))).toBe(true);
    expect(store.acceptPrediction(g2, predictResponse(102))).toBe(false);
    expect(store.prediction?.ortg).toBe(103);
  });

  it("displayed value always originates from a response object", () => {
    const store = makeStore();
    expect(store.prediction).toBeNull(); // nothing displayed before a response
    const g = store.nextGeneration();
    store.acceptPrediction(g, predictResponse(117.25));
    expect(store.prediction?.ortg).toBe(117.25);
  });

  it("a network failure keeps the last good value", () => {
    const store = makeStore();
    store.acceptPrediction(store.nextGeneration(), predictResponse(108));
    store.networkFailed();
    expect(store.connectionLost).toBe(true);
    expect(store.prediction?.ortg).toBe(108);
  });

  it("a field error names the offending feature and keeps the value", () => {
    const store = makeStore();
    store.acceptPrediction(store.nextGeneration(), predictResponse(108));
    const g = store.nextGeneration();
    store.predictionRejected(g, "out_of_unit_interval", "iso_freq outside", "iso_freq");
    expect(store.fieldError?.field).toBe("iso_freq");
    expect(store.prediction?.ortg).toBe(108);
  });
});

describe("UiStore lock and optimize", () => {
  function gameplanResponse(store: UiStore): GameplanResponse {
    const features = { ...store.features };
    for (const name of FEATURE_NAMES) {
      if (!store.locked.has(name)) features[name] = store.region.lower[name];
    }
    return {
      predicted_ortg: 123.4,
      features,
      active_constraints: ["freq_sum"],
      locked: store.lockedValues(),
      hypothesis_checks: {
        checks: {
          isolation_frequency: { verdict: "within", value: 0.22, band: [0.2, 0.25] },
          spotup_quality: { verdict: "below", value: 0.2, band: [0.25, 0.28] },
          transition_frequency: { verdict: "above", value: 0.25, band: [0.17, 0.2] },
          pnr_combined_frequency: { verdict: "within", value: 0.15, band: [0.13, 0.17] },
        },
        within_count: 2,
      },
      region_fingerprint: "abc",
    };
  }

  it("locked sliders are unchanged by an optimize result", () => {
    const store = makeStore();
    store.toggleLock("iso_freq");
    store.toggleLock("spotup_fg_pct");
    const before = { ...store.lockedValues() };
    store.applyGameplan(gameplanResponse(store));
    expect(store.features.iso_freq).toBe(before.iso_freq);
    expect(store.features.spotup_fg_pct).toBe(before.spotup_fg_pct);
    // unlocked sliders took the response values
    expect(store.features.trans_freq).toBe(store.region.lower.trans_freq);
  });

  it("exposes the four hypothesis verdicts for the badges", () => {
    const store = makeStore();
    store.applyGameplan(gameplanResponse(store));
    expect(store.lastOptimize?.verdicts).toEqual({
      isolation_frequency: "within",
      spotup_quality: "below",
      transition_frequency: "above",
      pnr_combined_frequency: "within",
    });
    expect(store.lastOptimize?.predictedOrtg).toBe(123.4);
  });

  it("toggleLock round-trips", () => {
    const store = makeStore();
    store.toggleLock("cut_freq");
    expect(store.locked.has("cut_freq")).toBe(true);
    store.toggleLock("cut_freq");
    expect(store.locked.has("cut_freq")).toBe(false);
  });
});
