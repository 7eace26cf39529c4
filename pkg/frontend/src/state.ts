/** UI state: slider values are the single source of truth, every displayed
 * ORTG comes from an API response, and stale responses are dropped via a
 * request generation counter. */

import type { GameplanResponse, Preset, PredictResponse, SensitivityEntry } from "./api.js";
import { FEATURE_NAMES, type Features } from "./features.js";
import type { Region } from "./region.js";

export interface DisplayedPrediction {
  ortg: number;
  outOfRegion: string[];
}

export interface OptimizeOutcome {
  predictedOrtg: number;
  activeConstraints: string[];
  verdicts: Record<string, "below" | "within" | "above">;
}

export type Listener = () => void;

export class UiStore {
  features: Features = {};
  locked = new Set<string>();
  selectedPreset: string | null = null;
  prediction: DisplayedPrediction | null = null;
  predictionStale = false;
  fieldError: { field: string; message: string } | null = null;
  connectionLost = false;
  optimizePending = false;
  lastOptimize: OptimizeOutcome | null = null;

  region: Region;
  presets: Preset[];
  sensitivity: SensitivityEntry[];

  private generation = 0;
  private appliedGeneration = 0;
  private listeners: Listener[] = [];

  constructor(region: Region, presets: Preset[], sensitivity: SensitivityEntry[]) {
    this.region = region;
    this.presets = presets;
    this.sensitivity = sensitivity;
    for (const name of FEATURE_NAMES) {
      this.features[name] = (region.lower[name] + region.upper[name]) / 2;
    }
  }

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  presetId(preset: Preset): string {
    return `${preset.season} ${preset.team}`;
  }

  setFeature(name: string, value: number): void {
    if (!(name in this.features)) throw new Error(`unknown feature ${name}`);
    this.features[name] = value;
    this.selectedPreset = null;
    this.predictionStale = true;
    this.notify();
  }

  applyPreset(preset: Preset): void {
    for (const name of FEATURE_NAMES) {
      this.features[name] = preset.features[name];
    }
    this.selectedPreset = this.presetId(preset);
    this.predictionStale = true;
    this.notify();
  }

  toggleLock(name: string): void {
    if (this.locked.has(name)) {
      this.locked.delete(name);
    } else {
      this.locked.add(name);
    }
    this.notify();
  }

  lockedValues(): Features {
    const out: Features = {};
    for (const name of this.locked) out[name] = this.features[name];
    return out;
  }

  /** Issue a new request generation; any response from an older generation
   * will be dropped. */
  nextGeneration(): number {
    this.generation += 1;
    return this.generation;
  }

  get currentGeneration(): number {
    return this.generation;
  }

  /** Returns true when the response was applied, false when dropped. */
  acceptPrediction(generation: number, response: PredictResponse): boolean {
    if (generation < this.generation || generation <= this.appliedGeneration) {
      return false; // superseded while in flight
    }
    this.appliedGeneration = generation;
    this.prediction = { ortg: response.ortg, outOfRegion: response.out_of_region };
    this.predictionStale = false;
    this.fieldError = null;
    this.connectionLost = false;
    this.notify();
    return true;
  }

  predictionRejected(generation: number, code: string, message: string, field?: string): void {
    if (generation < this.generation) return;
    this.fieldError = { field: field ?? "", message: `${code}: ${message}` };
    this.notify();
  }

  networkFailed(): void {
    // keep the last good value; the view greys it out
    this.connectionLost = true;
    this.notify();
  }

  applyGameplan(response: GameplanResponse): void {
    for (const name of FEATURE_NAMES) {
      this.features[name] = response.features[name];
    }
    const verdicts: OptimizeOutcome["verdicts"] = {};
    for (const [check, result] of Object.entries(response.hypothesis_checks.checks)) {
      verdicts[check] = result.verdict;
    }
    this.lastOptimize = {
      predictedOrtg: response.predicted_ortg,
      activeConstraints: response.active_constraints,
      verdicts,
    };
    this.selectedPreset = null;
    this.predictionStale = true;
    this.notify();
  }
}
