/** Slider ranges come from the observed data: per-feature min/max across the
 * presets and the largest observed frequency sum, matching the server's own
 * feasible-region derivation at margin 0. */

import type { Preset } from "./api.js";
import { FEATURE_NAMES, FREQ_NAMES, freqSum, type Features } from "./features.js";

export interface Region {
  lower: Features;
  upper: Features;
  freqSumCap: number;
}

export function deriveRegion(presets: Preset[]): Region {
  if (presets.length === 0) {
    throw new Error("cannot derive slider ranges from zero presets");
  }
  const lower: Features = {};
  const upper: Features = {};
  for (const name of FEATURE_NAMES) {
    let lo = Infinity;
    let hi = -Infinity;
    for (const preset of presets) {
      const v = preset.features[name];
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    lower[name] = lo;
    upper[name] = hi;
  }
  let cap = 0;
  for (const preset of presets) {
    cap = Math.max(cap, freqSum(preset.features));
  }
  return { lower, upper, freqSumCap: cap };
}

export function outOfRange(region: Region, features: Features): string[] {
  const names: string[] = [];
  for (const name of FEATURE_NAMES) {
    const v = features[name];
    if (v < region.lower[name] - 1e-9 || v > region.upper[name] + 1e-9) {
      names.push(name);
    }
  }
  return names;
}

export function overFreqCap(region: Region, features: Features): boolean {
  return freqSum(features) > region.freqSumCap + 1e-9;
}

export { FREQ_NAMES };
