import type { Preset } from "../src/api.js";
import { FEATURE_NAMES, FREQ_NAMES, type Features } from "../src/features.js";

/** Deterministic fake preset: all 48 features present and in range. */
export function makePreset(season: string, team: string, scale = 1.0): Preset {
  const features: Features = {};
  for (let j = 0; j < FEATURE_NAMES.length; j++) {
    const name = FEATURE_NAMES[j];
    features[name] = FREQ_NAMES.includes(name)
      ? 0.05 + 0.005 * scale * (j % 5)
      : 0.2 + 0.01 * scale * (j % 7);
  }
  return { season, team, ortg: 100 + scale, features };
}
