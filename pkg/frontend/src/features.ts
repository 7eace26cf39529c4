/** The canonical 48-feature taxonomy mirrored from the API: 8 playtypes x 6
 * metrics, playtype-major order. Feature names must match the server's
 * canonical list exactly. */

export interface Playtype {
  code: string;
  label: string;
}

export const PLAYTYPES: Playtype[] = [
  { code: "iso", label: "Isolation" },
  { code: "trans", label: "Transition" },
  { code: "prbh", label: "PnR Ball Handler" },
  { code: "prrm", label: "PnR Roll Man" },
  { code: "postup", label: "Post Up" },
  { code: "spotup", label: "Spot Up" },
  { code: "cut", label: "Cut" },
  { code: "offscr", label: "Off Screen" },
];

export const METRICS = [
  { code: "freq", label: "Frequency" },
  { code: "fg_pct", label: "FG%" },
  { code: "ft_freq", label: "FT Freq" },
  { code: "tov_freq", label: "TOV Freq" },
  { code: "and1_freq", label: "And-1 Freq" },
  { code: "score_freq", label: "Score Freq" },
] as const;

export const FEATURE_NAMES: string[] = PLAYTYPES.flatMap((p) =>
  METRICS.map((m) => `${p.code}_${m.code}`),
);

export const FREQ_NAMES: string[] = PLAYTYPES.map((p) => `${p.code}_freq`);

/** All 48 values, keyed by canonical feature name. */
export type Features = Record<string, number>;

export function freqSum(features: Features): number {
  let sum = 0;
  for (const name of FREQ_NAMES) sum += features[name] ?? 0;
  return sum;
}
