/** Display formatting: state stays in fractions, labels show percentages. */

export function pct(fraction: number): string {
  return `${(fraction * 100).toFixed(1)}%`;
}

export function ortg(points: number): string {
  return points.toFixed(1);
}
