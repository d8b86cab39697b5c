/** Number rendering. Objectives and the normalized distance are shown
 * verbatim from API fields; the only arithmetic is the display delta
 * between the two objectives the API returned. */

export function formatObjective(value: number | null): string {
  if (value === null) return "-";
  return String(value);
}

/** Signed difference between the two API objectives, e.g. "+15000". */
export function formatDelta(before: number | null, after: number | null): string {
  if (before === null || after === null) return "-";
  const delta = after - before;
  const sign = delta >= 0 ? "+" : "-";
  return sign + String(Math.abs(delta));
}

export function formatNged(value: number): string {
  return value.toFixed(3);
}

export function formatImpact(rating: number | null): string {
  return rating === null ? "unrated" : `${rating}/10`;
}

/** Gauge width in percent for the normalized distance (0..1 verbatim). */
export function ngedGaugePercent(value: number): number {
  return Math.max(0, Math.min(100, value * 100));
}
