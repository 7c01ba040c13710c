/** Display formatting. The console never recomputes statistics; it only
 * formats numbers taken verbatim from the latest server response. */

/** Percent with one decimal, e.g. 0.2364 -> "23.6%". */
export function pct(value: number): string {
  return `${(value * 100).toFixed(1)}%`;
}

/** Probabilities as printed in evidence tables. */
export function prob(value: number): string {
  return value.toFixed(5);
}

/** Log Bayes factors with a stable width. */
export function logBf(value: number): string {
  if (!isFinite(value)) return value > 0 ? "+inf" : "-inf";
  return value.toFixed(3);
}

/** Exact percent strings always summing to 100.0 +- one-decimal rounding. */
export function pctRow(values: number[]): string[] {
  return values.map(pct);
}
