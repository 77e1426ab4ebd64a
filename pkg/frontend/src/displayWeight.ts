/** Font-scale factor for a usefulness score: 2**score maps -1/0/+1 to
 * 0.5/1.0/2.0 — low-scoring statements literally fade into small print. */
export function displayWeight(score: number): number {
  const clamped = Math.max(-1, Math.min(1, score));
  return Math.pow(2, clamped);
}
