/**
 * Position-weighted kernel smoother used as the backing model.
 *
 * Class scores are Gaussian-kernel weighted votes over the context, with one
 * twist: each feature slot carries a decaying positional weight, so the same
 * values arranged in a different feature order produce a different distance.
 * That slot sensitivity is what makes averaging over feature permutations a
 * meaningful ensemble rather than a no-op.
 */

export const MODEL_NAME = "positional-kernel-smoother";

/** Geometric decay applied to successive feature slots. */
const SLOT_DECAY = 0.8;
const EPSILON = 1e-12;

function slotWeights(nFeatures: number): number[] {
  const weights = new Array<number>(nFeatures);
  for (let j = 0; j < nFeatures; j++) {
    weights[j] = Math.pow(SLOT_DECAY, j);
  }
  return weights;
}

function weightedSquaredDistance(a: number[], b: number[], w: number[]): number {
  let total = 0;
  for (let j = 0; j < a.length; j++) {
    const d = a[j] - b[j];
    total += w[j] * d * d;
  }
  return total;
}

/**
 * Score one query against the context and return per-class probabilities.
 *
 * Bandwidth adapts to the mean squared distance so the kernel stays
 * informative at any scale. Classes absent from the context get exactly
 * zero mass; if every kernel weight underflows, the vote falls back to
 * uniform over the classes that are present.
 */
export function kernelPredict(
  contextX: number[][],
  contextY: number[],
  query: number[],
  nClasses: number,
): number[] {
  const proba = new Array<number>(nClasses).fill(0);
  if (contextX.length === 0) {
    return proba.fill(1 / nClasses);
  }
  const w = slotWeights(query.length);

  const distances = new Array<number>(contextX.length);
  let meanSq = 0;
  for (let i = 0; i < contextX.length; i++) {
    distances[i] = weightedSquaredDistance(contextX[i], query, w);
    meanSq += distances[i];
  }
  meanSq /= contextX.length;
  const bandwidth = meanSq > EPSILON ? meanSq : 1;

  let total = 0;
  for (let i = 0; i < contextX.length; i++) {
    const k = Math.exp(-distances[i] / bandwidth);
    proba[contextY[i]] += k;
    total += k;
  }
  if (total <= EPSILON) {
    const seen = new Set(contextY);
    for (const label of seen) proba[label] = 1 / seen.size;
    return proba;
  }
  for (let c = 0; c < nClasses; c++) proba[c] /= total;
  return proba;
}
