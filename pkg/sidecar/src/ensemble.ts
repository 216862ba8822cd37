/**
 * Permutation ensembling over the kernel smoother.
 *
 * Each member draws a feature permutation and per-feature scalings from its
 * own deterministic stream, applies both to context and queries alike, and
 * scores with the base model. Member outputs are averaged and renormalized.
 * The whole pipeline is a pure function of (request, seed).
 */

import { kernelPredict } from "./model.js";

/** Probability rows are allowed to drift off unit mass by at most this. */
export const PROBA_SUM_TOLERANCE = 1e-6;

const SCALE_LO = 0.5;
const SCALE_HI = 2.0;

/** mulberry32: tiny, seedable, good enough for permutation draws. */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Mix the request seed with a member index into a fresh 32-bit seed. */
function memberSeed(seed: number, member: number): number {
  let h = (seed ^ 0x9e3779b9) >>> 0;
  h = Math.imul(h ^ member, 0x85ebca6b) >>> 0;
  h = Math.imul(h ^ (h >>> 13), 0xc2b2ae35) >>> 0;
  return (h ^ (h >>> 16)) >>> 0;
}

function drawPermutation(rand: () => number, n: number): number[] {
  const perm = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    [perm[i], perm[j]] = [perm[j], perm[i]];
  }
  return perm;
}

function drawScales(rand: () => number, n: number): number[] {
  const logLo = Math.log(SCALE_LO);
  const logHi = Math.log(SCALE_HI);
  const scales = new Array<number>(n);
  for (let j = 0; j < n; j++) {
    scales[j] = Math.exp(logLo + rand() * (logHi - logLo));
  }
  return scales;
}

function transformRow(row: number[], perm: number[], scales: number[]): number[] {
  const out = new Array<number>(row.length);
  for (let j = 0; j < row.length; j++) {
    out[j] = row[perm[j]] * scales[j];
  }
  return out;
}

export interface EnsembleResult {
  proba: number[][];
  /** Largest |mass - 1| seen across rows before renormalization. */
  massDrift: number;
}

/**
 * Average the base model over `nPermutations` seeded feature permutations
 * and scalings, then renormalize each row back onto the simplex.
 */
export function permuteEnsemble(
  contextX: number[][],
  contextY: number[],
  queries: number[][],
  nClasses: number,
  nPermutations: number,
  seed: number,
): EnsembleResult {
  const nFeatures = queries[0].length;
  const sums = queries.map(() => new Array<number>(nClasses).fill(0));

  for (let m = 0; m < nPermutations; m++) {
    const rand = mulberry32(memberSeed(seed, m));
    const perm = drawPermutation(rand, nFeatures);
    const scales = drawScales(rand, nFeatures);
    const ctx = contextX.map((row) => transformRow(row, perm, scales));
    for (let q = 0; q < queries.length; q++) {
      const row = kernelPredict(ctx, contextY, transformRow(queries[q], perm, scales), nClasses);
      for (let c = 0; c < nClasses; c++) sums[q][c] += row[c];
    }
  }

  let massDrift = 0;
  const proba = sums.map((row) => {
    let mass = 0;
    for (const v of row) mass += v;
    mass /= nPermutations;
    massDrift = Math.max(massDrift, Math.abs(mass - 1));
    const denom = mass * nPermutations;
    return denom > 0 ? row.map((v) => v / denom) : row.map(() => 1 / nClasses);
  });
  return { proba, massDrift };
}
