import { describe, expect, it } from "vitest";

import { mulberry32, permuteEnsemble } from "../dist/ensemble.js";

const CTX_X = [
  [0, 0, 1],
  [0.1, 0.3, 0.9],
  [3, 3, 0],
  [2.9, 3.2, -0.1],
  [3.1, 2.8, 0.2],
];
const CTX_Y = [0, 0, 1, 1, 1];
const QUERIES = [
  [0.2, 0.1, 1.1],
  [3.0, 3.0, 0.0],
];

describe("mulberry32", () => {
  it("is deterministic and stays in [0, 1)", () => {
    const a = mulberry32(42);
    const b = mulberry32(42);
    for (let i = 0; i < 1000; i++) {
      const v = a();
      expect(v).toBe(b());
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThan(1);
    }
  });

  it("separates streams by seed", () => {
    expect(mulberry32(1)()).not.toBe(mulberry32(2)());
  });
});

describe("permuteEnsemble", () => {
  it("is a pure function of the request and seed", () => {
    const first = permuteEnsemble(CTX_X, CTX_Y, QUERIES, 2, 4, 7);
    const second = permuteEnsemble(CTX_X, CTX_Y, QUERIES, 2, 4, 7);
    expect(second.proba).toEqual(first.proba);
  });

  it("changes with the seed", () => {
    const a = permuteEnsemble(CTX_X, CTX_Y, QUERIES, 2, 4, 7).proba;
    const b = permuteEnsemble(CTX_X, CTX_Y, QUERIES, 2, 4, 8).proba;
    expect(a).not.toEqual(b);
  });

  it("actually averages members", () => {
    const one = permuteEnsemble(CTX_X, CTX_Y, QUERIES, 2, 1, 7).proba;
    const many = permuteEnsemble(CTX_X, CTX_Y, QUERIES, 2, 8, 7).proba;
    expect(one).not.toEqual(many);
  });

  it("returns renormalized rows", () => {
    const { proba, massDrift } = permuteEnsemble(CTX_X, CTX_Y, QUERIES, 3, 4, 0);
    for (const row of proba) {
      expect(row).toHaveLength(3);
      expect(row.every((p) => p >= 0 && Number.isFinite(p))).toBe(true);
      expect(row.reduce((a, b) => a + b, 0)).toBeCloseTo(1, 9);
    }
    expect(massDrift).toBeLessThan(1e-9);
  });

  it("keeps absent classes at zero through averaging", () => {
    const { proba } = permuteEnsemble(CTX_X, CTX_Y, QUERIES, 5, 4, 3);
    for (const row of proba) {
      expect(row[2]).toBe(0);
      expect(row[3]).toBe(0);
      expect(row[4]).toBe(0);
    }
  });

  it("still classifies sensibly", () => {
    const { proba } = permuteEnsemble(CTX_X, CTX_Y, QUERIES, 2, 4, 11);
    expect(proba[0][0]).toBeGreaterThan(0.5);
    expect(proba[1][1]).toBeGreaterThan(0.5);
  });
});
