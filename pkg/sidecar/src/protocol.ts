/**
 * Line-framed JSON predict protocol, version 1.
 *
 * One JSON object per UTF-8 line in both directions. Unknown fields are
 * ignored and field order never matters, so either side can extend the
 * protocol without breaking the other. Request ids must be integers that
 * strictly increase within a connection.
 */

export const PROTOCOL_VERSION = 1;
export const OP_HELLO = "hello";
export const OP_PREDICT = "predict";

/** Hard per-record ceiling so a corrupt peer cannot balloon memory. */
export const MAX_LINE_BYTES = 64 * 1024 * 1024;

export interface PredictLimits {
  maxContext: number;
  maxBatch: number;
}

/** A predict request after structural validation. */
export interface PredictRequest {
  id: number;
  nFeatures: number;
  nClasses: number;
  contextX: number[][];
  contextY: number[];
  queries: number[][];
  nPermutations: number;
  seed: number;
}

export type ParseOutcome =
  | { kind: "hello" }
  | { kind: "predict"; request: PredictRequest }
  | { kind: "error"; id: number; error: string };

export function serialize(record: unknown): string {
  return JSON.stringify(record) + "\n";
}

function fail(id: unknown, error: string): ParseOutcome {
  return { kind: "error", id: typeof id === "number" ? id : 0, error };
}

function isFeatureMatrix(rows: unknown, width: number): rows is number[][] {
  return (
    Array.isArray(rows) &&
    rows.every(
      (row) =>
        Array.isArray(row) &&
        row.length === width &&
        row.every((v) => typeof v === "number"),
    )
  );
}

/**
 * Classify one decoded record against the advertised limits.
 *
 * `lastId` is the highest id already served on this connection; the caller
 * bumps it only when a predict request is accepted. Every defect maps to an
 * `error` outcome so the connection survives any malformed request.
 */
export function classifyRecord(
  record: unknown,
  limits: PredictLimits,
  lastId: number,
  defaultPermutations: number,
): ParseOutcome {
  if (typeof record !== "object" || record === null || Array.isArray(record)) {
    return fail(0, "expected a JSON object");
  }
  const r = record as Record<string, unknown>;
  if (r.op === OP_HELLO) {
    return { kind: "hello" };
  }
  if (r.op !== OP_PREDICT) {
    return fail(r.id, `unknown op ${JSON.stringify(r.op ?? null)}`);
  }

  const id = r.id;
  if (typeof id !== "number" || !Number.isSafeInteger(id) || id <= lastId) {
    return fail(id, `id must be an integer above ${lastId}`);
  }

  const schema = r.schema;
  if (typeof schema !== "object" || schema === null) {
    return fail(id, "missing schema");
  }
  const nFeatures = (schema as Record<string, unknown>).n_features;
  const nClasses = (schema as Record<string, unknown>).n_classes;
  if (!Number.isInteger(nFeatures) || (nFeatures as number) < 1) {
    return fail(id, "schema.n_features must be a positive integer");
  }
  if (!Number.isInteger(nClasses) || (nClasses as number) < 1) {
    return fail(id, "schema.n_classes must be a positive integer");
  }

  const context = r.context;
  if (typeof context !== "object" || context === null) {
    return fail(id, "missing context");
  }
  const ctxX = (context as Record<string, unknown>).x;
  const ctxY = (context as Record<string, unknown>).y;
  if (!Array.isArray(ctxX) || !Array.isArray(ctxY)) {
    return fail(id, "context.x and context.y must be lists");
  }
  if (ctxX.length !== ctxY.length) {
    return fail(id, "context.x and context.y lengths differ");
  }
  if (ctxX.length > limits.maxContext) {
    return fail(
      id,
      `context too large: ${ctxX.length} exceeds max_context ${limits.maxContext}`,
    );
  }

  const queries = r.queries;
  if (!Array.isArray(queries) || queries.length === 0) {
    return fail(id, "queries must be a non-empty list");
  }
  if (queries.length > limits.maxBatch) {
    return fail(
      id,
      `batch of ${queries.length} exceeds max_batch ${limits.maxBatch}`,
    );
  }

  if (!isFeatureMatrix(ctxX, nFeatures as number) || !isFeatureMatrix(queries, nFeatures as number)) {
    return fail(id, "feature row does not match schema.n_features");
  }
  if (
    !ctxY.every(
      (y) => Number.isInteger(y) && (y as number) >= 0 && (y as number) < (nClasses as number),
    )
  ) {
    return fail(id, "context label outside schema.n_classes");
  }

  let nPermutations = defaultPermutations;
  if (r.n_permutations !== undefined) {
    if (!Number.isInteger(r.n_permutations) || (r.n_permutations as number) < 1) {
      return fail(id, "n_permutations must be a positive integer");
    }
    nPermutations = r.n_permutations as number;
  }
  let seed = 0;
  if (r.seed !== undefined) {
    if (!Number.isSafeInteger(r.seed) || (r.seed as number) < 0) {
      return fail(id, "seed must be a non-negative integer");
    }
    seed = r.seed as number;
  }

  return {
    kind: "predict",
    request: {
      id,
      nFeatures: nFeatures as number,
      nClasses: nClasses as number,
      contextX: ctxX as number[][],
      contextY: ctxY.map((y) => y as number),
      queries: queries as number[][],
      nPermutations,
      seed,
    },
  };
}

/**
 * Incremental newline splitter with the per-record byte ceiling.
 *
 * Feed raw chunks; complete lines come back in arrival order. A line past
 * the ceiling throws, and the owning connection is expected to drop.
 */
export class LineSplitter {
  private pending: Buffer[] = [];
  private pendingBytes = 0;

  push(chunk: Buffer): Buffer[] {
    const lines: Buffer[] = [];
    let start = 0;
    for (let i = 0; i < chunk.length; i++) {
      if (chunk[i] !== 0x0a) continue;
      const piece = chunk.subarray(start, i);
      start = i + 1;
      if (this.pendingBytes + piece.length > MAX_LINE_BYTES) {
        throw new Error("record exceeds the line-length ceiling");
      }
      if (this.pending.length > 0) {
        this.pending.push(piece);
        lines.push(Buffer.concat(this.pending));
        this.pending = [];
        this.pendingBytes = 0;
      } else {
        lines.push(piece);
      }
    }
    if (start < chunk.length) {
      const rest = chunk.subarray(start);
      this.pendingBytes += rest.length;
      if (this.pendingBytes > MAX_LINE_BYTES) {
        throw new Error("record exceeds the line-length ceiling");
      }
      this.pending.push(rest);
    }
    return lines;
  }
}
