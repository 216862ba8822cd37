/**
 * Per-connection request handling.
 *
 * A session turns one request line into exactly one reply line and never
 * throws on peer input: malformed bytes, bad ops, and limit violations all
 * come back as `ok: false` so the connection stays usable.
 */

import { MODEL_NAME } from "./model.js";
import { PROBA_SUM_TOLERANCE, permuteEnsemble } from "./ensemble.js";
import {
  PROTOCOL_VERSION,
  PredictLimits,
  classifyRecord,
  serialize,
} from "./protocol.js";

export interface SessionConfig {
  limits: PredictLimits;
  defaultPermutations: number;
  /** Receives operational anomalies; defaults to stderr. */
  log?: (message: string) => void;
}

export class Session {
  private lastId = 0;
  private readonly limits: PredictLimits;
  private readonly defaultPermutations: number;
  private readonly log: (message: string) => void;

  constructor(config: SessionConfig) {
    this.limits = config.limits;
    this.defaultPermutations = config.defaultPermutations;
    this.log = config.log ?? ((message) => process.stderr.write(message + "\n"));
  }

  handleLine(line: Buffer): string {
    let record: unknown;
    try {
      record = JSON.parse(line.toString("utf8"));
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      return serialize({ id: 0, ok: false, error: `parse: ${reason}` });
    }

    const outcome = classifyRecord(
      record,
      this.limits,
      this.lastId,
      this.defaultPermutations,
    );

    if (outcome.kind === "hello") {
      return serialize({
        ok: true,
        protocol: PROTOCOL_VERSION,
        max_context: this.limits.maxContext,
        max_batch: this.limits.maxBatch,
        model: MODEL_NAME,
        absent_classes: "zero",
      });
    }

    if (outcome.kind === "error") {
      if (outcome.id > this.lastId) this.lastId = outcome.id;
      return serialize({ id: outcome.id, ok: false, error: outcome.error });
    }

    const req = outcome.request;
    this.lastId = req.id;
    const started = performance.now();
    const result = permuteEnsemble(
      req.contextX,
      req.contextY,
      req.queries,
      req.nClasses,
      req.nPermutations,
      req.seed,
    );
    const elapsedMs = performance.now() - started;
    if (result.massDrift > PROBA_SUM_TOLERANCE) {
      this.log(
        `model anomaly: probability mass off by ${result.massDrift.toExponential(3)} on request ${req.id}`,
      );
    }
    return serialize({
      id: req.id,
      ok: true,
      proba: result.proba,
      model: MODEL_NAME,
      elapsed_ms: elapsedMs,
    });
  }
}
