#!/usr/bin/env node
/**
 * Entry point. TCP by default, `--stdio` for pipe mode.
 */

import { parseArgs } from "node:util";

import { ServerConfig, servePipe, serveTcp } from "./server.js";

const USAGE = `usage: icstream-sidecar [options]

  --stdio               serve one session over stdin/stdout
  --host HOST           bind address (default 127.0.0.1)
  --port PORT           port, 0 picks a free one (default 0)
  --max-context N       context ceiling advertised and enforced (default 1000)
  --max-batch N         query-batch ceiling (default 32)
  --permutations N      ensemble size when requests omit it (default 4)
  --help                print this and exit
`;

function positiveInt(name: string, raw: string, minimum: number): number {
  const value = Number(raw);
  if (!Number.isInteger(value) || value < minimum) {
    process.stderr.write(`${name} must be an integer >= ${minimum}\n`);
    process.exit(2);
  }
  return value;
}

export function main(argv: string[]): void {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        stdio: { type: "boolean", default: false },
        host: { type: "string", default: "127.0.0.1" },
        port: { type: "string", default: "0" },
        "max-context": { type: "string", default: "1000" },
        "max-batch": { type: "string", default: "32" },
        permutations: { type: "string", default: "4" },
        help: { type: "boolean", default: false },
      },
    });
  } catch (err) {
    process.stderr.write(`${err instanceof Error ? err.message : err}\n${USAGE}`);
    process.exit(2);
  }
  if (parsed.values.help) {
    process.stdout.write(USAGE);
    return;
  }

  const config: ServerConfig = {
    host: parsed.values.host as string,
    port: positiveInt("--port", parsed.values.port as string, 0),
    maxContext: positiveInt("--max-context", parsed.values["max-context"] as string, 1),
    maxBatch: positiveInt("--max-batch", parsed.values["max-batch"] as string, 1),
    defaultPermutations: positiveInt("--permutations", parsed.values.permutations as string, 1),
  };

  if (parsed.values.stdio) {
    void servePipe(config, process.stdin, process.stdout).then(() => process.exit(0));
  } else {
    void serveTcp(config);
  }
}

main(process.argv.slice(2));
