/**
 * Transport layer: TCP listener and stdio pipe.
 *
 * Each connection gets its own session and splitter and is served strictly
 * in request order. A line past the byte ceiling is the one unrecoverable
 * offense; the connection drops because framing can no longer be trusted.
 */

import * as net from "node:net";
import { Readable, Writable } from "node:stream";

import { LineSplitter } from "./protocol.js";
import { Session, SessionConfig } from "./session.js";

export interface ServerConfig {
  host: string;
  port: number;
  maxContext: number;
  maxBatch: number;
  defaultPermutations: number;
}

function sessionConfig(config: ServerConfig): SessionConfig {
  return {
    limits: { maxContext: config.maxContext, maxBatch: config.maxBatch },
    defaultPermutations: config.defaultPermutations,
  };
}

/** Start the TCP listener; resolves once the port is bound. */
export function serveTcp(config: ServerConfig): Promise<net.Server> {
  const server = net.createServer((socket) => {
    const session = new Session(sessionConfig(config));
    const splitter = new LineSplitter();
    socket.on("data", (chunk) => {
      let lines: Buffer[];
      try {
        lines = splitter.push(chunk);
      } catch {
        socket.destroy();
        return;
      }
      for (const line of lines) {
        if (line.length === 0) continue;
        socket.write(session.handleLine(line));
      }
    });
    socket.on("error", () => {
      socket.destroy();
    });
  });
  return new Promise((resolve, reject) => {
    server.once("error", reject);
    server.listen(config.port, config.host, () => {
      const address = server.address() as net.AddressInfo;
      process.stderr.write(`listening ${address.address}:${address.port}\n`);
      resolve(server);
    });
  });
}

/** Serve a single session over a byte stream pair; resolves on EOF. */
export function servePipe(
  config: ServerConfig,
  input: Readable,
  output: Writable,
): Promise<void> {
  const session = new Session(sessionConfig(config));
  const splitter = new LineSplitter();
  return new Promise((resolve) => {
    input.on("data", (chunk: Buffer) => {
      let lines: Buffer[];
      try {
        lines = splitter.push(chunk);
      } catch {
        input.removeAllListeners("data");
        resolve();
        return;
      }
      for (const line of lines) {
        if (line.length === 0) continue;
        output.write(session.handleLine(line));
      }
    });
    input.on("end", resolve);
    input.on("error", resolve);
  });
}
