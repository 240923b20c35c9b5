/**
 * Subprocess plumbing for the structmark CLI.
 *
 * The CLI is the bridge's only contact with the codec: no watermark logic is
 * reimplemented here. STRUCTMARK_PYTHON overrides the interpreter (default
 * "python3"); the CLI itself is invoked as `-m structmark`.
 */

import { spawnSync } from "node:child_process";

import { BridgeDataError, BridgeError, BridgeUsageError } from "./errors.js";

export const EXIT_OK = 0;
export const EXIT_NOT_DETECTED = 1;
export const EXIT_USAGE = 2;
export const EXIT_DATA = 3;

export interface CliResult {
  status: number;
  stdout: string;
}

export function runCli(args: string[], allowStatus: number[] = [EXIT_OK]): CliResult {
  const python = process.env.STRUCTMARK_PYTHON ?? "python3";
  const proc = spawnSync(python, ["-m", "structmark", ...args], {
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw new BridgeError(`failed to launch ${python}: ${proc.error.message}`);
  }
  const status = proc.status ?? -1;
  if (!allowStatus.includes(status)) {
    const detail = (proc.stderr || proc.stdout || "").trim();
    if (status === EXIT_USAGE) {
      throw new BridgeUsageError(detail || "CLI usage error");
    }
    if (status === EXIT_DATA) {
      throw new BridgeDataError(detail || "CLI data error");
    }
    throw new BridgeError(`CLI exited ${status}: ${detail}`);
  }
  return { status, stdout: proc.stdout };
}
