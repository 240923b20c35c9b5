/**
 * Flat-array bridge into the watermark codec for Node-side pipelines.
 *
 * A handle binds a key and a latent geometry once; embed hands back the
 * watermarked latent as a contiguous Float32Array (row-major, reshapeable to
 * 4x64x64 at the default sizing) plus the public nonce, and detect accepts
 * any such array, e.g. one recovered by an external inversion step. All
 * computation happens in the codec CLI; this layer only moves bytes.
 *
 * Key material lives only in the handle; each CLI call materializes it as a
 * 0600 key file inside a private temp dir that is removed before returning.
 */

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { EXIT_NOT_DETECTED, EXIT_OK, runCli } from "./cli.js";
import { BridgeDataError } from "./errors.js";
import {
  DEFAULT_PARAMS,
  LatentParams,
  NONCE_BYTES,
  parseLatent,
  payloadBytes,
  serializeLatent,
} from "./smk1.js";

/** Detection report as emitted by the CLI (schema 1), field for field. */
export interface DetectionRecord {
  schema: number;
  statistic: number;
  threshold: number;
  decision: boolean;
  payload_hex: string;
  margins: number[];
  mode: "claimed" | "blind";
}

export interface EmbedResult {
  values: Float32Array;
  nonce: Uint8Array;
}

export function bytesToHex(bytes: Uint8Array): string {
  return Buffer.from(bytes).toString("hex");
}

export function hexToBytes(hex: string): Uint8Array {
  if (!/^([0-9a-fA-F]{2})*$/.test(hex)) {
    throw new BridgeDataError(`bad hex string: ${hex}`);
  }
  return Uint8Array.from(Buffer.from(hex, "hex"));
}

function paramsArg(p: LatentParams): string {
  return `D=${p.size},Q=${p.bins},b=${p.blockSize},k=${p.bitsPerGroup}`;
}

export class BridgeHandle {
  readonly params: LatentParams;
  private readonly keyHex: string;

  constructor(keyHex: string, params: Partial<LatentParams> = {}) {
    if (!/^[0-9a-f]{64}$/.test(keyHex.trim().toLowerCase())) {
      throw new BridgeDataError("key must be 64 hex chars (32 bytes)");
    }
    this.keyHex = keyHex.trim().toLowerCase();
    this.params = { ...DEFAULT_PARAMS, ...params };
    Object.freeze(this.params);
    Object.freeze(this);
  }

  /** Embed a payload; returns the watermarked latent and the nonce to store
   * alongside it. Omitting the nonce lets the codec draw a fresh one. */
  embed(payload: Uint8Array, nonce?: Uint8Array): EmbedResult {
    if (payload.length !== payloadBytes(this.params)) {
      throw new BridgeDataError(
        `payload must be ${payloadBytes(this.params)} bytes for this geometry, ` +
          `got ${payload.length}`,
      );
    }
    if (nonce !== undefined && nonce.length !== NONCE_BYTES) {
      throw new BridgeDataError(`nonce must be ${NONCE_BYTES} bytes`);
    }
    return this.withWorkdir((dir, keyFile) => {
      const outFile = join(dir, "marked.smk");
      const args = [
        "embed",
        "--key", keyFile,
        "--payload-hex", bytesToHex(payload),
        "--params", paramsArg(this.params),
        "--out", outFile,
      ];
      if (nonce !== undefined) {
        args.push("--nonce-hex", bytesToHex(nonce));
      }
      runCli(args);
      const parsed = parseLatent(readFileSync(outFile));
      return { values: parsed.values, nonce: parsed.nonce };
    });
  }

  /** Score a recovered latent; optionally verify a claimed payload. */
  detect(
    values: Float32Array,
    nonce: Uint8Array,
    claimedPayload?: Uint8Array,
    tau?: number,
  ): DetectionRecord {
    if (values.length !== this.params.size) {
      throw new BridgeDataError(
        `latent must hold ${this.params.size} values, got ${values.length}`,
      );
    }
    for (let i = 0; i < values.length; i++) {
      if (!Number.isFinite(values[i])) {
        throw new BridgeDataError(`non-finite value at index ${i}`);
      }
    }
    return this.withWorkdir((dir, keyFile) => {
      const inFile = join(dir, "query.smk");
      writeFileSync(inFile, serializeLatent(values, this.params, nonce));
      const args = ["detect", "--key", keyFile, "--in", inFile, "--json"];
      if (claimedPayload !== undefined) {
        args.push("--claimed-payload-hex", bytesToHex(claimedPayload));
      }
      if (tau !== undefined) {
        args.push("--tau", String(tau));
      }
      const res = runCli(args, [EXIT_OK, EXIT_NOT_DETECTED]);
      return JSON.parse(res.stdout) as DetectionRecord;
    });
  }

  private withWorkdir<T>(fn: (dir: string, keyFile: string) => T): T {
    const dir = mkdtempSync(join(tmpdir(), "structmark-bridge-"));
    try {
      const keyFile = join(dir, "id.key");
      writeFileSync(keyFile, this.keyHex + "\n", { mode: 0o600 });
      return fn(dir, keyFile);
    } finally {
      rmSync(dir, { recursive: true, force: true });
    }
  }
}
