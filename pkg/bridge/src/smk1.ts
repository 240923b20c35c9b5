/**
 * SMK1 latent container: magic "SMK1", four little-endian u32 fields
 * (element count, bins, block size, bits per group), a 16-byte public
 * nonce, then the elements as little-endian float32.
 */

import { BridgeDataError } from "./errors.js";

export const MAGIC = "SMK1";
export const NONCE_BYTES = 16;
const HEADER_BYTES = 4 + 4 * 4;

export interface LatentParams {
  /** flat element count (D); default geometry is 4*64*64 = 16384 */
  size: number;
  /** magnitude-quantile bins (Q) */
  bins: number;
  /** elements per block (b) */
  blockSize: number;
  /** payload bits carried per group (k) */
  bitsPerGroup: number;
}

export const DEFAULT_PARAMS: LatentParams = {
  size: 16384,
  bins: 4,
  blockSize: 64,
  bitsPerGroup: 4,
};

export function numGroups(p: LatentParams): number {
  return p.size / p.bins / p.blockSize;
}

export function payloadBits(p: LatentParams): number {
  return numGroups(p) * p.bitsPerGroup;
}

export function payloadBytes(p: LatentParams): number {
  return Math.ceil(payloadBits(p) / 8);
}

export interface ParsedLatent {
  params: LatentParams;
  nonce: Uint8Array;
  values: Float32Array;
}

/** Decode a container. The float payload is copied once into an aligned
 * buffer (Node pools small Buffers at arbitrary offsets). */
export function parseLatent(blob: Buffer): ParsedLatent {
  if (blob.length < HEADER_BYTES + NONCE_BYTES) {
    throw new BridgeDataError(`truncated latent container (${blob.length} bytes)`);
  }
  if (blob.toString("ascii", 0, 4) !== MAGIC) {
    throw new BridgeDataError(`bad magic, expected ${MAGIC}`);
  }
  const params: LatentParams = {
    size: blob.readUInt32LE(4),
    bins: blob.readUInt32LE(8),
    blockSize: blob.readUInt32LE(12),
    bitsPerGroup: blob.readUInt32LE(16),
  };
  const nonce = Uint8Array.from(blob.subarray(HEADER_BYTES, HEADER_BYTES + NONCE_BYTES));
  const body = blob.subarray(HEADER_BYTES + NONCE_BYTES);
  if (body.length !== 4 * params.size) {
    throw new BridgeDataError(
      `expected ${4 * params.size} value bytes, found ${body.length}`,
    );
  }
  const aligned = new ArrayBuffer(body.length);
  new Uint8Array(aligned).set(body);
  const values = new Float32Array(aligned); // LE host assumed; checked at import
  return { params, nonce, values };
}

export function serializeLatent(
  values: Float32Array,
  params: LatentParams,
  nonce: Uint8Array,
): Buffer {
  if (values.length !== params.size) {
    throw new BridgeDataError(
      `latent must hold ${params.size} values, got ${values.length}`,
    );
  }
  if (nonce.length !== NONCE_BYTES) {
    throw new BridgeDataError(`nonce must be ${NONCE_BYTES} bytes`);
  }
  const out = Buffer.alloc(HEADER_BYTES + NONCE_BYTES + 4 * values.length);
  out.write(MAGIC, 0, "ascii");
  out.writeUInt32LE(params.size, 4);
  out.writeUInt32LE(params.bins, 8);
  out.writeUInt32LE(params.blockSize, 12);
  out.writeUInt32LE(params.bitsPerGroup, 16);
  out.set(nonce, HEADER_BYTES);
  out.set(new Uint8Array(values.buffer, values.byteOffset, 4 * values.length),
          HEADER_BYTES + NONCE_BYTES);
  return out;
}

// float32 views are host-endian; the container is little-endian by contract
const probe = new Uint8Array(new Uint16Array([0x0102]).buffer);
if (probe[0] !== 0x02) {
  throw new BridgeDataError("big-endian hosts are not supported");
}
