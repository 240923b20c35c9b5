export { BridgeHandle, bytesToHex, hexToBytes } from "./bridge.js";
export type { DetectionRecord, EmbedResult } from "./bridge.js";
export { BridgeDataError, BridgeError, BridgeUsageError } from "./errors.js";
export {
  DEFAULT_PARAMS,
  MAGIC,
  NONCE_BYTES,
  numGroups,
  parseLatent,
  payloadBits,
  payloadBytes,
  serializeLatent,
} from "./smk1.js";
export type { LatentParams, ParsedLatent } from "./smk1.js";
