/** Error taxonomy mirroring the CLI's exit-code contract. */

export class BridgeError extends Error {}

/** Bad arguments or configuration (CLI exit code 2). */
export class BridgeUsageError extends BridgeError {}

/** Malformed data: wrong lengths, bad hex, non-finite values, corrupt
 * containers (CLI exit code 3). */
export class BridgeDataError extends BridgeError {}
