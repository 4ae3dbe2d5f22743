import { spawnSync } from "node:child_process";
import { join } from "node:path";
import { fileURLToPath } from "node:url";

export const FIXTURES = fileURLToPath(new URL("../../tests/fixtures/", import.meta.url));
export const SHARD_A = join(FIXTURES, "fixture-a.tar");
export const SHARD_B = join(FIXTURES, "fixture-b.tar");
export const SHARD_C = join(FIXTURES, "fixture-c.tar");

/** Raw CLI invocation, independent of src/cli.ts, for cross-checking. */
export function runCli(...args: string[]): { status: number | null; stdout: string; stderr: string } {
  const result = spawnSync("python3", ["-m", "condkit", ...args], {
    encoding: "utf8",
    maxBuffer: 1 << 28,
  });
  if (result.error !== undefined) {
    throw result.error;
  }
  return { status: result.status, stdout: result.stdout, stderr: result.stderr };
}

export function bytesOf(arr: Float32Array | Float64Array | Uint8Array): Buffer {
  return Buffer.from(arr.buffer, arr.byteOffset, arr.byteLength);
}
