import { randomBytes } from "node:crypto";
import { readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { runCondkit, type RunOptions } from "./cli.js";
import { ConfigError, HandleClosed, ParseFailure, ValueError } from "./errors.js";
import type { SceneHandle } from "./scene.js";
import { parseConditioningBlobs, VARIANTS, type VariantKey } from "./wire.js";

export interface ConditioningOptions extends RunOptions {
  /** Viewer-scale fallback, forwarded as --q-i when input depth is not dense. */
  qI?: number;
}

function checkArgs(i: number, j: number, variant: VariantKey): void {
  if (!Number.isInteger(i) || !Number.isInteger(j)) {
    throw new ValueError(`view indices must be integers, got (${i}, ${j})`);
  }
  if (!(VARIANTS as readonly string[]).includes(variant)) {
    throw new ConfigError(`unknown variant '${variant}', expected one of: ${VARIANTS.join(", ")}`);
  }
}

/** Shared with the pair stream, which knows (shard, scene) but holds no handle. */
export function conditioningAt(
  shardPath: string,
  sceneId: string,
  i: number,
  j: number,
  variant: VariantKey,
  options: ConditioningOptions = {},
): Float32Array {
  checkArgs(i, j, variant);
  const out = join(tmpdir(), `condkit-vec-${randomBytes(8).toString("hex")}.bin`);
  try {
    const args = [
      "conditioning",
      "--shard", shardPath,
      "--scene", sceneId,
      "--i", String(i),
      "--j", String(j),
      "--variant", variant,
      "--out", out,
    ];
    if (options.qI !== undefined) {
      args.push("--q-i", String(options.qI));
    }
    runCondkit(args, options);
    const vectors = parseConditioningBlobs(readFileSync(out));
    if (vectors.length !== 1 || vectors[0]!.variant !== variant) {
      const got = vectors.map((v) => v.variant).join(", ");
      throw new ParseFailure(`expected one ${variant} vector, got [${got}]`);
    }
    return vectors[0]!.entries;
  } finally {
    rmSync(out, { force: true });
  }
}

/**
 * Conditioning vector for the (input i, target j) view pair of an open scene,
 * computed by the CLI and parsed back bit-exactly from its serialized form.
 */
export function conditioning(
  handle: SceneHandle,
  i: number,
  j: number,
  variant: VariantKey,
  options: ConditioningOptions = {},
): Float32Array {
  if (!handle.isOpen) {
    throw new HandleClosed(`scene '${handle.sceneId}' handle is closed`);
  }
  return conditioningAt(handle.shardPath, handle.sceneId, i, j, variant, options);
}
