import { runCondkit } from "./cli.js";
import { conditioningAt, type ConditioningOptions } from "./conditioning.js";
import { InvalidScene, ParseFailure, ValueError } from "./errors.js";
import { readShardManifest } from "./scene.js";
import type { VariantKey } from "./wire.js";

export const STREAM_FORMAT = "condkit-stream/1";

export interface ViewArrays {
  image: Uint8Array;
  imageShape: [number, number, number];
  depth: Float32Array;
  depthShape: [number, number];
  mask: Uint8Array;
}

export interface PairSample {
  sceneId: string;
  i: number;
  j: number;
  fov: number;
  inputPose: Float64Array;
  targetPose: Float64Array;
  input: ViewArrays;
  target: ViewArrays;
  conditioning: Float32Array;
}

export interface PairStreamOptions extends ConditioningOptions {
  /** Conditioning variant attached to each sample (default "sixdof"). */
  variant?: VariantKey;
  /** Stop after this many samples. */
  limit?: number;
}

interface DumpViewRow {
  image_shape: number[];
  image: string;
  depth_shape: number[];
  depth: string;
  mask: string;
}

interface DumpRow {
  scene_id: string;
  i: number;
  j: number;
  fov: number;
  input_pose: number[];
  target_pose: number[];
  input?: DumpViewRow;
  target?: DumpViewRow;
}

function decodePose(values: number[], what: string): Float64Array {
  if (values.length !== 16) {
    throw new ParseFailure(`${what} has ${values.length} entries, expected 16`);
  }
  return Float64Array.from(values);
}

function decodeView(row: DumpViewRow | undefined, what: string): ViewArrays {
  if (row === undefined) {
    throw new ParseFailure(`sample is missing its ${what} arrays`);
  }
  const [ih, iw, ic] = row.image_shape;
  const [dh, dw] = row.depth_shape;
  if (row.image_shape.length !== 3 || ih === undefined || iw === undefined || ic === undefined) {
    throw new ParseFailure(`${what} image_shape ${JSON.stringify(row.image_shape)} is not [h, w, c]`);
  }
  if (row.depth_shape.length !== 2 || dh === undefined || dw === undefined) {
    throw new ParseFailure(`${what} depth_shape ${JSON.stringify(row.depth_shape)} is not [h, w]`);
  }
  const image = new Uint8Array(Buffer.from(row.image, "base64"));
  if (image.length !== ih * iw * ic) {
    throw new ParseFailure(`${what} image has ${image.length} bytes for shape ${row.image_shape.join("x")}`);
  }
  const depthBytes = Buffer.from(row.depth, "base64");
  if (depthBytes.length !== dh * dw * 4) {
    throw new ParseFailure(`${what} depth has ${depthBytes.length} bytes for shape ${row.depth_shape.join("x")}`);
  }
  const depth = new Float32Array(dh * dw);
  for (let k = 0; k < depth.length; k++) {
    depth[k] = depthBytes.readFloatLE(4 * k);
  }
  const mask = new Uint8Array(Buffer.from(row.mask, "base64"));
  if (mask.length !== dh * dw) {
    throw new ParseFailure(`${what} mask has ${mask.length} bytes for shape ${row.depth_shape.join("x")}`);
  }
  return { image, imageShape: [ih, iw, ic], depth, depthShape: [dh, dw], mask };
}

/**
 * Stream (input, target, conditioning) samples from shards by spawning the
 * CLI's ordered single-worker dump. The returned iterable starts a fresh
 * pass on every iteration, so it can be consumed again after exhaustion.
 */
export function pair_stream(
  shardPaths: readonly string[],
  rate: number,
  seed: number,
  options: PairStreamOptions = {},
): Iterable<PairSample> {
  if (shardPaths.length === 0) {
    throw new ValueError("need at least one shard path");
  }
  if (!Number.isFinite(rate) || rate <= 0) {
    throw new ValueError(`rate must be positive, got ${rate}`);
  }
  if (!Number.isInteger(seed)) {
    throw new ValueError(`seed must be an integer, got ${seed}`);
  }
  if (options.limit !== undefined && (!Number.isInteger(options.limit) || options.limit <= 0)) {
    throw new ValueError(`limit must be a positive integer, got ${options.limit}`);
  }
  const variant = options.variant ?? "sixdof";
  const paths = [...shardPaths];
  // resolve scene ids eagerly so bad shards fail at construction, and so each
  // sample's conditioning call can be routed back to the shard that holds it
  const sceneShard = new Map<string, string>();
  for (const path of paths) {
    for (const entry of readShardManifest(path).scenes) {
      if (!sceneShard.has(entry.scene_id)) {
        sceneShard.set(entry.scene_id, path);
      }
    }
  }
  return {
    *[Symbol.iterator](): Generator<PairSample> {
      const args = [
        "stream", "dump",
        "--shards", ...paths,
        "--rate", String(rate),
        "--seed", String(seed),
        "--arrays",
      ];
      if (options.limit !== undefined) {
        args.push("--limit", String(options.limit));
      }
      const stdout = runCondkit(args, options);
      const lines = stdout.split("\n").filter((line) => line !== "");
      const headerLine = lines[0];
      if (headerLine === undefined) {
        throw new ParseFailure("stream dump produced no header");
      }
      const header = JSON.parse(headerLine) as { format?: string };
      if (header.format !== STREAM_FORMAT) {
        throw new ParseFailure(`expected ${STREAM_FORMAT} header, got ${JSON.stringify(header.format)}`);
      }
      for (const line of lines.slice(1)) {
        const row = JSON.parse(line) as DumpRow;
        const shard = sceneShard.get(row.scene_id);
        if (shard === undefined) {
          throw new InvalidScene(`scene '${row.scene_id}' is not in any provided shard manifest`);
        }
        yield {
          sceneId: row.scene_id,
          i: row.i,
          j: row.j,
          fov: row.fov,
          inputPose: decodePose(row.input_pose, "input_pose"),
          targetPose: decodePose(row.target_pose, "target_pose"),
          input: decodeView(row.input, "input"),
          target: decodeView(row.target, "target"),
          conditioning: conditioningAt(shard, row.scene_id, row.i, row.j, variant, options),
        };
      }
    },
  };
}
