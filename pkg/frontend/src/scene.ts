import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

import {
  ChecksumMismatch,
  HandleClosed,
  IndexError,
  InvalidScene,
  IoFailure,
} from "./errors.js";
import { readTar, type TarMember } from "./tar.js";

export const SHARD_FORMAT = "condkit-shard/1";

export interface DepthArrays {
  values: Float32Array;
  mask: Uint8Array;
  height: number;
  width: number;
}

export interface ManifestSceneEntry {
  scene_id: string;
  offset: number;
  bytes: number;
  n_views: number;
  sha256: string;
}

export interface ShardManifest {
  format: string;
  shard_id: string;
  scene_count: number;
  scenes: ManifestSceneEntry[];
}

interface SceneMeta {
  format: string;
  scene_id: string;
  fov: number;
  n_views: number;
  depth_shapes: [number, number][];
}

function readShardMembers(shardPath: string): TarMember[] {
  let raw: Buffer;
  try {
    raw = readFileSync(shardPath);
  } catch (err) {
    throw new IoFailure(`cannot read shard ${shardPath}: ${(err as Error).message}`);
  }
  return readTar(raw);
}

/** Parse and validate the trailing `__manifest__.json` member of a shard. */
export function readShardManifest(shardPath: string): ShardManifest {
  const members = readShardMembers(shardPath);
  const last = members[members.length - 1];
  if (last === undefined || last.name !== "__manifest__.json") {
    throw new IoFailure(`${shardPath} has no trailing __manifest__.json`);
  }
  let manifest: ShardManifest;
  try {
    manifest = JSON.parse(last.data.toString("utf8")) as ShardManifest;
  } catch (err) {
    throw new IoFailure(`${shardPath} manifest is not valid JSON: ${(err as Error).message}`);
  }
  if (manifest.format !== SHARD_FORMAT) {
    throw new IoFailure(`${shardPath} manifest format ${JSON.stringify(manifest.format)}, expected ${SHARD_FORMAT}`);
  }
  return manifest;
}

function expectedNames(sceneId: string, nViews: number): string[] {
  const names = [`${sceneId}/meta.json`, `${sceneId}/poses.bin`];
  for (let v = 0; v < nViews; v++) {
    const idx = String(v).padStart(4, "0");
    names.push(`${sceneId}/depth_${idx}.f32`, `${sceneId}/mask_${idx}.u8`, `${sceneId}/image_${idx}.png`);
  }
  names.push(`${sceneId}/sha256`);
  return names;
}

function parseMeta(member: TarMember, sceneId: string): SceneMeta {
  let meta: SceneMeta;
  try {
    meta = JSON.parse(member.data.toString("utf8")) as SceneMeta;
  } catch (err) {
    throw new InvalidScene(`scene '${sceneId}': meta.json is not valid JSON: ${(err as Error).message}`);
  }
  if (meta.format !== SHARD_FORMAT) {
    throw new InvalidScene(`scene '${sceneId}': format ${JSON.stringify(meta.format)}, expected ${SHARD_FORMAT}`);
  }
  if (meta.scene_id !== sceneId) {
    throw new InvalidScene(`scene '${sceneId}': meta.json names '${meta.scene_id}'`);
  }
  if (!Number.isInteger(meta.n_views) || meta.n_views < 2) {
    throw new InvalidScene(`scene '${sceneId}': n_views ${meta.n_views}, need at least 2`);
  }
  if (!(meta.fov > 0 && meta.fov < Math.PI)) {
    throw new InvalidScene(`scene '${sceneId}': fov ${meta.fov} out of (0, pi)`);
  }
  if (!Array.isArray(meta.depth_shapes) || meta.depth_shapes.length !== meta.n_views) {
    throw new InvalidScene(`scene '${sceneId}': depth_shapes must list one [h, w] per view`);
  }
  return meta;
}

function decodePoses(member: TarMember, nViews: number, sceneId: string): Float64Array {
  if (member.data.length !== nViews * 16 * 8) {
    throw new InvalidScene(
      `scene '${sceneId}': poses.bin is ${member.data.length} bytes, expected ${nViews * 16 * 8}`,
    );
  }
  const poses = new Float64Array(nViews * 16);
  for (let k = 0; k < poses.length; k++) {
    poses[k] = member.data.readDoubleLE(8 * k);
  }
  return poses;
}

function decodeDepth(depth: TarMember, mask: TarMember, shape: [number, number], sceneId: string): DepthArrays {
  const [height, width] = shape;
  const pixels = height * width;
  if (depth.data.length !== pixels * 4) {
    throw new InvalidScene(`scene '${sceneId}': ${depth.name} is ${depth.data.length} bytes, expected ${pixels * 4}`);
  }
  if (mask.data.length !== pixels) {
    throw new InvalidScene(`scene '${sceneId}': ${mask.name} is ${mask.data.length} bytes, expected ${pixels}`);
  }
  const values = new Float32Array(pixels);
  for (let k = 0; k < pixels; k++) {
    values[k] = depth.data.readFloatLE(4 * k);
  }
  // constructor copy: Buffer overrides slice() to alias, so avoid it here
  return { values, mask: new Uint8Array(mask.data), height, width };
}

/**
 * An open scene loaded from a shard. Exposes poses, depths, and field of
 * view as flat native arrays; every accessor returns a fresh copy so no
 * mutable state is shared across the boundary. Valid until close(); not
 * shareable across worker threads.
 */
export class SceneHandle {
  readonly shardPath: string;
  readonly sceneId: string;
  readonly nViews: number;
  readonly fov: number;
  private poses: Float64Array | null;
  private depthMaps: DepthArrays[] | null;

  constructor(shardPath: string, sceneId: string, fov: number, poses: Float64Array, depthMaps: DepthArrays[]) {
    this.shardPath = shardPath;
    this.sceneId = sceneId;
    this.nViews = depthMaps.length;
    this.fov = fov;
    this.poses = poses;
    this.depthMaps = depthMaps;
  }

  get isOpen(): boolean {
    return this.poses !== null;
  }

  /** Release the decoded arrays; later accessors throw HandleClosed. */
  close(): void {
    this.poses = null;
    this.depthMaps = null;
  }

  private checkView(view: number): void {
    if (!this.isOpen) {
      throw new HandleClosed(`scene '${this.sceneId}' handle is closed`);
    }
    if (!Number.isInteger(view) || view < 0 || view >= this.nViews) {
      throw new IndexError(`view index ${view} out of range for ${this.nViews} views`);
    }
  }

  /** Row-major 4x4 camera-to-world matrix of one view (16 entries, copied). */
  extrinsics(view: number): Float64Array {
    this.checkView(view);
    return this.poses!.slice(16 * view, 16 * view + 16);
  }

  /** Depth values, validity mask, and shape of one view (copied). */
  depth(view: number): DepthArrays {
    this.checkView(view);
    const d = this.depthMaps![view]!;
    return { values: d.values.slice(), mask: d.mask.slice(), height: d.height, width: d.width };
  }
}

/** Load one scene from a shard, verifying its checksum before any decode. */
export function load_scene(shardPath: string, sceneId: string): SceneHandle {
  const members = readShardMembers(shardPath);
  const scene = members.filter((m) => m.name.startsWith(`${sceneId}/`));
  if (scene.length === 0) {
    throw new InvalidScene(`scene '${sceneId}': not in ${shardPath}`);
  }
  const trailer = scene[scene.length - 1]!;
  if (trailer.name !== `${sceneId}/sha256`) {
    throw new InvalidScene(`scene '${sceneId}': last member is ${trailer.name}, expected sha256`);
  }
  // the digest covers every payload member in archive order, headers excluded
  const digest = createHash("sha256");
  for (const member of scene.slice(0, -1)) {
    digest.update(member.data);
  }
  const actual = digest.digest("hex");
  const recorded = trailer.data.toString("ascii").trim();
  if (actual !== recorded) {
    throw new ChecksumMismatch(`scene '${sceneId}': sha256 ${actual} does not match recorded ${recorded}`);
  }
  const meta = parseMeta(scene[0]!, sceneId);
  const names = scene.map((m) => m.name);
  const expected = expectedNames(sceneId, meta.n_views);
  if (names.length !== expected.length || names.some((name, k) => name !== expected[k])) {
    throw new InvalidScene(`scene '${sceneId}': unexpected member layout [${names.join(", ")}]`);
  }
  const poses = decodePoses(scene[1]!, meta.n_views, sceneId);
  const depthMaps: DepthArrays[] = [];
  for (let v = 0; v < meta.n_views; v++) {
    const shape = meta.depth_shapes[v]!;
    depthMaps.push(decodeDepth(scene[2 + 3 * v]!, scene[3 + 3 * v]!, shape, sceneId));
  }
  return new SceneHandle(shardPath, sceneId, meta.fov, poses, depthMaps);
}
