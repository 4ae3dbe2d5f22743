import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import {
  conditioning,
  IoFailure,
  load_scene,
  NotInfilled,
  pair_stream,
  ValueError,
  type PairSample,
} from "../src/index.js";
import { bytesOf, runCli, SHARD_A, SHARD_B, SHARD_C } from "./helpers.js";

const sampleId = (s: { scene_id?: string; sceneId?: string; i: number; j: number }): string =>
  `${s.scene_id ?? s.sceneId}:${s.i}:${s.j}`;

describe("pair_stream", () => {
  it("matches the CLI bench multiset and poses bit for bit", () => {
    const samples = Array.from(pair_stream([SHARD_A, SHARD_B], 4.0, 0, { variant: "sixdof" }));

    const dump = join(mkdtempSync(join(tmpdir(), "condkit-ts-")), "bench.ndjson");
    const { status } = runCli(
      "stream", "bench", "--shards", SHARD_A, SHARD_B,
      "--rate", "4.0", "--seed", "0", "--workers", "1", "--dump", dump,
    );
    expect(status).toBe(0);
    const rows = readFileSync(dump, "utf8")
      .split("\n")
      .filter((line) => line !== "")
      .slice(1) // header
      .map((line) => JSON.parse(line) as { scene_id: string; i: number; j: number; input_pose: number[]; target_pose: number[] });

    expect(samples.length).toBeGreaterThan(0);
    expect(samples.map(sampleId).sort()).toEqual(rows.map(sampleId).sort());

    const byId = new Map(rows.map((r) => [sampleId(r), r]));
    for (const sample of samples) {
      const row = byId.get(sampleId(sample))!;
      expect(Array.from(sample.inputPose)).toEqual(row.input_pose);
      expect(Array.from(sample.targetPose)).toEqual(row.target_pose);
    }
  });

  it("yields exactly one pair from the one-pair fixture", () => {
    // rate 1.0 / seed 5 draw exactly one ordered pair from the 2-view scene
    const samples = Array.from(pair_stream([SHARD_C], 1.0, 5, { variant: "sixdof" }));
    expect(samples.length).toBe(1);
    const sample = samples[0]!;
    expect(sample.sceneId).toBe("fixture-200");
    expect([sample.i, sample.j]).toEqual([1, 0]);
  });

  it("carries arrays and conditioning bit-identical to the other surfaces", () => {
    const [sample] = Array.from(pair_stream([SHARD_C], 1.0, 5, { variant: "sixdof" })) as [PairSample];
    const handle = load_scene(SHARD_C, "fixture-200");

    expect(sample.fov).toBe(handle.fov);
    expect(bytesOf(sample.inputPose).equals(bytesOf(handle.extrinsics(sample.i)))).toBe(true);
    expect(bytesOf(sample.targetPose).equals(bytesOf(handle.extrinsics(sample.j)))).toBe(true);

    const depth = handle.depth(sample.i);
    expect(sample.input.depthShape).toEqual([depth.height, depth.width]);
    expect(bytesOf(sample.input.depth).equals(bytesOf(depth.values))).toBe(true);
    expect(bytesOf(sample.input.mask).equals(bytesOf(depth.mask))).toBe(true);
    expect(sample.input.imageShape).toEqual([12, 16, 3]);
    expect(sample.input.image.length).toBe(12 * 16 * 3);

    const vec = conditioning(handle, sample.i, sample.j, "sixdof");
    expect(bytesOf(sample.conditioning).equals(bytesOf(vec))).toBe(true);
  });

  it("is re-creatable after exhaustion", () => {
    const stream = pair_stream([SHARD_A], 4.0, 5, { variant: "sixdof" });
    const first = Array.from(stream).map(sampleId);
    const second = Array.from(stream).map(sampleId);
    expect(first.length).toBeGreaterThan(0);
    expect(second).toEqual(first);
  });

  it("honors the sample limit", () => {
    const full = Array.from(pair_stream([SHARD_A], 4.0, 5, { variant: "zero123" }));
    const limited = Array.from(pair_stream([SHARD_A], 4.0, 5, { variant: "zero123", limit: 3 }));
    expect(limited.length).toBe(Math.min(3, full.length));
    expect(limited[0]!.conditioning.length).toBe(3);
  });

  it("surfaces mid-stream conditioning failures as iterator exceptions", () => {
    const stream = pair_stream([SHARD_A], 4.0, 5, { variant: "sixdof_viewer" });
    expect(() => Array.from(stream)).toThrowError(NotInfilled);
    const withFallback = pair_stream([SHARD_A], 4.0, 5, { variant: "sixdof_viewer", qI: 0.7 });
    expect(Array.from(withFallback).length).toBeGreaterThan(0);
  });

  it("validates arguments eagerly", () => {
    expect(() => pair_stream([], 4.0, 0)).toThrowError(ValueError);
    expect(() => pair_stream([SHARD_A], 0, 0)).toThrowError(ValueError);
    expect(() => pair_stream([SHARD_A], 4.0, 0.5)).toThrowError(ValueError);
    expect(() => pair_stream([SHARD_A], 4.0, 0, { limit: 0 })).toThrowError(ValueError);
    expect(() => pair_stream([join(tmpdir(), "missing.tar")], 4.0, 0)).toThrowError(IoFailure);
  });
});
