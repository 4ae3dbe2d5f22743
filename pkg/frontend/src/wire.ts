import { ParseFailure } from "./errors.js";

/** Variant keys in wire-tag order: the serialized tag byte indexes this list. */
export const VARIANTS = [
  "zero123",
  "sixdof",
  "sixdof_norm",
  "sixdof_agg",
  "sixdof_viewer",
] as const;

export type VariantKey = (typeof VARIANTS)[number];

export interface ConditioningVector {
  variant: VariantKey;
  entries: Float32Array;
}

/**
 * Parse serialized conditioning vectors: one or more records of
 * `u32le count | count * f32le | u8 variant tag`.
 */
export function parseConditioningBlobs(blob: Buffer): ConditioningVector[] {
  const vectors: ConditioningVector[] = [];
  let offset = 0;
  while (offset < blob.length) {
    if (offset + 4 > blob.length) {
      throw new ParseFailure(`truncated vector header at byte ${offset}`);
    }
    const count = blob.readUInt32LE(offset);
    const end = offset + 4 + count * 4 + 1;
    if (end > blob.length) {
      throw new ParseFailure(`vector of ${count} entries overruns blob of ${blob.length} bytes`);
    }
    const entries = new Float32Array(count);
    for (let k = 0; k < count; k++) {
      entries[k] = blob.readFloatLE(offset + 4 + 4 * k);
    }
    const tag = blob[end - 1]!;
    const variant = VARIANTS[tag];
    if (variant === undefined) {
      throw new ParseFailure(`unknown variant tag ${tag}`);
    }
    vectors.push({ variant, entries });
    offset = end;
  }
  return vectors;
}
