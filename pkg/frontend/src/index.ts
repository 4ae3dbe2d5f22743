/**
 * TypeScript bindings for condkit. Everything crosses the boundary through
 * the package's public surfaces only: shard tar files are parsed directly,
 * conditioning vectors and stream samples come from spawning the `condkit`
 * CLI and parsing its serialized output. No numeric logic is reimplemented
 * here, so values are bit-identical to the Python library's.
 */

export {
  ChecksumMismatch,
  CliFailure,
  CondkitError,
  ConfigError,
  ExternalUnavailable,
  GuidanceFailure,
  HandleClosed,
  IndexError,
  InvalidScene,
  IoFailure,
  KeyError,
  NotInfilled,
  ParseFailure,
  TooSmall,
  ValueError,
} from "./errors.js";
export { runCondkit, type RunOptions } from "./cli.js";
export { readTar, type TarMember } from "./tar.js";
export {
  parseConditioningBlobs,
  VARIANTS,
  type ConditioningVector,
  type VariantKey,
} from "./wire.js";
export {
  load_scene,
  readShardManifest,
  SceneHandle,
  SHARD_FORMAT,
  type DepthArrays,
  type ManifestSceneEntry,
  type ShardManifest,
} from "./scene.js";
export { conditioning, type ConditioningOptions } from "./conditioning.js";
export {
  pair_stream,
  STREAM_FORMAT,
  type PairSample,
  type PairStreamOptions,
  type ViewArrays,
} from "./stream.js";
