"""Sharded scene storage and streaming pair sampling."""

from .shard import (
    MANIFEST_NAME,
    SHARD_FORMAT,
    SceneRecord,
    Shard,
    View,
    read_manifest,
    read_scene,
    read_scene_dir,
    stream_scenes,
    write_shard,
)
from .stream import (
    PairSample,
    bench_stream,
    mix_streams,
    parallel_stream,
    sample_pair_indices,
    shard_seed,
    stream_shard,
)

__all__ = [
    "MANIFEST_NAME",
    "SHARD_FORMAT",
    "SceneRecord",
    "Shard",
    "View",
    "read_manifest",
    "read_scene",
    "read_scene_dir",
    "stream_scenes",
    "write_shard",
    "PairSample",
    "bench_stream",
    "mix_streams",
    "parallel_stream",
    "sample_pair_indices",
    "shard_seed",
    "stream_shard",
]
