"""Rate-controlled streaming of view pairs out of scene shards.

Scenes are visited in shard order, one in memory at a time; each visited
scene emits a random number of distinct ordered view pairs. The ``rate``
parameter is the expected number of pairs per scene: the draw is
min(Poisson(rate), n_pairs) with pairs then chosen uniformly without
replacement, so low rates approach fully random sampling across the stream
while high rates mine each scene densely before moving on.

Every per-shard random stream is seeded from (seed, shard stem), never from
the worker that happens to process it, which keeps the overall sample
multiset identical for any worker count. Order is only reproducible at
workers = 1.
"""

from __future__ import annotations

import hashlib
import multiprocessing as mp
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from ..conditioning import SceneView
from ..errors import IoFailure
from .shard import SceneRecord, View, stream_scenes

DEFAULT_QUEUE_SIZE = 64


@dataclass(frozen=True)
class PairSample:
    """One training example: an (input, target) view pair from one scene."""

    scene_id: str
    i: int
    j: int
    input_view: View
    target_view: View
    fov: float

    @property
    def sample_id(self) -> tuple[str, int, int]:
        return (self.scene_id, self.i, self.j)

    @property
    def scene_view(self) -> SceneView:
        """Two-view SceneView over the pair (input at 0, target at 1)."""
        return SceneView(
            extrinsics=(self.input_view.pose, self.target_view.pose),
            fov=self.fov,
            input_index=0,
            target_index=1,
            depths=(self.input_view.depth, self.target_view.depth),
        )


def shard_seed(seed: int, shard_path) -> int:
    """Stable per-shard RNG seed derived from the global seed and shard stem."""
    stem = Path(shard_path).name.split(".")[0]
    h = hashlib.sha256(f"{seed}:{stem}".encode()).digest()
    return int.from_bytes(h[:8], "little")


def sample_pair_indices(
    n_views: int, rate: float, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Distinct ordered (i, j) pairs for one scene, i != j, uniform without
    replacement; the count is min(Poisson(rate), available pairs)."""
    if not rate > 0:
        raise ValueError(f"rate must be positive, got {rate}")
    n_pairs = n_views * (n_views - 1)
    count = min(int(rng.poisson(rate)), n_pairs)
    if count == 0:
        return []
    flat = rng.choice(n_pairs, size=count, replace=False)
    out = []
    for idx in flat:
        i, r = divmod(int(idx), n_views - 1)
        out.append((i, r if r < i else r + 1))
    return out


def _scene_pairs(scene: SceneRecord, rate: float, rng: np.random.Generator):
    for i, j in sample_pair_indices(scene.n_views, rate, rng):
        yield PairSample(
            scene.scene_id, i, j, scene.views[i], scene.views[j], scene.fov
        )


def stream_shard(
    shard_path, rate: float, seed: int = 0, rng: np.random.Generator | None = None
) -> Iterator[PairSample]:
    """Stream pair samples from one shard, scenes in archive order.

    Memory stays bounded by the largest single scene. Read failures terminate
    the stream with IoFailure rather than ending it quietly.
    """
    if rng is None:
        rng = np.random.default_rng(shard_seed(seed, shard_path))
    for scene in stream_scenes(shard_path):
        yield from _scene_pairs(scene, rate, rng)


def _restart(source) -> Iterator[PairSample]:
    # a factory gets called, anything else is assumed re-iterable
    return iter(source()) if callable(source) else iter(source)


def mix_streams(
    streams: Sequence, weights: Sequence[float], seed: int = 0
) -> Iterator[PairSample]:
    """Blend pair streams, drawing from stream s with probability weights[s].

    Streams restart when they run dry (infinite-epoch semantics), so pass
    factories or re-iterable objects, not bare generators, for anything that
    must survive exhaustion. Zero-weight streams are never created at all.
    """
    if len(streams) == 0:
        raise ValueError("need at least one stream")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (len(streams),):
        raise ValueError(f"{len(streams)} streams but {w.size} weights")
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must be nonnegative and sum to 1")
    return _mix(list(streams), w, seed)


def _mix(streams: list, w: np.ndarray, seed: int) -> Iterator[PairSample]:
    rng = np.random.default_rng(seed)
    active: dict[int, Iterator[PairSample]] = {}
    while True:
        s = int(rng.choice(len(streams), p=w))
        if s not in active:
            active[s] = _restart(streams[s])
        try:
            yield next(active[s])
        except StopIteration:
            active[s] = _restart(streams[s])
            try:
                yield next(active[s])
            except StopIteration:
                raise IoFailure(f"stream {s} restarted empty") from None


def _worker(shard_paths, rate, seed, out_queue, skip_failures):
    try:
        for path in shard_paths:
            try:
                for sample in stream_shard(path, rate, seed):
                    out_queue.put(("sample", sample))
            except Exception as exc:
                out_queue.put(("error", (str(path), repr(exc))))
                if not skip_failures:
                    return
    finally:
        out_queue.put(("done", None))


def parallel_stream(
    shard_paths: Sequence,
    workers: int,
    rate: float,
    seed: int = 0,
    queue_size: int = DEFAULT_QUEUE_SIZE,
    skip_failures: bool = True,
) -> Iterator[PairSample]:
    """Stream pairs from many shards with worker processes.

    Shards are dealt round-robin to workers; the per-shard seeding keeps the
    emitted multiset identical for every worker count, while ordering is only
    deterministic at workers = 1 (which runs in-process, no queue). A failing
    shard is reported with its path by warning and the rest continue; pass
    skip_failures=False to make the failure terminal.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    paths = list(shard_paths)
    if not paths:
        return iter(())
    if workers == 1:
        return _serial_stream(paths, rate, seed, skip_failures)
    return _pooled_stream(paths, workers, rate, seed, queue_size, skip_failures)


def _serial_stream(paths, rate, seed, skip_failures) -> Iterator[PairSample]:
    for path in paths:
        try:
            yield from stream_shard(path, rate, seed)
        except Exception as exc:
            if not skip_failures:
                raise
            warnings.warn(f"shard {path} failed: {exc!r}")


def _pooled_stream(
    paths, workers, rate, seed, queue_size, skip_failures
) -> Iterator[PairSample]:
    ctx = mp.get_context("fork")
    out_queue: mp.Queue = ctx.Queue(maxsize=queue_size)
    procs = []
    for w in range(workers):
        assigned = paths[w::workers]
        proc = ctx.Process(
            target=_worker,
            args=(assigned, rate, seed, out_queue, skip_failures),
            daemon=True,
        )
        proc.start()
        procs.append(proc)
    pending_error = None
    done = 0
    try:
        while done < len(procs):
            kind, payload = out_queue.get()
            if kind == "sample":
                yield payload
            elif kind == "error":
                path, message = payload
                if skip_failures:
                    warnings.warn(f"shard {path} failed: {message}")
                else:
                    pending_error = IoFailure(f"shard {path} failed: {message}")
            else:
                done += 1
        if pending_error is not None:
            raise pending_error
    finally:
        for proc in procs:
            proc.terminate()
        for proc in procs:
            proc.join(timeout=5)


def bench_stream(
    shard_paths: Sequence,
    workers: int,
    rate: float,
    seed: int = 0,
    max_samples: int | None = None,
    max_seconds: float | None = None,
) -> dict:
    """Consume a parallel stream and report throughput numbers."""
    import time

    start = time.perf_counter()
    n = 0
    image_bytes = 0
    for sample in parallel_stream(shard_paths, workers, rate, seed):
        n += 1
        image_bytes += sample.input_view.image.nbytes + sample.target_view.image.nbytes
        elapsed = time.perf_counter() - start
        if max_samples is not None and n >= max_samples:
            break
        if max_seconds is not None and elapsed >= max_seconds:
            break
    elapsed = time.perf_counter() - start
    return {
        "samples": n,
        "seconds": elapsed,
        "samples_per_sec": n / elapsed if elapsed > 0 else 0.0,
        "image_bytes_per_sec": image_bytes / elapsed if elapsed > 0 else 0.0,
        "workers": workers,
        "rate": rate,
    }
