"""Sequential tar shards of multiview scenes.

A shard is an uncompressed tar archive holding one directory per scene, laid
out for single-pass streaming:

    <scene_id>/meta.json       scene_id, fov, conventions, per-view depth shapes
    <scene_id>/poses.bin       little-endian float64, 16 per view, row-major 4x4
    <scene_id>/depth_0000.f32  little-endian float32 depth values
    <scene_id>/mask_0000.u8    1 byte per pixel, nonzero = valid
    <scene_id>/image_0000.png  8-bit RGB
    <scene_id>/sha256          hex digest of the scene's payload bytes, in order
    ...
    __manifest__.json          trailing index: scene ids, byte offsets, checksums

Members of one scene are contiguous and its checksum arrives last, so a
streaming reader verifies each scene as it goes with one scene of state. The
manifest enables random access (read_scene seeks straight to a scene) and
cheap inspection without trusting member order. Byte-for-byte layout details
live in docs/shard-format.md; the format is consumed across language
boundaries, so changes are compatibility-relevant.

Depth values are stored as float32 (the wire precision of depth everywhere in
this library); SceneRecord snaps depths to float32 precision on construction
so a written scene reads back bit-exactly.
"""

from __future__ import annotations

import hashlib
import io
import itertools
import json
import re
import tarfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from ..depth import DepthMap
from ..errors import ChecksumMismatch, CondkitError, InvalidScene, IoFailure
from ..geometry import Pose

SHARD_FORMAT = "condkit-shard/1"
MANIFEST_NAME = "__manifest__.json"
_SCENE_ID_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]*\Z")


@dataclass(frozen=True)
class View:
    """One observation: 8-bit RGB image, depth map, camera-to-world pose."""

    image: np.ndarray
    depth: DepthMap
    pose: Pose

    def __post_init__(self) -> None:
        img = np.asarray(self.image)
        if img.dtype != np.uint8 or img.ndim != 3 or img.shape[2] != 3:
            raise ValueError(f"image must be uint8 (H, W, 3), got {img.dtype} {img.shape}")
        img = img.copy()
        img.setflags(write=False)
        object.__setattr__(self, "image", img)


def _f32_exact(depth: DepthMap) -> DepthMap:
    values = depth.values.astype(np.float32).astype(np.float64)
    if np.array_equal(values, depth.values):
        return depth
    return DepthMap(values, depth.mask)


@dataclass(frozen=True)
class SceneRecord:
    """A multiview scene: two or more views sharing one field of view."""

    scene_id: str
    views: tuple[View, ...]
    fov: float
    source_dataset: str = ""
    convention: str = "camera-to-world"

    def __post_init__(self) -> None:
        if not _SCENE_ID_RE.match(self.scene_id):
            raise InvalidScene(self.scene_id, f"invalid scene_id {self.scene_id!r}")
        views = tuple(self.views)
        if len(views) < 2:
            raise InvalidScene(self.scene_id, "scene needs at least 2 views")
        if not 0.0 < self.fov < np.pi:
            raise InvalidScene(self.scene_id, f"fov {self.fov} outside (0, pi)")
        views = tuple(
            View(v.image, _f32_exact(v.depth), v.pose) for v in views
        )
        object.__setattr__(self, "views", views)

    @property
    def n_views(self) -> int:
        return len(self.views)


@dataclass(frozen=True)
class Shard:
    path: Path
    shard_id: str
    manifest: dict


def _png_bytes(image: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(np.asarray(image)).save(buf, format="PNG")
    return buf.getvalue()


def _decode_png(blob: bytes) -> np.ndarray:
    from PIL import Image

    with Image.open(io.BytesIO(blob)) as img:
        return np.asarray(img.convert("RGB"))


def _scene_members(scene: SceneRecord) -> list[tuple[str, bytes]]:
    """Payload members for one scene, in on-disk order (checksum excluded)."""
    meta = {
        "format": SHARD_FORMAT,
        "scene_id": scene.scene_id,
        "fov": scene.fov,
        "source_dataset": scene.source_dataset,
        "convention": scene.convention,
        "n_views": scene.n_views,
        "depth_shapes": [[v.depth.height, v.depth.width] for v in scene.views],
    }
    poses = np.stack([v.pose.matrix for v in scene.views]).astype("<f8")
    members = [
        ("meta.json", json.dumps(meta, sort_keys=True).encode()),
        ("poses.bin", poses.tobytes()),
    ]
    for idx, view in enumerate(scene.views):
        members.append((f"depth_{idx:04d}.f32", view.depth.values.astype("<f4").tobytes()))
        members.append((f"mask_{idx:04d}.u8", view.depth.mask.astype(np.uint8).tobytes()))
        members.append((f"image_{idx:04d}.png", _png_bytes(view.image)))
    return members


def _scene_digest(members: list[tuple[str, bytes]]) -> str:
    h = hashlib.sha256()
    for _, payload in members:
        h.update(payload)
    return h.hexdigest()


def write_shard(scenes, destination, shard_id: str | None = None) -> Shard:
    """Write scenes to a new shard tar; returns the shard with its manifest.

    The manifest lands as the archive's final member, so readers that only
    stream never need it while inspectors and random access read it first.
    """
    path = Path(destination)
    shard_id = shard_id if shard_id is not None else path.name.split(".")[0]
    scene_iter = iter(scenes)
    try:
        first = next(scene_iter)
    except StopIteration:
        raise InvalidScene("<none>", "cannot write an empty shard") from None
    entries = []
    seen: set[str] = set()
    try:
        with tarfile.open(path, "w") as tar:
            for scene in itertools.chain([first], scene_iter):
                if scene.scene_id in seen:
                    raise InvalidScene(scene.scene_id, "duplicate scene_id in shard")
                seen.add(scene.scene_id)
                offset = tar.fileobj.tell()
                members = _scene_members(scene)
                digest = _scene_digest(members)
                members.append(("sha256", digest.encode()))
                for name, payload in members:
                    info = tarfile.TarInfo(f"{scene.scene_id}/{name}")
                    info.size = len(payload)
                    tar.addfile(info, io.BytesIO(payload))
                entries.append(
                    {
                        "scene_id": scene.scene_id,
                        "offset": offset,
                        "bytes": tar.fileobj.tell() - offset,
                        "n_views": scene.n_views,
                        "sha256": digest,
                    }
                )
            manifest = {
                "format": SHARD_FORMAT,
                "shard_id": shard_id,
                "scene_count": len(entries),
                "scenes": entries,
            }
            blob = json.dumps(manifest, sort_keys=True).encode()
            info = tarfile.TarInfo(MANIFEST_NAME)
            info.size = len(blob)
            tar.addfile(info, io.BytesIO(blob))
    except OSError as exc:
        raise IoFailure(f"cannot write shard {path}: {exc}") from exc
    return Shard(path, shard_id, manifest)


def _build_scene(scene_id: str, payloads: dict[str, bytes]) -> SceneRecord:
    digest = payloads.pop("sha256", None)
    if digest is None:
        raise ChecksumMismatch(scene_id, "checksum member missing")
    h = hashlib.sha256()
    for payload in payloads.values():
        h.update(payload)
    if h.hexdigest() != digest.decode():
        raise ChecksumMismatch(scene_id)
    return _scene_from_payloads(scene_id, payloads)


def _scene_from_payloads(scene_id: str, payloads: dict[str, bytes]) -> SceneRecord:
    try:
        meta = json.loads(payloads["meta.json"])
        n = meta["n_views"]
        poses = np.frombuffer(payloads["poses.bin"], dtype="<f8").reshape(n, 4, 4)
        views = []
        for idx in range(n):
            h_px, w_px = meta["depth_shapes"][idx]
            depth_values = np.frombuffer(
                payloads[f"depth_{idx:04d}.f32"], dtype="<f4"
            ).reshape(h_px, w_px)
            mask = np.frombuffer(payloads[f"mask_{idx:04d}.u8"], dtype=np.uint8)
            views.append(
                View(
                    _decode_png(payloads[f"image_{idx:04d}.png"]),
                    DepthMap(depth_values.astype(np.float64), mask.reshape(h_px, w_px) != 0),
                    Pose.from_matrix(poses[idx]),
                )
            )
        return SceneRecord(
            meta["scene_id"],
            tuple(views),
            meta["fov"],
            meta["source_dataset"],
            meta["convention"],
        )
    except (KeyError, ValueError) as exc:
        raise InvalidScene(scene_id, f"malformed scene {scene_id}: {exc}") from exc


def _stream_members(tar) -> Iterator[tuple[str, str, bytes]]:
    for info in tar:
        if not info.isfile() or info.name == MANIFEST_NAME:
            continue
        scene_id, _, member = info.name.partition("/")
        if not member:
            continue
        yield scene_id, member, tar.extractfile(info).read()


def stream_scenes(path, skip_corrupt: bool = False):
    """Yield SceneRecords in shard order with one scene of state in memory.

    Checksums are verified scene by scene. A corrupt scene raises
    ChecksumMismatch by default; with skip_corrupt the error is recorded as a
    warning and the stream moves to the next scene.
    """
    import warnings

    try:
        with tarfile.open(path, "r|") as tar:
            current_id: str | None = None
            payloads: dict[str, bytes] = {}

            def finish():
                try:
                    return _build_scene(current_id, payloads)
                except (ChecksumMismatch, InvalidScene):
                    if not skip_corrupt:
                        raise
                    warnings.warn(f"skipping corrupt scene {current_id} in {path}")
                    return None

            for scene_id, member, payload in _stream_members(tar):
                if scene_id != current_id:
                    if current_id is not None:
                        scene = finish()
                        if scene is not None:
                            yield scene
                    current_id, payloads = scene_id, {}
                payloads[member] = payload
            if current_id is not None:
                scene = finish()
                if scene is not None:
                    yield scene
    except CondkitError:
        raise
    except (OSError, tarfile.TarError) as exc:
        raise IoFailure(f"cannot read shard {path}: {exc}") from exc


def read_scene_dir(path) -> SceneRecord:
    """Load one scene from a directory holding the shard member files.

    This is the pre-extracted ingestion layout: the same meta.json, poses.bin
    and per-view files a shard member directory would contain, checksum not
    required.
    """
    p = Path(path)
    if not (p / "meta.json").is_file():
        raise InvalidScene(p.name, f"{p} has no meta.json")
    payloads = {
        f.name: f.read_bytes()
        for f in sorted(p.iterdir())
        if f.is_file() and f.name != "sha256"
    }
    return _scene_from_payloads(p.name, payloads)


def read_manifest(path) -> dict:
    """Load the trailing manifest without materializing any scene."""
    try:
        with tarfile.open(path, "r") as tar:
            last = None
            for info in tar:
                last = info
            if last is None or last.name != MANIFEST_NAME:
                raise IoFailure(f"{path} has no trailing manifest")
            return json.loads(tar.extractfile(last).read())
    except CondkitError:
        raise
    except (OSError, tarfile.TarError) as exc:
        raise IoFailure(f"cannot read shard {path}: {exc}") from exc


def read_scene(path, scene_id: str) -> SceneRecord:
    """Random-access read of one scene via its manifest offset."""
    manifest = read_manifest(path)
    entry = next((s for s in manifest["scenes"] if s["scene_id"] == scene_id), None)
    if entry is None:
        raise InvalidScene(scene_id, f"scene {scene_id} not in {path}")
    try:
        with open(path, "rb") as raw:
            raw.seek(entry["offset"])
            # pad with the two zero blocks that terminate a tar stream
            chunk = io.BytesIO(raw.read(entry["bytes"]) + b"\0" * 1024)
        with tarfile.open(fileobj=chunk, mode="r|") as tar:
            payloads = {
                member: payload
                for sid, member, payload in _stream_members(tar)
                if sid == scene_id
            }
    except CondkitError:
        raise
    except (OSError, tarfile.TarError) as exc:
        raise IoFailure(f"cannot read shard {path}: {exc}") from exc
    return _build_scene(scene_id, payloads)
