"""condkit command-line tool.

One binary, subcommand style. Exit codes are stable and class-based:

    0  success
    2  usage or configuration error
    3  shard/file IO error (checksum mismatches included)
    4  data validation error (bad pose, empty depth, bad index, ...)
    5  external tool failure (LPIPS backend, guidance model)
    1  anything unexpected

Errors print to stderr as ``condkit error: <ClassName>: <message>`` so
callers in other languages can recover the error class without parsing
prose. NDJSON and CSV outputs all begin with a format/version header line.
"""

from __future__ import annotations

import argparse
import base64
import csv
import glob as glob_mod
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import anchoring, conditioning, config as config_mod, metrics, preprocess
from .conditioning import SceneView, Variant
from .dataset import shard as shard_mod
from .dataset import stream as stream_mod
from .depth import scene_scale_agg, viewer_scale
from .errors import (
    CondkitError,
    ConfigError,
    ExternalUnavailable,
    GuidanceFailure,
    IoFailure,
    ParseFailure,
)
from .geometry import relative_pose

STREAM_FORMAT = "condkit-stream/1"
EVAL_FORMAT = "condkit-eval/1"

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_EXTERNAL = 5


def _fail_code(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_USAGE
    if isinstance(exc, IoFailure):
        return EXIT_IO
    if isinstance(exc, (ExternalUnavailable, ParseFailure, GuidanceFailure)):
        return EXIT_EXTERNAL
    if isinstance(exc, (CondkitError, ValueError, IndexError)):
        return EXIT_DATA
    return EXIT_UNEXPECTED


def _expand_shards(patterns: list[str]) -> list[str]:
    paths: list[str] = []
    for pattern in patterns:
        hits = sorted(glob_mod.glob(pattern))
        paths.extend(hits if hits else [pattern])
    return paths


def _scene_view(scene: shard_mod.SceneRecord, i: int, j: int) -> SceneView:
    return SceneView(
        extrinsics=tuple(v.pose for v in scene.views),
        fov=scene.fov,
        input_index=i,
        target_index=j,
        depths=tuple(v.depth for v in scene.views),
    )


def _scale_note(s: SceneView, variant: Variant, q_i: float | None) -> str:
    if variant is Variant.SIXDOF_NORM:
        return f"{conditioning.camera_location_scale(s.extrinsics):.10g} (camera spread)"
    if variant is Variant.SIXDOF_AGG:
        return f"{scene_scale_agg(list(s.depths)):.10g} (aggregate depth)"
    if variant is Variant.SIXDOF_VIEWER:
        if q_i is not None:
            return f"{q_i:.10g} (given)"
        return f"{viewer_scale(s.depths[s.input_index]):.10g} (input-view depth)"
    return "1 (none)"


def cmd_conditioning(args, cfg, pinned) -> int:
    variant_key = config_mod.resolve(cfg, pinned, "conditioning", "variant", args.variant)
    scene = shard_mod.read_scene(args.shard, args.scene)
    s = _scene_view(scene, args.i, args.j)
    variants = (
        [Variant.from_key(variant_key)]
        if variant_key != "all"
        else list(Variant)
    )
    blobs = []
    for variant in variants:
        vec = conditioning.compute(s, variant, q_i=args.q_i)
        blobs.append(vec.to_bytes())
        print(f"scene {scene.scene_id} pair ({args.i}, {args.j}) variant {variant.key}")
        if variant is Variant.ZERO123:
            e = vec.entries
            print(f"  d_elevation {e[0]:+.10g}  d_azimuth {e[1]:+.10g}  d_radius {e[2]:+.10g}")
        else:
            rel = relative_pose(s.input_pose, s.target_pose)
            for row in rel.matrix:
                print("  [" + " ".join(f"{v:+.6f}" for v in row) + "]")
            print(f"  translation scale: {_scale_note(s, variant, args.q_i)}")
            print(
                "  fov embedding: ["
                + ", ".join(f"{v:.10g}" for v in vec.entries[16:])
                + "]"
            )
        print(f"  vector[{vec.entries.size}]: " + " ".join(f"{v:.17g}" for v in vec.entries))
    if args.out:
        Path(args.out).write_bytes(b"".join(blobs))
        print(f"wrote {sum(len(b) for b in blobs)} bytes to {args.out}")
    return EXIT_OK


def cmd_shard_build(args, cfg, pinned) -> int:
    per_shard = config_mod.resolve(cfg, pinned, "dataset", "scenes_per_shard", args.scenes_per_shard)
    root = Path(args.input)
    scene_dirs = sorted(d for d in root.iterdir() if d.is_dir())
    if not scene_dirs:
        raise IoFailure(f"no scene directories under {root}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for shard_idx in range(0, len(scene_dirs), per_shard):
        chunk = scene_dirs[shard_idx : shard_idx + per_shard]
        name = f"shard-{shard_idx // per_shard:04d}.tar"
        scenes = (shard_mod.read_scene_dir(d) for d in chunk)
        written.append(shard_mod.write_shard(scenes, out_dir / name))
    for sh in written:
        print(f"{sh.path}: {sh.manifest['scene_count']} scenes")
    return EXIT_OK


def cmd_shard_inspect(args, cfg, pinned) -> int:
    manifest = shard_mod.read_manifest(args.shard)
    if args.json:
        print(json.dumps(manifest, sort_keys=True))
        return EXIT_OK
    print(f"shard {manifest['shard_id']} ({manifest['format']}): "
          f"{manifest['scene_count']} scenes")
    for entry in manifest["scenes"]:
        print(
            f"  {entry['scene_id']}: {entry['n_views']} views, "
            f"{entry['bytes']} bytes at {entry['offset']}, sha256 {entry['sha256'][:12]}"
        )
    return EXIT_OK


def _pose_list(pose) -> list[float]:
    return pose.matrix.reshape(-1).tolist()


def _b64(arr: np.ndarray) -> str:
    return base64.b64encode(np.ascontiguousarray(arr).tobytes()).decode()


def _sample_record(sample: stream_mod.PairSample, arrays: bool) -> dict:
    rec = {
        "scene_id": sample.scene_id,
        "i": sample.i,
        "j": sample.j,
        "fov": sample.fov,
        "input_pose": _pose_list(sample.input_view.pose),
        "target_pose": _pose_list(sample.target_view.pose),
    }
    if arrays:
        for tag, view in (("input", sample.input_view), ("target", sample.target_view)):
            rec[tag] = {
                "image_shape": list(view.image.shape),
                "image": _b64(view.image),
                "depth_shape": [view.depth.height, view.depth.width],
                "depth": _b64(view.depth.values.astype("<f4")),
                "mask": _b64(view.depth.mask.astype(np.uint8)),
            }
    return rec


def cmd_stream_bench(args, cfg, pinned) -> int:
    import resource

    rate = config_mod.resolve(cfg, pinned, "dataset", "rate", args.rate)
    workers = config_mod.resolve(cfg, pinned, "dataset", "workers", args.workers)
    seed = config_mod.resolve(cfg, pinned, "", "seed", args.seed)
    shards = _expand_shards(args.shards)
    dump_fh = open(args.dump, "w") if args.dump else None
    header = {"format": STREAM_FORMAT, "rate": rate, "seed": seed, "workers": workers}
    if dump_fh:
        dump_fh.write(json.dumps(header, sort_keys=True) + "\n")
    start = time.perf_counter()
    n = 0
    image_bytes = 0
    try:
        for sample in stream_mod.parallel_stream(shards, workers, rate, seed):
            n += 1
            image_bytes += sample.input_view.image.nbytes + sample.target_view.image.nbytes
            if dump_fh:
                dump_fh.write(json.dumps(_sample_record(sample, False), sort_keys=True) + "\n")
            if args.max_samples is not None and n >= args.max_samples:
                break
            if args.seconds is not None and time.perf_counter() - start >= args.seconds:
                break
    finally:
        if dump_fh:
            dump_fh.close()
    elapsed = time.perf_counter() - start
    peak_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    report = {
        "samples": n,
        "seconds": round(elapsed, 6),
        "samples_per_sec": round(n / elapsed, 3) if elapsed > 0 else 0.0,
        "image_bytes_per_sec": round(image_bytes / elapsed, 1) if elapsed > 0 else 0.0,
        "peak_rss_kb": peak_kb,
        "workers": workers,
        "rate": rate,
    }
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_stream_dump(args, cfg, pinned) -> int:
    rate = config_mod.resolve(cfg, pinned, "dataset", "rate", args.rate)
    seed = config_mod.resolve(cfg, pinned, "", "seed", args.seed)
    shards = _expand_shards(args.shards)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        header = {"format": STREAM_FORMAT, "rate": rate, "seed": seed, "workers": 1}
        out.write(json.dumps(header, sort_keys=True) + "\n")
        n = 0
        for sample in stream_mod.parallel_stream(shards, 1, rate, seed, skip_failures=False):
            out.write(json.dumps(_sample_record(sample, args.arrays), sort_keys=True) + "\n")
            n += 1
            if args.limit is not None and n >= args.limit:
                break
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _load_image(path: Path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"))


def cmd_preprocess(args, cfg, pinned) -> int:
    from PIL import Image

    in_dir = Path(args.input)
    meta_path = in_dir / "meta.json"
    if not meta_path.is_file():
        raise IoFailure(f"{in_dir} has no meta.json")
    meta = json.loads(meta_path.read_text())
    intr = preprocess.Intrinsics(
        meta["fx"], meta["fy"], meta["cx"], meta["cy"], meta["width"], meta["height"]
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = sorted(in_dir.glob("image_*.png"))
    if args.dtu:
        new_intr, (left, top) = preprocess.letterbox(intr, 400, 300)
        inner_w = round(intr.width * min(400 / intr.width, 300 / intr.height))
        inner_h = round(intr.height * min(400 / intr.width, 300 / intr.height))
        for img_path in images:
            with Image.open(img_path) as img:
                resized = img.convert("RGB").resize((inner_w, inner_h), Image.BICUBIC)
                canvas = Image.new("RGB", (400, 300))
                canvas.paste(resized, (left, top))
                canvas.save(out_dir / img_path.name)
    else:
        target = min(intr.width, intr.height)
        cropped = preprocess.center_crop(intr, target)
        new_intr = preprocess.resize(cropped, args.size, args.size)
        dx = (intr.width - target) // 2
        dy = (intr.height - target) // 2
        for img_path in images:
            with Image.open(img_path) as img:
                box = (dx, dy, dx + target, dy + target)
                square = img.convert("RGB").crop(box)
                square.resize((args.size, args.size), Image.BICUBIC).save(
                    out_dir / img_path.name
                )
    new_meta = dict(meta)
    new_meta.update(
        fx=new_intr.fx, fy=new_intr.fy, cx=new_intr.cx, cy=new_intr.cy,
        width=new_intr.width, height=new_intr.height,
        fov=preprocess.fov_from_intrinsics(new_intr),
    )
    (out_dir / "meta.json").write_text(json.dumps(new_meta, sort_keys=True, indent=2))
    print(f"wrote {len(images)} images and meta.json to {out_dir}")
    return EXIT_OK


def _distill_config(cfg, pinned, args) -> anchoring.DistillConfig:
    a = cfg["anchoring"]

    def get(key, flag):
        return config_mod.resolve(cfg, pinned, "anchoring", key, flag)

    return anchoring.DistillConfig(
        total_steps=get("total_steps", args.total_steps),
        stage1_fraction=a["stage1_fraction"],
        k=get("k", args.k),
        anchor_probability=a["anchor_probability"],
        gating_threshold=a["gating_threshold"],
        ddim_steps=a["ddim_steps"],
        guidance_scale=a["guidance_scale"],
        max_noise_start=a["max_noise_start"],
        max_noise_end=a["max_noise_end"],
        anisotropy_beta=a["anisotropy_beta"],
        azimuth_window_start=math.radians(a["azimuth_window_start_deg"]),
        elevation_min=math.radians(a["elevation_min_deg"]),
        elevation_max=math.radians(a["elevation_max_deg"]),
        camera_radius=a["camera_radius"],
        input_elevation=math.radians(a["input_elevation_deg"]),
        fov=math.radians(a["fov_deg"]),
        viewer_scale=cfg["conditioning"]["viewer_scale_heuristic"],
        seed=config_mod.resolve(cfg, pinned, "", "seed", args.seed),
    )


def cmd_plan_distill(args, cfg, pinned) -> int:
    plan_config = _distill_config(cfg, pinned, args)
    steps = anchoring.distill_plan(plan_config)
    text = anchoring.plan_to_ndjson(steps, plan_config)
    Path(args.out).write_text(text)
    anchor_steps = sum(1 for s in steps if s.kind is anchoring.SourceKind.ANCHOR)
    stage1 = sum(1 for s in steps if s.resolution == anchoring.STAGES[0][0])
    print(
        f"plan: {len(steps)} steps ({stage1} at {anchoring.STAGES[0][0]}px), "
        f"k={plan_config.k}, {anchor_steps} anchor-guided, out {args.out}"
    )
    return EXIT_OK


def cmd_eval(args, cfg, pinned) -> int:
    wanted = config_mod.resolve(
        cfg, pinned, "metrics", "metrics",
        [m.strip() for m in args.metrics.split(",")] if args.metrics else None,
    )
    lpips_cmd = config_mod.resolve(cfg, pinned, "metrics", "lpips_cmd", args.lpips_cmd)
    unknown = set(wanted) - {"psnr", "ssim", "lpips"}
    if unknown:
        raise ConfigError(f"unknown metrics {sorted(unknown)}")
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    names = sorted(
        {p.name for p in pred_dir.glob("*.png")} & {p.name for p in gt_dir.glob("*.png")}
    )
    if not names:
        raise IoFailure(f"no common .png names between {pred_dir} and {gt_dir}")
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        out.write(f"# {EVAL_FORMAT}\n")
        writer = csv.writer(out)
        writer.writerow(["image"] + list(wanted))
        sums = {m: 0.0 for m in wanted}
        for name in names:
            pred = _load_image(pred_dir / name)
            gt = _load_image(gt_dir / name)
            row = [name]
            for metric in wanted:
                if metric == "psnr":
                    value = metrics.psnr(pred, gt)
                elif metric == "ssim":
                    value = metrics.ssim(pred, gt)
                else:
                    if not lpips_cmd:
                        raise ExternalUnavailable("lpips requested without --lpips-cmd")
                    value = metrics.lpips_external(pred, gt, lpips_cmd.split())
                sums[metric] += value
                row.append(f"{value:.6f}" if math.isfinite(value) else "inf")
            writer.writerow(row)
        mean_row = ["mean"]
        for metric in wanted:
            mean = sums[metric] / len(names)
            mean_row.append(f"{mean:.6f}" if math.isfinite(mean) else "inf")
        writer.writerow(mean_row)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_config_dump(args, cfg, pinned) -> int:
    sys.stdout.write(config_mod.dump_config(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condkit",
        description="camera-conditioning, scene-shard, and distillation-planning toolkit",
    )
    parser.add_argument("--config", help="TOML config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("conditioning", help="compute conditioning vectors for a scene pair")
    p.add_argument("--shard", required=True)
    p.add_argument("--scene", required=True)
    p.add_argument("--i", type=int, required=True, help="input view index")
    p.add_argument("--j", type=int, required=True, help="target view index")
    p.add_argument("--variant", choices=[v.key for v in Variant] + ["all"])
    p.add_argument("--q-i", type=float, default=None, help="viewer scale override")
    p.add_argument("--out", help="write serialized vector(s) here")
    p.set_defaults(fn=cmd_conditioning)

    shard_p = sub.add_parser("shard", help="build or inspect scene shards")
    shard_sub = shard_p.add_subparsers(dest="shard_command", required=True)
    p = shard_sub.add_parser("build", help="pack scene directories into shard tars")
    p.add_argument("--input", required=True, help="directory of scene directories")
    p.add_argument("--out", required=True, help="output shard directory")
    p.add_argument("--scenes-per-shard", type=int, default=None)
    p.set_defaults(fn=cmd_shard_build)
    p = shard_sub.add_parser("inspect", help="print a shard's manifest")
    p.add_argument("shard")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_shard_inspect)

    stream_p = sub.add_parser("stream", help="stream view pairs from shards")
    stream_sub = stream_p.add_subparsers(dest="stream_command", required=True)
    p = stream_sub.add_parser("bench", help="measure streaming throughput")
    p.add_argument("--shards", nargs="+", required=True)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--seconds", type=float, default=None)
    p.add_argument("--max-samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dump", help="also write sample-id NDJSON here")
    p.set_defaults(fn=cmd_stream_bench)
    p = stream_sub.add_parser("dump", help="emit samples as NDJSON (workers=1, ordered)")
    p.add_argument("--shards", nargs="+", required=True)
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--arrays", action="store_true", help="include base64 image/depth/mask")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_stream_dump)

    p = sub.add_parser("preprocess", help="crop/letterbox images and adjust intrinsics")
    p.add_argument("--input", required=True, help="scene directory with meta.json")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=256)
    p.add_argument("--dtu", action="store_true", help="400x300 letterboxed eval crops")
    p.set_defaults(fn=cmd_preprocess)

    plan_p = sub.add_parser("plan", help="emit distillation plans")
    plan_sub = plan_p.add_subparsers(dest="plan_command", required=True)
    p = plan_sub.add_parser("distill", help="write the per-step schedule as NDJSON")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--total-steps", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(fn=cmd_plan_distill)

    p = sub.add_parser("eval", help="PSNR/SSIM/LPIPS over prediction/gt directories")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--metrics", default=None, help="comma list: psnr,ssim,lpips")
    p.add_argument("--lpips-cmd", default=None)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(fn=cmd_eval)

    config_p = sub.add_parser("config", help="inspect effective configuration")
    config_sub = config_p.add_subparsers(dest="config_command", required=True)
    p = config_sub.add_parser("dump", help="print the effective TOML config")
    p.set_defaults(fn=cmd_config_dump)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg, pinned = config_mod.load_config(args.config)
        return args.fn(args, cfg, pinned)
    except BrokenPipeError:
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001 - single exit-code boundary
        print(f"condkit error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _fail_code(exc)


if __name__ == "__main__":
    sys.exit(main())
