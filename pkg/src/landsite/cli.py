"""Command-line interface.

Subcommands: detect (run the pipeline over a frame stream), costmap
(dump one frame's stage maps), synth (render canonical or custom scenes
into a frame stream), bench (per-stage timing) and cluster (re-cluster a
registry snapshot). Exit codes: 0 success, 1 configuration error, 2 I/O
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import formats, scene_synth
from .bench import bench
from .config import PipelineConfig, get_profile
from .errors import ConfigError
from .geometry import camera_pose
from .pipeline import dump_costmaps, evaluate_costmaps, read_frame_stream, \
    run_pipeline, write_frame_stream, write_outputs
from .registry import SiteRegistry, cluster_sites
from .pipeline import write_clusters_json


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are config errors (exit 1)
        raise ConfigError(message)


def _add_config_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="pipeline config JSON")
    p.add_argument("--profile", choices=("sim", "real"), default=None,
                   help="named parameter profile (default: sim)")


def _resolve_config(args) -> PipelineConfig:
    if args.config is not None:
        if args.profile is not None:
            raise ConfigError("give either --config or --profile, not both")
        try:
            return PipelineConfig.load(args.config)
        except FileNotFoundError as exc:
            raise OSError(f"config file not found: {args.config}") from exc
    return get_profile(args.profile or "sim")


def _build_parser() -> _Parser:
    parser = _Parser(prog="landsite",
                     description="Landing-site detection from depth frames")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", parents=[], help="run the full pipeline")
    _add_config_args(p)
    p.add_argument("--in", dest="stream", type=Path, required=True,
                   help="frame stream directory")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    p.add_argument("--dump-costmaps", type=Path, default=None,
                   help="also dump per-frame stage maps to this directory")

    p = sub.add_parser("costmap", help="dump stage maps for a single frame")
    _add_config_args(p)
    p.add_argument("--in", dest="stream", type=Path, required=True)
    p.add_argument("--frame-id", type=int, default=None,
                   help="frame to process (default: first in stream)")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("synth", help="render synthetic scenes to a frame stream")
    p.add_argument("--scene",
                   choices=("flat_pad", "steep_wall", "tree", "roof_edge",
                            "rubble"),
                   default=None, help="canonical scene name")
    p.add_argument("--scene-file", type=Path, default=None,
                   help="custom scene JSON instead of a canonical scene")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--spacing-m", type=float, default=0.5,
                   help="camera step along +x between frames")
    p.add_argument("--height-m", type=float, default=None,
                   help="camera height override")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--noise-sigma-m", type=float, default=None,
                   help="override the scene's depth noise")
    p.add_argument("--ground-truth", action="store_true",
                   help="also dump safe mask and primitive ids per frame")

    p = sub.add_parser("bench", help="per-stage timing over a frame stream")
    _add_config_args(p)
    p.add_argument("--in", dest="stream", type=Path, required=True)
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--out", type=Path, default=None,
                   help="directory for timing.json (default: print only)")

    p = sub.add_parser("cluster", help="re-cluster a registry snapshot")
    _add_config_args(p)
    p.add_argument("--sites", type=Path, required=True, help="sites.json path")
    p.add_argument("--out", type=Path, required=True,
                   help="clusters.json output path")
    return parser


def _cmd_detect(args) -> int:
    config = _resolve_config(args)
    frames = read_frame_stream(args.stream, config.d_min_m, config.d_max_m)
    result = run_pipeline(config, frames, dump_dir=args.dump_costmaps)
    write_outputs(args.out, result)
    n_candidates = sum(len(f.candidates) for f in result.frames)
    print(f"frames: {len(result.frames)} (failed: {result.frames_failed})  "
          f"candidates: {n_candidates}  sites: {len(result.registry)}  "
          f"clusters: {len(result.clusters)}")
    return 0


def _cmd_costmap(args) -> int:
    config = _resolve_config(args)
    for frame in read_frame_stream(args.stream, config.d_min_m, config.d_max_m):
        if args.frame_id is None or frame.frame_id == args.frame_id:
            maps = evaluate_costmaps(config, frame)
            dump_costmaps(args.out, frame.frame_id, maps)
            print(f"dumped stage maps for frame {frame.frame_id} to {args.out}")
            return 0
    raise OSError(f"frame {args.frame_id} not found in {args.stream}")


def _cmd_synth(args) -> int:
    if (args.scene is None) == (args.scene_file is None):
        raise ConfigError("give exactly one of --scene or --scene-file")
    if args.scene_file is not None:
        try:
            scene = scene_synth.load_scene(args.scene_file)
        except FileNotFoundError as exc:
            raise OSError(f"scene file not found: {args.scene_file}") from exc
        height = args.height_m if args.height_m is not None else 5.0
    else:
        name = args.scene.upper()
        scene = scene_synth.canonical_scenes(seed=args.seed)[name]
        height = args.height_m if args.height_m is not None \
            else scene_synth.CANONICAL_HEIGHTS[name]
    if args.noise_sigma_m is not None:
        scene = scene_synth.SceneSpec(primitives=scene.primitives,
                                      noise_sigma=args.noise_sigma_m,
                                      seed=args.seed)
    if args.frames < 1:
        raise ConfigError("--frames must be >= 1")

    intrinsics = scene_synth.default_intrinsics()
    rate_hz = 20.0
    frames = []
    truths = []
    for i in range(args.frames):
        pose = camera_pose((i * args.spacing_m, 0.0, height))
        # Distinct noise per frame, still fully seed-determined.
        per_frame = scene_synth.SceneSpec(primitives=scene.primitives,
                                          noise_sigma=scene.noise_sigma,
                                          seed=scene.seed + i)
        frame, truth = scene_synth.render_depth(per_frame, intrinsics, pose,
                                                frame_id=i,
                                                timestamp=i / rate_hz)
        frames.append(frame)
        truths.append(truth)
    write_frame_stream(args.out, frames)
    if args.ground_truth:
        gt_dir = Path(args.out) / "ground_truth"
        gt_dir.mkdir(parents=True, exist_ok=True)
        for frame, truth in zip(frames, truths):
            prefix = f"{frame.frame_id:06d}"
            formats.write_binary_pgm(gt_dir / f"{prefix}_safe_mask.pgm",
                                     truth.safe_mask.astype(np.uint8))
            formats.write_pgm(gt_dir / f"{prefix}_prim_id.pgm",
                              (truth.prim_id + 1).clip(0, 255).astype(np.uint8))
            for i, axis in enumerate("xyz"):
                formats.write_values_pfm(
                    gt_dir / f"{prefix}_normal_{axis}.pfm",
                    truth.normals[..., i], frame.valid)
    print(f"wrote {len(frames)} frame(s) to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    config = _resolve_config(args)
    if args.reps < 1:
        raise ConfigError("--reps must be >= 1")
    frames = list(read_frame_stream(args.stream, config.d_min_m, config.d_max_m))
    if not frames:
        raise OSError(f"no readable frames in {args.stream}")
    report = bench(config, frames, repetitions=args.reps)
    print(report.to_table())
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        report.save(out / "timing.json")
    return 0


def _cmd_cluster(args) -> int:
    config = _resolve_config(args)
    try:
        registry = SiteRegistry.load(args.sites)
    except FileNotFoundError as exc:
        raise OSError(f"sites file not found: {args.sites}") from exc
    except (KeyError, json.JSONDecodeError) as exc:
        raise OSError(f"{args.sites}: malformed registry snapshot ({exc})") from exc
    clusters = cluster_sites(registry, config.cluster_dist_m,
                             config.cluster_z_m, config.cluster_metric)
    write_clusters_json(args.out, clusters)
    print(f"{len(registry)} sites -> {len(clusters)} clusters")
    return 0


_COMMANDS = {
    "detect": _cmd_detect,
    "costmap": _cmd_costmap,
    "synth": _cmd_synth,
    "bench": _cmd_bench,
    "cluster": _cmd_cluster,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
