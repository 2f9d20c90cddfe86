"""Command line interface: amc synth | track | stabilize | metrics."""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import dataset as ds
from . import synthetic
from .dataset import ConfigError, DataError
from .geometry import exp_so3, geodesic_angle
from .pipeline import PipelineConfig, run_metrics, run_pipeline


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--downsample", type=int)
    p.add_argument("--n-track", type=int, dest="n_track")
    p.add_argument("--n-avg", type=int, dest="n_avg")
    p.add_argument("--filter-a", type=float, dest="filter_a")
    p.add_argument("--filter-b", type=float, dest="filter_b")
    p.add_argument("--margin", type=float, dest="margin_fraction")
    p.add_argument("--mode", choices=["smooth", "saccade"])
    p.add_argument("--saccade-threshold", type=float,
                   dest="saccade_valid_threshold")
    p.add_argument("--intrinsics", dest="intrinsics_path")
    p.add_argument("--no-warm-start", action="store_true")
    p.add_argument("--max-iterations", type=int, dest="max_iterations")
    p.add_argument("--step-tolerance", type=float, dest="step_tolerance")


def _build_config(args) -> PipelineConfig:
    cfg = (PipelineConfig.from_json_file(args.config) if args.config
           else PipelineConfig())
    for name in ("downsample", "n_track", "n_avg", "filter_a", "filter_b",
                 "margin_fraction", "mode", "saccade_valid_threshold",
                 "intrinsics_path", "max_iterations", "step_tolerance"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "no_warm_start", False):
        cfg.warm_start = False
    cfg.validate()
    return cfg


def cmd_synth(args) -> int:
    if args.trajectory:
        try:
            with open(args.trajectory) as f:
                traj = synthetic.ShakeTrajectory.from_dict(json.load(f))
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as e:
            raise ConfigError(f"bad trajectory file: {e}")
    else:
        factory = synthetic.TRAJECTORY_PRESETS[args.preset]
        kwargs = {"fps": args.fps, "duration": args.duration}
        if args.amplitude is not None and args.preset != "static":
            kwargs["amplitude"] = args.amplitude
        traj = factory(**kwargs)

    source = (synthetic.test_chart(args.source_size) if args.source == "chart"
              else synthetic.smooth_texture(args.source_size, seed=args.seed))
    K_src = synthetic.wide_intrinsics(args.source_size, fov_deg=args.source_fov)
    K_cam = synthetic.camera_intrinsics(args.width, args.height, args.fov)
    frames, rotations = synthetic.generate_sequence(source, K_src, traj, K_cam)
    ds.write_dataset(args.out, frames, K_cam, traj.fps, rotations=rotations,
                     downsample=1)
    print(f"wrote {len(frames)} frames to {args.out}")
    return 0


def cmd_track(args) -> int:
    cfg = _build_config(args)
    summary = run_pipeline(args.dataset, cfg, out_dir=args.out, render=False)
    gt = ds.read_ground_truth(args.dataset)
    if gt is not None and args.out:
        est = ds.read_rotations(f"{args.out}/rotations.csv")
        _, w_gt = gt
        R0 = exp_so3(w_gt[0])
        errors = []
        for i in range(min(len(w_gt), len(est["frame"]))):
            R_rel_gt = R0.T @ exp_so3(w_gt[i])
            errors.append(math.degrees(
                geodesic_angle(exp_so3(est["w_est"][i]), R_rel_gt)))
        errors = np.array(errors)
        print(f"geodesic error vs ground truth (deg): "
              f"mean {errors.mean():.4f}  max {errors.max():.4f}")
    print(f"tracked {summary['n_frames']} frames, "
          f"mean iterations {summary['mean_iterations']:.2f}")
    return 0


def cmd_stabilize(args) -> int:
    cfg = _build_config(args)
    summary = run_pipeline(args.dataset, cfg, out_dir=args.out, render=True)
    fps = summary["compute_fps"]
    print(f"stabilized {summary['n_frames']} frames "
          f"({cfg.mode} mode, {fps:.1f} fps compute)")
    if "metrics" in summary:
        m = summary["metrics"]
        print(f"NF RMS {m['nf_rms']:.3f} px  dI RMS {m['delta_i_rms']:.4f}  "
              f"sharpness {m['sharpness']:.4f}  valid {m['valid_pct']:.1f}%")
    return 0


def cmd_metrics(args) -> int:
    summary = run_metrics(args.frames, out_csv=args.out,
                          rotations_path=args.rotations,
                          margin_fraction=args.margin, mode_tag=args.mode_tag,
                          fps=args.fps)
    print(f"{summary['n_frames']} frames: NF RMS {summary['nf_rms']:.3f} px  "
          f"dI RMS {summary['delta_i_rms']:.4f}  "
          f"sharpness {summary['sharpness']:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amc", description="Rotation-only video stabilization toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", choices=sorted(synthetic.TRAJECTORY_PRESETS),
                   default="flapper12")
    p.add_argument("--trajectory", help="custom trajectory JSON")
    p.add_argument("--fps", type=float, default=60.0)
    p.add_argument("--duration", type=float, default=20.0)
    p.add_argument("--amplitude", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=320)
    p.add_argument("--height", type=int, default=180)
    p.add_argument("--fov", type=float, default=60.0)
    p.add_argument("--source", choices=["noise", "chart"], default="noise")
    p.add_argument("--source-size", type=int, default=2048)
    p.add_argument("--source-fov", type=float, default=120.0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("track", help="estimate per-frame rotations only")
    p.add_argument("dataset")
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("stabilize", help="run the full stabilization pipeline")
    p.add_argument("dataset")
    p.add_argument("--out", required=True, help="output directory")
    _add_config_flags(p)
    p.set_defaults(func=cmd_stabilize)

    p = sub.add_parser("metrics", help="compute metrics over a frame directory")
    p.add_argument("frames")
    p.add_argument("--out", help="metrics CSV path")
    p.add_argument("--rotations", help="rotations CSV for angular velocities")
    p.add_argument("--margin", type=float, default=0.0,
                   help="crop this margin fraction before measuring")
    p.add_argument("--mode-tag", default="none")
    p.add_argument("--fps", type=float)
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DataError, synthetic.FovExceededError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
