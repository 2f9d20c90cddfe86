"""Streaming stabilization pipeline.

Single pass over a dataset directory: undistort (optional), downsample,
convert to gray for tracking, estimate orientation, filter the view, render
stabilized color frames, and emit rotations/metrics CSVs plus a timing
summary. Frame j's output depends only on frames <= j, so the pipeline can
run online.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, asdict

import numpy as np

from . import dataset as ds
from .dataset import ConfigError, DataError
from .geometry import Intrinsics, geodesic_angle, log_so3
from .image import (apply_remap, block_downsample, crop_margins, load_image,
                    load_remap, rgb_to_gray, save_image)
from .lk import TrackerConfig
from .metrics import (FrameMetrics, delta_i_rms, normal_flow, sharpness,
                      valid_pixel_pct)
from .orientation import OrientationTracker
from .stabilizer import (FrameBuffer, SaccadeStabilizer, StabilizerConfig,
                         stabilize_smooth)
from .view_filter import ViewFilterParams, update_view


@dataclass
class PipelineConfig:
    downsample: int | None = None  # None: take from dataset meta (default 4)
    n_track: int = 5
    n_avg: int = 6
    filter_a: float | None = None  # None: 2 * dt
    filter_b: float | None = None  # None: 40 * dt
    margin_fraction: float = 0.125
    mode: str = "smooth"
    saccade_valid_threshold: float = 0.90
    intrinsics_path: str | None = None
    warm_start: bool = True
    max_iterations: int = 20
    step_tolerance: float = 1e-5

    @classmethod
    def from_json_file(cls, path) -> "PipelineConfig":
        try:
            with open(path) as f:
                d = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}")
        known = cls().__dict__.keys()
        unknown = set(d) - set(known)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def validate(self):
        try:
            StabilizerConfig(n_avg=self.n_avg,
                             margin_fraction=self.margin_fraction,
                             mode=self.mode,
                             saccade_valid_threshold=self.saccade_valid_threshold)
            TrackerConfig(max_iterations=self.max_iterations,
                          step_tolerance=self.step_tolerance)
        except ValueError as e:
            raise ConfigError(str(e))
        if self.n_track < 1:
            raise ConfigError("n_track must be >= 1")


class _StageTimer:
    def __init__(self):
        self.totals: dict = {}
        self._t0 = None

    def start(self):
        self._t0 = time.perf_counter()

    def lap(self, name: str):
        t = time.perf_counter()
        self.totals[name] = self.totals.get(name, 0.0) + (t - self._t0)
        self._t0 = t


def run_pipeline(dataset_dir, config: PipelineConfig, out_dir=None,
                 render: bool = True, write_frames: bool = True) -> dict:
    """Run the pipeline; returns the summary dict (also written as JSON)."""
    config.validate()
    meta = ds.load_meta(dataset_dir)
    frame_paths = ds.list_frames(dataset_dir)
    dt = 1.0 / meta.fps

    if config.intrinsics_path:
        K_full = Intrinsics.from_json_file(config.intrinsics_path)
    else:
        K_full = meta.intrinsics
    factor = config.downsample if config.downsample else meta.downsample
    if meta.width % factor or meta.height % factor:
        raise ConfigError(
            f"downsample {factor} does not divide {meta.width}x{meta.height}")
    K = K_full.scaled(factor) if factor > 1 else K_full

    remap_path = os.path.join(dataset_dir, ds.REMAP_NAME)
    remap = load_remap(remap_path) if os.path.exists(remap_path) else None

    params = ViewFilterParams(
        a=config.filter_a if config.filter_a is not None else 2.0 * dt,
        b=config.filter_b if config.filter_b is not None else 40.0 * dt,
        dt=dt)
    tracker = OrientationTracker(
        intrinsics=K, n_track=config.n_track,
        config=TrackerConfig(max_iterations=config.max_iterations,
                             step_tolerance=config.step_tolerance))
    stab_cfg = StabilizerConfig(n_avg=config.n_avg,
                                margin_fraction=config.margin_fraction,
                                mode=config.mode,
                                saccade_valid_threshold=config.saccade_valid_threshold)
    buffer = FrameBuffer(config.n_avg)
    saccade_stab = SaccadeStabilizer(K, stab_cfg) if config.mode == "saccade" else None

    rot_writer = met_writer = None
    frames_dir = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        rot_writer = ds.RotationsWriter(os.path.join(out_dir, "rotations.csv"))
        if render:
            met_writer = ds.MetricsWriter(os.path.join(out_dir, "metrics.csv"))
            if write_frames:
                frames_dir = os.path.join(out_dir, "frames")
                os.makedirs(frames_dir, exist_ok=True)

    R_view = np.eye(3)
    prev_R_est = None
    prev_R_view_logged = None
    prev_out_gray = None
    prev_valid = None
    timer = _StageTimer()
    skipped = []
    per_frame_metrics = []
    iterations_total = 0
    n_processed = 0
    mode_tag = "sacc" if config.mode == "saccade" else "stab"

    for idx, path in enumerate(frame_paths):
        timer.start()
        try:
            img = load_image(path)
        except OSError as e:
            skipped.append({"frame": idx, "reason": str(e)})
            continue
        timer.lap("load")
        if remap is not None:
            img, _ = apply_remap(img, remap)
        if factor > 1:
            img = block_downsample(img, factor)
        gray = rgb_to_gray(img) if img.ndim == 3 else img
        timer.lap("preprocess")

        if not config.warm_start:
            tracker.R_jk = np.eye(3)
        R_0j, diag = tracker.process_frame(gray)
        iterations_total += diag.iterations
        timer.lap("track")
        R_view, _ = update_view(R_view, R_0j, params)
        timer.lap("filter")

        saccaded = False
        out = counts = None
        if render:
            if config.mode == "smooth":
                buffer.append(img, R_0j)
                out, counts = stabilize_smooth(buffer, R_view, K, stab_cfg)
                full = len(buffer)
                R_view_logged = R_view
            else:
                out, counts, saccaded = saccade_stab.process(img, R_0j)
                full = len(saccade_stab.warped)
                R_view_logged = saccade_stab.R_fixed
        else:
            R_view_logged = R_view
        timer.lap("render")

        if rot_writer is not None:
            rot_writer.write(idx, idx * dt, log_so3(R_0j),
                             log_so3(R_view_logged), diag.tracking_lost,
                             saccaded)
        if render:
            m = FrameMetrics()
            valid = counts == full
            m.valid_pct = valid_pixel_pct(counts, full)
            out_gray = rgb_to_gray(out) if out.ndim == 3 else out
            if out.ndim == 3:
                m.sharpness = sharpness(out)
            if prev_out_gray is not None:
                joint = valid & prev_valid
                m.delta_i_rms = delta_i_rms(prev_out_gray, out_gray, mask=joint)
                _, _, m.nf_rms = normal_flow(prev_out_gray, out_gray, mask=joint)
            if prev_R_est is not None:
                m.omega_img = math.degrees(geodesic_angle(prev_R_est, R_0j)) / dt
                m.omega_view = math.degrees(
                    geodesic_angle(prev_R_view_logged, R_view_logged)) / dt
            per_frame_metrics.append(m)
            if met_writer is not None:
                met_writer.write(idx, mode_tag, m)
            prev_out_gray = out_gray
            prev_valid = valid
        timer.lap("metrics")

        if frames_dir is not None:
            save_image(os.path.join(frames_dir, ds.frame_name(idx)), out)
        timer.lap("write")
        prev_R_est = R_0j
        prev_R_view_logged = R_view_logged
        n_processed += 1

    if rot_writer is not None:
        rot_writer.close()
    if met_writer is not None:
        met_writer.close()

    compute_stages = ("preprocess", "track", "filter", "render")
    compute_s = sum(timer.totals.get(s, 0.0) for s in compute_stages)
    total_s = sum(timer.totals.values())
    summary = {
        "config": asdict(config),
        "n_frames": n_processed,
        "skipped": skipped,
        "mean_iterations": iterations_total / max(n_processed, 1),
        "stage_mean_ms": {k: 1e3 * v / max(n_processed, 1)
                          for k, v in sorted(timer.totals.items())},
        "compute_fps": n_processed / compute_s if compute_s > 0 else 0.0,
        "total_fps": n_processed / total_s if total_s > 0 else 0.0,
    }
    if render and per_frame_metrics:
        pairs = per_frame_metrics[1:] or per_frame_metrics
        summary["metrics"] = {
            "nf_rms": float(np.mean([m.nf_rms for m in pairs])),
            "delta_i_rms": float(np.mean([m.delta_i_rms for m in pairs])),
            "sharpness": float(np.mean([m.sharpness for m in per_frame_metrics])),
            "valid_pct": float(np.mean([m.valid_pct for m in per_frame_metrics])),
            "omega_img_rms": ds.rms([m.omega_img for m in pairs]),
            "omega_view_rms": ds.rms([m.omega_view for m in pairs]),
        }
    if out_dir is not None:
        with open(os.path.join(out_dir, "summary.json"), "w") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
    return summary


def run_metrics(frames_dir, out_csv=None, rotations_path=None,
                margin_fraction: float = 0.0, mode_tag: str = "none",
                fps: float | None = None) -> dict:
    """Metric suite over a frame directory (no stabilization)."""
    frame_paths = ds.list_frames(frames_dir)
    meta_path = os.path.join(frames_dir, ds.META_NAME)
    if fps is None:
        fps = ds.load_meta(frames_dir).fps if os.path.exists(meta_path) else 60.0
    dt = 1.0 / fps
    rotations = ds.read_rotations(rotations_path) if rotations_path else None

    writer = ds.MetricsWriter(out_csv) if out_csv else None
    rows = []
    prev_gray = None
    for idx, path in enumerate(frame_paths):
        try:
            img = load_image(path)
        except OSError as e:
            raise DataError(f"cannot read {path}: {e}")
        if margin_fraction > 0:
            img, _ = crop_margins(img, None, margin_fraction)
        gray = rgb_to_gray(img) if img.ndim == 3 else img
        m = FrameMetrics()
        if img.ndim == 3:
            m.sharpness = sharpness(img)
        if prev_gray is not None:
            m.delta_i_rms = delta_i_rms(prev_gray, gray)
            _, _, m.nf_rms = normal_flow(prev_gray, gray)
        if rotations is not None and idx > 0 and idx < len(rotations["frame"]):
            m.omega_img = math.degrees(geodesic_angle(
                _rotvec_to_R(rotations["w_est"][idx - 1]),
                _rotvec_to_R(rotations["w_est"][idx]))) / dt
            m.omega_view = math.degrees(geodesic_angle(
                _rotvec_to_R(rotations["w_view"][idx - 1]),
                _rotvec_to_R(rotations["w_view"][idx]))) / dt
        rows.append(m)
        if writer:
            writer.write(idx, mode_tag, m)
        prev_gray = gray
    if writer:
        writer.close()

    pairs = rows[1:] or rows
    return {
        "n_frames": len(rows),
        "nf_rms": float(np.mean([m.nf_rms for m in pairs])),
        "delta_i_rms": float(np.mean([m.delta_i_rms for m in pairs])),
        "sharpness": float(np.mean([m.sharpness for m in rows])),
        "omega_img_rms": ds.rms([m.omega_img for m in pairs]),
        "omega_view_rms": ds.rms([m.omega_view for m in pairs]),
    }


def _rotvec_to_R(w):
    from .geometry import exp_so3
    return exp_so3(w)
