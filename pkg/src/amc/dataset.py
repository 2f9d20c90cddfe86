"""Dataset directory layout and CSV schemas.

A dataset is a directory of numbered PNGs plus a meta JSON:

    meta.json           {"fps", "width", "height", "downsample", "intrinsics"}
    frame_000000.png    8-bit frames, consecutive indices
    ground_truth.csv    optional: frame,t,wx,wy,wz (absolute rotation vectors)
    undistort.remap     optional precomputed undistortion map
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .geometry import Intrinsics, log_so3
from .image import load_image, save_image

META_NAME = "meta.json"
GROUND_TRUTH_NAME = "ground_truth.csv"
REMAP_NAME = "undistort.remap"

ROTATIONS_HEADER = "frame,t,wx,wy,wz,view_wx,view_wy,view_wz,lost,saccade"
METRICS_HEADER = ("frame,mode,nf_rms,delta_i_rms,sharpness,valid_pct,"
                  "omega_img,omega_view")


class DataError(Exception):
    """Missing or malformed dataset content."""


class ConfigError(Exception):
    """Malformed configuration."""


def frame_name(index: int) -> str:
    return f"frame_{index:06d}.png"


@dataclass
class DatasetMeta:
    fps: float
    width: int
    height: int
    intrinsics: Intrinsics
    downsample: int = 1

    def to_dict(self) -> dict:
        return {"fps": self.fps, "width": self.width, "height": self.height,
                "downsample": self.downsample,
                "intrinsics": self.intrinsics.to_dict()}


def load_meta(dataset_dir) -> DatasetMeta:
    path = os.path.join(dataset_dir, META_NAME)
    try:
        with open(path) as f:
            d = json.load(f)
    except FileNotFoundError:
        raise DataError(f"no {META_NAME} in {dataset_dir}")
    except json.JSONDecodeError as e:
        raise DataError(f"malformed {path}: {e}")
    try:
        return DatasetMeta(fps=float(d["fps"]), width=int(d["width"]),
                           height=int(d["height"]),
                           intrinsics=Intrinsics.from_dict(d["intrinsics"]),
                           downsample=int(d.get("downsample", 1)))
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"bad meta in {path}: {e}")


def list_frames(dataset_dir) -> list:
    """Paths of consecutive numbered frames, starting at index 0."""
    paths = []
    i = 0
    while True:
        p = os.path.join(dataset_dir, frame_name(i))
        if not os.path.exists(p):
            break
        paths.append(p)
        i += 1
    if not paths:
        raise DataError(f"no frames found in {dataset_dir}")
    return paths


def write_dataset(out_dir, frames, intrinsics: Intrinsics, fps: float,
                  rotations=None, downsample: int = 1) -> None:
    os.makedirs(out_dir, exist_ok=True)
    meta = DatasetMeta(fps=fps, width=intrinsics.width, height=intrinsics.height,
                       intrinsics=intrinsics, downsample=downsample)
    with open(os.path.join(out_dir, META_NAME), "w") as f:
        json.dump(meta.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    for frame in frames:
        save_image(os.path.join(out_dir, frame_name(frame.index)), frame.pixels)
    if rotations is not None:
        with open(os.path.join(out_dir, GROUND_TRUTH_NAME), "w") as f:
            f.write("frame,t,wx,wy,wz\n")
            for frame, R in zip(frames, rotations):
                w = log_so3(R)
                f.write(f"{frame.index},{frame.timestamp:.9f},"
                        f"{w[0]:.12e},{w[1]:.12e},{w[2]:.12e}\n")


def read_ground_truth(dataset_dir):
    """Returns (timestamps, rotation vectors (N, 3)) or None if absent."""
    path = os.path.join(dataset_dir, GROUND_TRUTH_NAME)
    if not os.path.exists(path):
        return None
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return rows[:, 1], rows[:, 2:5]


class RotationsWriter:
    def __init__(self, path):
        self._f = open(path, "w")
        self._f.write(ROTATIONS_HEADER + "\n")

    def write(self, frame: int, t: float, w_est, w_view, lost: bool,
              saccade: bool) -> None:
        self._f.write(
            f"{frame},{t:.9f},"
            f"{w_est[0]:.12e},{w_est[1]:.12e},{w_est[2]:.12e},"
            f"{w_view[0]:.12e},{w_view[1]:.12e},{w_view[2]:.12e},"
            f"{int(lost)},{int(saccade)}\n")

    def close(self):
        self._f.close()


def read_rotations(path):
    """Returns dict of columns from a rotations CSV."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {"frame": rows[:, 0].astype(int), "t": rows[:, 1],
            "w_est": rows[:, 2:5], "w_view": rows[:, 5:8],
            "lost": rows[:, 8].astype(bool), "saccade": rows[:, 9].astype(bool)}


class MetricsWriter:
    def __init__(self, path):
        self._f = open(path, "w")
        self._f.write(METRICS_HEADER + "\n")

    def write(self, frame: int, mode: str, m) -> None:
        self._f.write(
            f"{frame},{mode},{m.nf_rms:.9e},{m.delta_i_rms:.9e},"
            f"{m.sharpness:.9e},{m.valid_pct:.6f},"
            f"{m.omega_img:.6f},{m.omega_view:.6f}\n")

    def close(self):
        self._f.close()


def read_metrics(path):
    frames = []
    modes = []
    cols = {k: [] for k in ("nf_rms", "delta_i_rms", "sharpness", "valid_pct",
                            "omega_img", "omega_view")}
    with open(path) as f:
        header = f.readline().strip().split(",")
        for line in f:
            parts = line.strip().split(",")
            frames.append(int(parts[0]))
            modes.append(parts[1])
            for k, v in zip(header[2:], parts[2:]):
                cols[k].append(float(v))
    out = {k: np.array(v) for k, v in cols.items()}
    out["frame"] = np.array(frames)
    out["mode"] = modes
    return out


def rms(values) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.sqrt(np.mean(values ** 2))) if values.size else 0.0
