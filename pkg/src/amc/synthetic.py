"""Synthetic ground-truth harness.

Renders pure-rotation camera views of a wide-FOV source image. Because the
scene is at infinity, the rotation-only pixel correspondence is exact, so
rendered sequences come with exact ground-truth rotations: ideal oracles for
the tracker and the full pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import Intrinsics, exp_so3
from .image import Frame, warp_frame


class FovExceededError(ValueError):
    """Requested view leaves the source image's field of view."""


def camera_intrinsics(width: int = 320, height: int = 180,
                      fov_x_deg: float = 60.0) -> Intrinsics:
    fx = (width / 2.0) / math.tan(math.radians(fov_x_deg) / 2.0)
    return Intrinsics(fx=fx, fy=fx, cx=(width - 1) / 2.0, cy=(height - 1) / 2.0,
                      width=width, height=height)


def wide_intrinsics(size: int = 2048, fov_deg: float = 120.0) -> Intrinsics:
    return camera_intrinsics(width=size, height=size, fov_x_deg=fov_deg)


def smooth_texture(size: int = 2048, seed: int = 0) -> np.ndarray:
    """Procedural multi-octave RGB texture, smooth enough for bilinear warps.

    Octave cell counts span coarse structure down to a few source pixels so
    rendered camera views carry gradient energy at all scales.
    """
    rng = np.random.default_rng(seed)
    octaves = [(8, 1.0), (16, 0.7), (32, 0.5), (64, 0.35),
               (128, 0.3), (256, 0.3), (512, 0.3), (1024, 0.15)]
    base = np.zeros((size, size))
    for cells, weight in octaves:
        noise = rng.standard_normal((cells, cells))
        base += weight * ndimage.zoom(noise, size / cells, order=3,
                                      mode="grid-wrap", grid_mode=True)
    lo, hi = np.percentile(base, [0.5, 99.5])
    base = np.clip((base - lo) / (hi - lo), 0.0, 1.0) * 0.85 + 0.075
    tint = rng.standard_normal((16, 16, 3)) * 0.04
    tint = ndimage.zoom(tint, (size / 16, size / 16, 1), order=3,
                        mode="grid-wrap", grid_mode=True)
    return np.clip(base[..., None] + tint, 0.0, 1.0)


def test_chart(size: int = 2048) -> np.ndarray:
    """Deterministic chart: gratings at several orientations plus a radial sweep."""
    y, x = np.mgrid[0:size, 0:size] / size
    img = 0.5 + 0.15 * np.sin(2 * np.pi * 40 * x) * np.sin(2 * np.pi * 40 * y)
    img += 0.12 * np.sin(2 * np.pi * 90 * (0.6 * x + 0.8 * y))
    r = np.hypot(x - 0.5, y - 0.5)
    img += 0.12 * np.sin(2 * np.pi * 60 * r)
    img = np.clip(img, 0.05, 0.95)
    rgb = np.stack([img, np.roll(img, size // 64, axis=0),
                    np.roll(img, size // 64, axis=1)], axis=-1)
    return rgb


def render_view(source: np.ndarray, K_source: Intrinsics, R: np.ndarray,
                K_cam: Intrinsics) -> np.ndarray:
    """Render the camera view at orientation R (camera-to-source rotation).

    Raises FovExceededError if any camera pixel would sample outside the
    source; the oracle is never silently cropped.
    """
    out, counts = warp_frame(source, R, K_source, K_cam)
    if not counts.all():
        raise FovExceededError(
            "camera view leaves the source FOV "
            f"({100 * (1 - counts.mean()):.2f}% of pixels uncovered)")
    return out


@dataclass(frozen=True)
class Sinusoid:
    axis: tuple  # unit-ish 3-vector scaling the oscillation
    amplitude: float  # radians
    frequency: float  # Hz
    phase: float = 0.0  # radians


@dataclass(frozen=True)
class ShakeTrajectory:
    """Rotation-vector schedule: slow base drift plus per-axis sinusoids."""

    fps: float
    duration: float
    sinusoids: tuple = ()
    base_rate: tuple = (0.0, 0.0, 0.0)  # rad/s

    def __post_init__(self):
        for s in self.sinusoids:
            if abs(s.amplitude) >= 0.2:
                raise ValueError("sinusoid amplitudes must stay below 0.2 rad")
            if s.frequency >= self.fps / 2.0:
                raise ValueError("sinusoid frequency violates Nyquist")

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * self.fps))

    def rotation_vector(self, t: float) -> np.ndarray:
        v = np.asarray(self.base_rate, dtype=float) * t
        for s in self.sinusoids:
            v = v + (s.amplitude
                     * math.sin(2.0 * math.pi * s.frequency * t + s.phase)
                     ) * np.asarray(s.axis, dtype=float)
        return v

    def rotation(self, t: float) -> np.ndarray:
        return exp_so3(self.rotation_vector(t))

    @classmethod
    def from_dict(cls, d: dict) -> "ShakeTrajectory":
        sinusoids = tuple(
            Sinusoid(axis=tuple(s["axis"]), amplitude=float(s["amplitude"]),
                     frequency=float(s["frequency"]),
                     phase=float(s.get("phase", 0.0)))
            for s in d.get("sinusoids", []))
        return cls(fps=float(d["fps"]), duration=float(d["duration"]),
                   sinusoids=sinusoids,
                   base_rate=tuple(d.get("base_rate", (0.0, 0.0, 0.0))))


def generate_sequence(source: np.ndarray, K_source: Intrinsics,
                      trajectory: ShakeTrajectory, K_cam: Intrinsics):
    """Render one frame per 1/fps. Returns (frames, rotations).

    rotations[i] is the exact camera orientation of frame i; note the
    tracker's cumulative estimate is relative to frame 0, i.e. it estimates
    rotations[0]^T @ rotations[i].
    """
    frames = []
    rotations = []
    for i in range(trajectory.n_frames):
        t = i / trajectory.fps
        R = trajectory.rotation(t)
        img = render_view(source, K_source, R, K_cam)
        frames.append(Frame(pixels=img, timestamp=t, index=i))
        rotations.append(R)
    return frames, rotations


# Amplitude giving roughly 1.1 px unstabilized normal-flow RMS with the
# default 320x180 / 60 deg camera at 60 fps (checked by the test suite).
FLAPPER12_AMPLITUDE = 7.5e-3


def flapper12_trajectory(fps: float = 60.0, duration: float = 20.0,
                         amplitude: float = FLAPPER12_AMPLITUDE) -> ShakeTrajectory:
    """Flapping-style shake: 12 Hz fundamental plus a 24 Hz harmonic at half
    amplitude on all three axes, with distinct phases."""
    a = amplitude
    sinusoids = (
        Sinusoid(axis=(1.0, 0.0, 0.0), amplitude=a, frequency=12.0, phase=0.0),
        Sinusoid(axis=(0.0, 1.0, 0.0), amplitude=a, frequency=12.0, phase=2.1),
        Sinusoid(axis=(0.0, 0.0, 1.0), amplitude=1.6 * a, frequency=12.0, phase=4.2),
        Sinusoid(axis=(1.0, 0.0, 0.0), amplitude=0.5 * a, frequency=24.0, phase=1.3),
        Sinusoid(axis=(0.0, 1.0, 0.0), amplitude=0.5 * a, frequency=24.0, phase=3.4),
        Sinusoid(axis=(0.0, 0.0, 1.0), amplitude=0.8 * a, frequency=24.0, phase=5.5),
    )
    return ShakeTrajectory(fps=fps, duration=duration, sinusoids=sinusoids)


def static_trajectory(fps: float = 60.0, duration: float = 2.0) -> ShakeTrajectory:
    return ShakeTrajectory(fps=fps, duration=duration)


def yaw_drift_trajectory(fps: float = 60.0, duration: float = 5.0,
                         rate_deg_s: float = 9.0,
                         amplitude: float = FLAPPER12_AMPLITUDE) -> ShakeTrajectory:
    """Slow constant yaw plus flapping shake; drives periodic saccades."""
    base = flapper12_trajectory(fps=fps, duration=duration, amplitude=amplitude)
    return ShakeTrajectory(fps=fps, duration=duration,
                           sinusoids=base.sinusoids,
                           base_rate=(0.0, math.radians(rate_deg_s), 0.0))


TRAJECTORY_PRESETS = {
    "flapper12": flapper12_trajectory,
    "static": static_trajectory,
    "yawdrift": yaw_drift_trajectory,
}
