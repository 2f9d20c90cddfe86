"""Stabilization quality metrics.

All quantities are plain RMS statistics over pixels or frame pairs:
normal-flow magnitude, inter-frame intensity change, gradient-based
sharpness, valid-pixel percentage, and angular velocity of a rotation
sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import log_so3
from .image import sobel_gradients

# Pixels with spatial gradient magnitude below this are excluded from the
# normal-flow statistic (8-bit level 15).
NORMAL_FLOW_GRADIENT_THRESHOLD = 15.0 / 255.0


@dataclass
class FrameMetrics:
    nf_rms: float = 0.0        # pixels per frame
    delta_i_rms: float = 0.0   # intensity units
    sharpness: float = 0.0     # intensity per pixel
    valid_pct: float = 100.0   # percent of output pixels fully filled
    omega_img: float = 0.0     # deg/s, orientation estimate
    omega_view: float = 0.0    # deg/s, rendered viewpoint


def normal_flow(prev: np.ndarray, next: np.ndarray,
                gradient_threshold: float = NORMAL_FLOW_GRADIENT_THRESHOLD,
                mask: np.ndarray | None = None):
    """Per-pixel normal-flow magnitudes between two gray frames.

    The temporal derivative is the plain frame difference; spatial gradients
    come from the later frame. Returns (magnitudes, qualifying, rms) where
    qualifying marks pixels whose gradient magnitude reached the threshold.
    rms is 0 when no pixel qualifies.
    """
    if prev.shape != next.shape:
        raise ValueError("frame shapes differ")
    it = next - prev
    gx, gy = sobel_gradients(next)
    grad_sq = gx * gx + gy * gy
    qualifying = grad_sq >= gradient_threshold * gradient_threshold
    if mask is not None:
        qualifying &= mask
    mag = np.zeros_like(it)
    np.divide(np.abs(it), np.sqrt(grad_sq), out=mag, where=qualifying)
    if not qualifying.any():
        return mag, qualifying, 0.0
    rms = float(np.sqrt(np.mean(mag[qualifying] ** 2)))
    return mag, qualifying, rms


def delta_i_rms(prev: np.ndarray, next: np.ndarray,
                mask: np.ndarray | None = None) -> float:
    """RMS intensity difference, optionally over jointly-valid pixels only."""
    if prev.shape != next.shape:
        raise ValueError("frame shapes differ")
    diff = next - prev
    if mask is not None:
        if not mask.any():
            return 0.0
        diff = diff[mask]
    return float(np.sqrt(np.mean(diff ** 2)))


def sharpness(img: np.ndarray) -> float:
    """RMS gradient magnitude across all color channels."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("sharpness expects an (H, W, 3) image")
    gx, gy = sobel_gradients(img)
    return float(np.sqrt(np.mean(gx * gx + gy * gy)))


def valid_pixel_pct(counts: np.ndarray, full_count: int) -> float:
    """Percentage of pixels filled by every averaged frame."""
    return 100.0 * float(np.mean(counts == full_count))


def angular_velocity_rms(rotations, dt: float) -> float:
    """RMS of consecutive geodesic speeds, in degrees per second."""
    if len(rotations) < 2:
        raise ValueError("need at least two rotations")
    speeds = [np.linalg.norm(log_so3(np.asarray(a).T @ np.asarray(b))) / dt
              for a, b in zip(rotations[:-1], rotations[1:])]
    return math.degrees(float(np.sqrt(np.mean(np.square(speeds)))))
