"""Stabilized frame rendering.

Two modes:

- smooth: warp the last n_avg buffered frames to the current low-pass view
  and average them per pixel.
- saccade: hold a fixed viewpoint and maintain the running average with an
  O(1) add/subtract recursion; when too few output pixels are covered by
  every buffered frame, jump ("saccade") the viewpoint to the current
  orientation estimate and rebuild the accumulator.

Averaging divides by the per-pixel contribution count, so partially covered
pixels show real image content instead of darkened borders. A pixel counts
as valid for metrics only when every buffered frame contributed.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .geometry import Intrinsics
from .image import crop_margins, warp_frame


@dataclass
class StabilizerConfig:
    n_avg: int = 6
    margin_fraction: float = 0.125
    mode: str = "smooth"  # "smooth" | "saccade"
    saccade_valid_threshold: float = 0.90

    def __post_init__(self):
        if self.n_avg < 1:
            raise ValueError("n_avg must be >= 1")
        if not 0 <= self.margin_fraction < 0.5:
            raise ValueError("margin_fraction must be in [0, 0.5)")
        if not 0 < self.saccade_valid_threshold <= 1:
            raise ValueError("saccade_valid_threshold must be in (0, 1]")
        if self.mode not in ("smooth", "saccade"):
            raise ValueError(f"unknown mode {self.mode!r}")


class FrameBuffer:
    """Ring buffer of the last n_avg (frame, R_0i) pairs."""

    def __init__(self, capacity: int):
        self.entries: deque = deque(maxlen=capacity)

    def append(self, img: np.ndarray, R_0i: np.ndarray) -> None:
        self.entries.append((img, np.asarray(R_0i, dtype=float)))

    def __len__(self) -> int:
        return len(self.entries)


def _average(accum: np.ndarray, counts: np.ndarray) -> np.ndarray:
    denom = np.maximum(counts, 1)
    if accum.ndim == 3:
        denom = denom[..., None]
    return accum / denom


def stabilize_smooth(buffer: FrameBuffer, R_view: np.ndarray, K: Intrinsics,
                     config: StabilizerConfig):
    """Warp every buffered frame to R_view, average, and crop margins.

    Returns (frame, counts) where counts holds per-pixel contribution
    numbers for the cropped output.
    """
    if len(buffer) == 0:
        raise ValueError("frame buffer is empty")
    accum = None
    counts = None
    for img, R_0i in buffer.entries:
        # Destination pixel in the view frame samples source frame i via
        # R_0i^T R_view (view-normalized coords to frame-i coords).
        warped, c = warp_frame(img, R_0i.T @ R_view, K, K)
        if accum is None:
            accum = warped
            counts = c
        else:
            accum += warped
            counts += c
    out = _average(accum, counts)
    return crop_margins(out, counts, config.margin_fraction)


class SaccadeStabilizer:
    """Fixed-viewpoint stabilizer with the recursive running average."""

    def __init__(self, K: Intrinsics, config: StabilizerConfig):
        self.K = K
        self.config = config
        self.R_fixed: np.ndarray | None = None
        self.raw: deque = deque(maxlen=config.n_avg)      # (img, R_0i)
        self.warped: deque = deque(maxlen=config.n_avg)   # (warped, counts01)
        self.accum: np.ndarray | None = None
        self.counts: np.ndarray | None = None

    def process(self, img: np.ndarray, R_0j: np.ndarray):
        """Fold the next frame in; returns (frame, counts, saccaded)."""
        R_0j = np.asarray(R_0j, dtype=float)
        if self.R_fixed is None:
            self.R_fixed = R_0j.copy()
        if len(self.warped) == self.config.n_avg:
            old_w, old_c = self.warped[0]
            self.accum -= old_w
            self.counts -= old_c
        warped, c = warp_frame(img, R_0j.T @ self.R_fixed, self.K, self.K)
        self.raw.append((img, R_0j))
        self.warped.append((warped, c))
        if self.accum is None:
            self.accum = warped.copy()
            self.counts = c.copy()
        else:
            self.accum += warped
            self.counts += c

        out, counts = self._render()
        saccaded = False
        if self._filled_fraction(counts) < self.config.saccade_valid_threshold:
            self._saccade_to(R_0j)
            out, counts = self._render()
            saccaded = True
        return out, counts, saccaded

    def _render(self):
        out = _average(self.accum, self.counts)
        return crop_margins(out, self.counts, self.config.margin_fraction)

    def _filled_fraction(self, counts: np.ndarray) -> float:
        return float(np.mean(counts == len(self.warped)))

    def _saccade_to(self, R_0j: np.ndarray) -> None:
        """Jump the fixed viewpoint and rebuild the accumulator from scratch."""
        self.R_fixed = R_0j.copy()
        self.warped.clear()
        self.accum = None
        self.counts = None
        for img, R_0i in self.raw:
            warped, c = warp_frame(img, R_0i.T @ self.R_fixed, self.K, self.K)
            self.warped.append((warped, c))
            if self.accum is None:
                self.accum = warped.copy()
                self.counts = c.copy()
            else:
                self.accum += warped
                self.counts += c
