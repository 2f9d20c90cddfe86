"""First-order low-pass filter on SO(3) for the stable viewpoint.

Each update moves the view along the geodesic toward the current orientation
estimate by a magnitude-dependent gain alpha = min(1, a + b * |omega|).
Larger deltas get a larger gain so the view keeps up during fast rotations,
at the cost of admitting a little more of the shake.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import NearAntipodalError, exp_so3, log_so3


@dataclass(frozen=True)
class ViewFilterParams:
    a: float  # base gain, dimensionless
    b: float  # gain per radian of view-to-estimate delta
    dt: float  # inter-frame period, seconds

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValueError("gains must be non-negative")

    @classmethod
    def for_frame_rate(cls, fps: float) -> "ViewFilterParams":
        """Default gains: a = 2*dt, b = 40*dt."""
        dt = 1.0 / fps
        return cls(a=2.0 * dt, b=40.0 * dt, dt=dt)

    def gain(self, omega_norm: float) -> float:
        # Unclamped a + b|w| would overshoot past the target on the
        # connecting geodesic; cap at 1 (snap to the estimate).
        return min(1.0, self.a + self.b * omega_norm)


def update_view(R_view: np.ndarray, R_0j: np.ndarray,
                params: ViewFilterParams):
    """One filter step. Returns (new R_view, snapped flag).

    If the view and estimate are near-antipodal (no unique geodesic), the
    view snaps to the estimate outright; this is reported via the flag.
    """
    try:
        omega = log_so3(R_view.T @ R_0j)
    except NearAntipodalError:
        return np.asarray(R_0j, dtype=float).copy(), True
    alpha = params.gain(float(np.linalg.norm(omega)))
    return R_view @ exp_so3(alpha * omega), False


def view_angular_velocity(R_prev: np.ndarray, R_next: np.ndarray,
                          dt: float) -> float:
    """Geodesic speed between consecutive views, in degrees per second."""
    return math.degrees(float(np.linalg.norm(log_so3(R_prev.T @ R_next)))) / dt
