"""SO(3)/so(3) algebra, pinhole intrinsics, and the rotation-induced pixel warp.

Conventions used throughout the package:

- Rotation vectors (axis-angle, radians) live in so(3); rotation matrices in SO(3).
- Updates are right-multiplied: R <- R @ exp_so3(omega).
- Image-plane points are homogeneous with implicit z = 1; after applying a
  rotation the result is renormalized by its third component. Points whose
  third component drops below MIN_RAY_DEPTH are behind the camera and flagged
  invalid instead of being clamped.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

# Taylor fallbacks through the small-angle singularities.
EXP_TAYLOR_THRESHOLD = 1e-8
LOG_TAYLOR_THRESHOLD = 1e-6
# Rotations this close to pi have no usable logarithm.
ANTIPODAL_MARGIN = 1e-6
# Minimum homogeneous z for a ray to count as in front of the camera.
MIN_RAY_DEPTH = 1e-6


class NearAntipodalError(ValueError):
    """Rotation angle too close to pi for a unique logarithm."""


def hat(omega) -> np.ndarray:
    """Skew-symmetric matrix of a 3-vector (so(3) hat operator)."""
    wx, wy, wz = omega
    return np.array([[0.0, -wz, wy],
                     [wz, 0.0, -wx],
                     [-wy, wx, 0.0]])


def exp_so3(omega) -> np.ndarray:
    """Rodrigues formula; second-order Taylor below EXP_TAYLOR_THRESHOLD."""
    omega = np.asarray(omega, dtype=float)
    theta = float(np.linalg.norm(omega))
    W = hat(omega)
    if theta < EXP_TAYLOR_THRESHOLD:
        return np.eye(3) + W + 0.5 * (W @ W)
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * W + b * (W @ W)


def log_so3(R) -> np.ndarray:
    """Rotation vector of R. Raises NearAntipodalError for angles >= pi - margin."""
    R = np.asarray(R, dtype=float)
    cos_theta = min(1.0, max(-1.0, (float(np.trace(R)) - 1.0) / 2.0))
    theta = math.acos(cos_theta)
    if theta >= math.pi - ANTIPODAL_MARGIN:
        raise NearAntipodalError(f"rotation angle {theta:.9f} too close to pi")
    v = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    if theta < LOG_TAYLOR_THRESHOLD:
        # First-order skew extraction; avoids 0/0 of theta/sin(theta).
        return 0.5 * v
    return (theta / (2.0 * math.sin(theta))) * v


def is_rotation(R, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        return False
    return (np.abs(R.T @ R - np.eye(3)).max() <= tol
            and abs(float(np.linalg.det(R)) - 1.0) <= tol)


def geodesic_angle(R_a, R_b) -> float:
    """Angle of R_a^T R_b, the natural distance on SO(3), in radians."""
    return float(np.linalg.norm(log_so3(np.asarray(R_a).T @ np.asarray(R_b))))


def rotational_warp(R, p):
    """Warp a normalized image-plane point by a rotation.

    Returns ((x', y'), valid). The point (x, y) is lifted to (x, y, 1),
    rotated, and divided by its third component. valid is False when the
    rotated ray falls behind the camera (z <= MIN_RAY_DEPTH); the returned
    coordinates are then meaningless and the caller must discard them.
    """
    x, y = p
    q = np.asarray(R, dtype=float) @ np.array([x, y, 1.0])
    if q[2] <= MIN_RAY_DEPTH:
        return (0.0, 0.0), False
    return (q[0] / q[2], q[1] / q[2]), True


def warp_points(R, points: np.ndarray):
    """Vectorized rotational_warp.

    points: (N, 2) normalized coordinates. Returns (warped (N, 2), valid (N,)).
    Invalid rows are zeroed.
    """
    points = np.asarray(points, dtype=float)
    ph = np.empty((3, points.shape[0]))
    ph[0] = points[:, 0]
    ph[1] = points[:, 1]
    ph[2] = 1.0
    q = np.asarray(R, dtype=float) @ ph
    valid = q[2] > MIN_RAY_DEPTH
    z = np.where(valid, q[2], 1.0)
    out = np.stack([q[0] / z, q[1] / z], axis=1)
    out[~valid] = 0.0
    return out, valid


def warp_jacobian(p) -> np.ndarray:
    """Derivative of rotational_warp(exp_so3(w), p) w.r.t. w at w = 0.

    Right-multiplied generator convention; verified against central finite
    differences in the test suite rather than trusted on paper.
    """
    x, y = p
    return np.array([[-x * y, 1.0 + x * x, -y],
                     [-(1.0 + y * y), x * y, x]])


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole camera matrix K, plus the image size it applies to."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    def scaled(self, factor: int) -> "Intrinsics":
        """Intrinsics after block-downsampling the image by an integer factor."""
        return Intrinsics(self.fx / factor, self.fy / factor,
                          self.cx / factor, self.cy / factor,
                          self.width // factor, self.height // factor)

    def cropped(self, left: int, top: int, width: int, height: int) -> "Intrinsics":
        """Intrinsics after removing `left` columns and `top` rows."""
        return Intrinsics(self.fx, self.fy, self.cx - left, self.cy - top,
                          width, height)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Intrinsics":
        return cls(fx=float(d["fx"]), fy=float(d["fy"]),
                   cx=float(d["cx"]), cy=float(d["cy"]),
                   width=int(d["width"]), height=int(d["height"]))

    @classmethod
    def from_json_file(cls, path) -> "Intrinsics":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def pixel_to_normalized(K: Intrinsics, pixel):
    """Pixel coordinates -> dimensionless image-plane coordinates."""
    px, py = pixel
    return ((np.asarray(px, dtype=float) - K.cx) / K.fx,
            (np.asarray(py, dtype=float) - K.cy) / K.fy)


def normalized_to_pixel(K: Intrinsics, p):
    x, y = p
    return (K.fx * np.asarray(x, dtype=float) + K.cx,
            K.fy * np.asarray(y, dtype=float) + K.cy)
