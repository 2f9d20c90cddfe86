"""Inverse-compositional Lucas-Kanade rotation estimation.

The tracker aligns a gray template frame I_k against a later frame I_j by
minimizing the mean squared intensity error over a 3-DOF rotational warp.
Gradients, per-pixel steepest-descent rows, and the approximate Hessian are
precomputed once per template; each iteration only resamples the current
frame and solves a 3x3 system.

The estimated rotation R maps template coordinates to current-frame
coordinates: I_k(p) ~= I_j(warp(R, p)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import Intrinsics, exp_so3
from .image import normalized_grid, sobel_gradients

HESSIAN_CONDITION_LIMIT = 1e8


class DegenerateTemplateError(ValueError):
    """Template image lacks the gradient structure needed to estimate rotation."""


class InsufficientOverlapError(RuntimeError):
    """Too few template pixels sample validly inside the current frame."""


@dataclass
class TrackerConfig:
    max_iterations: int = 20
    step_tolerance: float = 1e-5  # radians
    max_line_search_halvings: int = 8
    min_valid_fraction: float = 0.5

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.step_tolerance <= 0:
            raise ValueError("step_tolerance must be positive")


@dataclass
class Template:
    """Precomputed alignment state for one template frame."""

    values: np.ndarray           # (N,) template intensities
    steepest_descent: np.ndarray  # (N, 3) rows J_i = grad I (p_i) . dwarp/domega
    hessian: np.ndarray          # (3, 3) sum of J_i J_i^T
    grid: np.ndarray             # (3, N) homogeneous normalized pixel coords
    intrinsics: Intrinsics
    valid_pixels: np.ndarray = field(repr=False, default=None)

    @property
    def num_pixels(self) -> int:
        return self.values.size


@dataclass
class TrackResult:
    rotation: np.ndarray  # template-to-current sense (see module docstring)
    final_loss: float
    iterations: int
    converged: bool
    losses: list = field(default_factory=list)  # initial + accepted losses


def build_template(img: np.ndarray, K: Intrinsics) -> Template:
    """Assemble steepest-descent rows and the fixed Hessian for a gray frame.

    All pixels participate; gradient-magnitude culling is a metrics-side
    concern, not a tracker one.
    """
    if img.ndim != 2:
        raise ValueError("template must be a single-channel image")
    gx, gy = sobel_gradients(img)
    grid = normalized_grid(K)
    x = grid[0]
    y = grid[1]
    # Chain rule: image gradient is per pixel, the warp derivative per
    # normalized unit, so fold the focal lengths into the gradient.
    gxn = gx.ravel() * K.fx
    gyn = gy.ravel() * K.fy
    J = np.empty((x.size, 3))
    J[:, 0] = gxn * (-x * y) + gyn * (-(1.0 + y * y))
    J[:, 1] = gxn * (1.0 + x * x) + gyn * (x * y)
    J[:, 2] = gxn * (-y) + gyn * x
    H = J.T @ J
    if np.linalg.cond(H) > HESSIAN_CONDITION_LIMIT:
        raise DegenerateTemplateError(
            "template Hessian is numerically singular (condition number "
            f"{np.linalg.cond(H):.3g})")
    return Template(values=img.ravel().copy(), steepest_descent=J, hessian=H,
                    grid=grid, intrinsics=K,
                    valid_pixels=np.arange(x.size))


def _residuals(tpl: Template, img_j: np.ndarray, R: np.ndarray,
               min_valid_fraction: float):
    """Masked residuals of the alignment at R; raises on poor overlap."""
    vals, valid = _kernels.rot_sample(img_j, np.asarray(R, dtype=float),
                                      tpl.grid, tpl.intrinsics)
    n_valid = int(valid.sum())
    if n_valid < min_valid_fraction * tpl.num_pixels:
        raise InsufficientOverlapError(
            f"only {n_valid}/{tpl.num_pixels} template pixels sampled validly")
    r = np.where(valid, tpl.values - vals, 0.0)
    return r, valid, n_valid


def loss_at(tpl: Template, img_j: np.ndarray, R: np.ndarray,
            min_valid_fraction: float = 0.5) -> float:
    """Mean squared intensity error of the alignment at R."""
    r, _, n_valid = _residuals(tpl, img_j, R, min_valid_fraction)
    return float(np.dot(r, r) / n_valid)


def gauss_newton_step(tpl: Template, img_j: np.ndarray, R: np.ndarray,
                      min_valid_fraction: float = 0.5):
    """One Gauss-Newton step in so(3) around the current estimate.

    Returns (omega_step, loss_at_R). The Hessian is the fixed template
    Hessian; pixels sampling outside img_j drop out of the residual sum only.
    """
    r, _, n_valid = _residuals(tpl, img_j, R, min_valid_fraction)
    omega = np.linalg.solve(tpl.hessian, tpl.steepest_descent.T @ r)
    return omega, float(np.dot(r, r) / n_valid)


def track(tpl: Template, img_j: np.ndarray, R_init: np.ndarray,
          cfg: TrackerConfig | None = None) -> TrackResult:
    """Iterate Gauss-Newton steps with a halving line search.

    Each step is accepted only if it strictly decreases the loss; if no step
    size does, the estimate is already at a fixed point and iteration stops.
    Residuals from an accepted line-search evaluation seed the next step, so
    each iteration costs one resampling pass in the common case.
    """
    cfg = cfg or TrackerConfig()
    R = np.asarray(R_init, dtype=float).copy()
    r, _, n_valid = _residuals(tpl, img_j, R, cfg.min_valid_fraction)
    loss = float(np.dot(r, r) / n_valid)
    losses = [loss]
    iterations = 0
    converged = False
    while iterations < cfg.max_iterations:
        iterations += 1
        omega = np.linalg.solve(tpl.hessian, tpl.steepest_descent.T @ r)
        beta = 1.0
        accepted = False
        for _ in range(cfg.max_line_search_halvings + 1):
            candidate = R @ exp_so3(beta * omega)
            try:
                cand_r, _, cand_n = _residuals(tpl, img_j, candidate,
                                               cfg.min_valid_fraction)
            except InsufficientOverlapError:
                beta *= 0.5
                continue
            cand_loss = float(np.dot(cand_r, cand_r) / cand_n)
            if cand_loss < loss:
                accepted = True
                break
            beta *= 0.5
        if not accepted:
            converged = True
            break
        R = candidate
        loss = cand_loss
        losses.append(loss)
        r = cand_r
        if beta * float(np.linalg.norm(omega)) < cfg.step_tolerance:
            converged = True
            break
    return TrackResult(rotation=R, final_loss=loss, iterations=iterations,
                       converged=converged, losses=losses)
