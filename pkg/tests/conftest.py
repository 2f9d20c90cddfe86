"""Shared fixtures: a wide procedural source and a render helper.

Rendering a narrow camera view of a wide source through a known rotation
gives exact ground truth (scene at infinity), which is the main oracle used
throughout the suite.
"""

import numpy as np
import pytest
from scipy import ndimage

from amc.geometry import exp_so3
from amc.image import rgb_to_gray
from amc.synthetic import camera_intrinsics, render_view, smooth_texture, wide_intrinsics


@pytest.fixture(scope="session")
def texture():
    return smooth_texture(2048, seed=0)


@pytest.fixture(scope="session")
def K_src():
    return wide_intrinsics(2048, fov_deg=120.0)


@pytest.fixture(scope="session")
def K_cam():
    return camera_intrinsics(320, 180, fov_x_deg=60.0)


@pytest.fixture(scope="session")
def render(texture, K_src, K_cam):
    """render(omega or R) -> RGB view of the textured source at that orientation."""

    def _render(rotation, K=K_cam):
        R = np.asarray(rotation, dtype=float)
        if R.shape != (3, 3):
            R = exp_so3(R)
        return render_view(texture, K_src, R, K)

    return _render


@pytest.fixture(scope="session")
def render_gray(render):
    def _render_gray(rotation, **kw):
        return rgb_to_gray(render(rotation, **kw))

    return _render_gray


@pytest.fixture(scope="session")
def texture_smooth(texture):
    """Low-pass version of the source: a wide convergence basin for tests that
    start the aligner several degrees from the answer."""
    return ndimage.gaussian_filter(texture, sigma=(3.0, 3.0, 0.0))


@pytest.fixture(scope="session")
def render_smooth_gray(texture_smooth, K_src, K_cam):
    def _render(rotation, K=K_cam):
        R = np.asarray(rotation, dtype=float)
        if R.shape != (3, 3):
            R = exp_so3(R)
        return rgb_to_gray(render_view(texture_smooth, K_src, R, K))

    return _render
