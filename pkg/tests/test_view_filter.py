"""Low-pass viewpoint filter, checked against its scalar recursion."""

import math

import numpy as np
import pytest

from amc.geometry import exp_so3, geodesic_angle, log_so3
from amc.view_filter import ViewFilterParams, update_view, view_angular_velocity

DT60 = 1.0 / 60.0


class TestParams:
    def test_frame_rate_defaults(self):
        p = ViewFilterParams.for_frame_rate(60.0)
        assert math.isclose(p.a, 2.0 / 60.0)
        assert math.isclose(p.b, 40.0 / 60.0)
        assert math.isclose(p.dt, DT60)

    def test_gain_clamped(self):
        p = ViewFilterParams(a=0.5, b=10.0, dt=DT60)
        assert p.gain(0.0) == 0.5
        assert p.gain(1.0) == 1.0

    def test_negative_gains_rejected(self):
        with pytest.raises(ValueError):
            ViewFilterParams(a=-0.1, b=1.0, dt=DT60)


class TestUpdate:
    def test_fixed_point(self):
        R = exp_so3([0.2, -0.1, 0.3])
        p = ViewFilterParams.for_frame_rate(60.0)
        out, snapped = update_view(R, R, p)
        assert not snapped
        assert np.allclose(out, R, atol=1e-14)

    def test_contraction_exact_on_geodesic(self):
        """For a single-axis delta, the residual shrinks by exactly (1-alpha)."""
        p = ViewFilterParams.for_frame_rate(60.0)
        w = np.array([0.0, 0.05, 0.0])
        target = exp_so3(w)
        out, _ = update_view(np.eye(3), target, p)
        alpha = p.gain(float(np.linalg.norm(w)))
        residual = log_so3(out.T @ target)
        assert np.allclose(residual, (1.0 - alpha) * w, atol=1e-13)

    def test_large_delta_snaps(self):
        p = ViewFilterParams.for_frame_rate(60.0)
        # |w| large enough that a + b|w| >= 1 -> gain 1, exact catch-up
        target = exp_so3([0.0, 1.5, 0.0])
        out, snapped = update_view(np.eye(3), target, p)
        assert not snapped  # regular clamped update, not antipodal snap
        assert geodesic_angle(out, target) < 1e-12

    def test_antipodal_snap(self):
        p = ViewFilterParams.for_frame_rate(60.0)
        target = exp_so3([math.pi - 1e-7, 0.0, 0.0])
        out, snapped = update_view(np.eye(3), target, p)
        assert snapped
        assert np.array_equal(out, target)

    def test_matches_scalar_recursion(self):
        """Single-axis inputs reduce to d <- d * (1 - min(1, a + b d))."""
        p = ViewFilterParams.for_frame_rate(60.0)
        d = 0.08
        R_view = np.eye(3)
        target = exp_so3([0.0, 0.0, d])
        for _ in range(150):
            R_view, _ = update_view(R_view, target, p)
            d *= 1.0 - min(1.0, p.a + p.b * d)
            assert math.isclose(
                geodesic_angle(R_view, target), d, abs_tol=1e-12)
        assert d < 5e-3  # converged toward the target

    def test_attenuates_shake_frequency(self):
        """12 Hz single-axis sinusoid at 60 fps: steady-state view amplitude
        well below the input amplitude with the default gains."""
        p = ViewFilterParams.for_frame_rate(60.0)
        amp = np.radians(1.5)
        R_view = np.eye(3)
        angles = []
        for i in range(240):
            t = i / 60.0
            target = exp_so3([0.0, 0.0, amp * math.sin(2 * math.pi * 12 * t)])
            R_view, _ = update_view(R_view, target, p)
            angles.append(log_so3(R_view)[2])
        steady = np.array(angles[60:])
        assert steady.max() - steady.min() < 0.7 * (2 * amp)
        # and it is a genuine low-pass: a constant input is followed exactly
        assert np.abs(steady).max() < amp


class TestAngularVelocity:
    def test_zero(self):
        R = exp_so3([0.1, 0.0, 0.2])
        assert view_angular_velocity(R, R, DT60) == 0.0

    def test_one_degree_per_frame(self):
        R_a = np.eye(3)
        R_b = exp_so3([0.0, math.radians(1.0), 0.0])
        v = view_angular_velocity(R_a, R_b, DT60)
        assert math.isclose(v, 60.0, rel_tol=1e-9)
