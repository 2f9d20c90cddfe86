"""Numba-compiled hot loops: rotate-project-sample in one pass.

These mirror the semantics of geometry.rotational_warp followed by
image.bilinear_sample (same validity rules, same interpolation) without the
intermediate arrays; the test suite pins them against the numpy path.
"""

import numba
import numpy as np

MIN_RAY_DEPTH = 1e-6  # keep in sync with geometry.MIN_RAY_DEPTH


@numba.njit(cache=True)
def rot_sample_gray(img, R, grid, fx, fy, cx, cy):
    h, w = img.shape
    n = grid.shape[1]
    vals = np.zeros(n)
    valid = np.zeros(n, dtype=numba.boolean)
    for i in range(n):
        gx = grid[0, i]
        gy = grid[1, i]
        gz = grid[2, i]
        qz = R[2, 0] * gx + R[2, 1] * gy + R[2, 2] * gz
        if qz <= MIN_RAY_DEPTH:
            continue
        qx = R[0, 0] * gx + R[0, 1] * gy + R[0, 2] * gz
        qy = R[1, 0] * gx + R[1, 1] * gy + R[1, 2] * gz
        x = fx * (qx / qz) + cx
        y = fy * (qy / qz) + cy
        if x < 0.0 or x > w - 1 or y < 0.0 or y > h - 1:
            continue
        x0 = int(np.floor(x))
        y0 = int(np.floor(y))
        if x0 > w - 2:
            x0 = w - 2
        if y0 > h - 2:
            y0 = h - 2
        ax = x - x0
        ay = y - y0
        top = img[y0, x0] + ax * (img[y0, x0 + 1] - img[y0, x0])
        bot = img[y0 + 1, x0] + ax * (img[y0 + 1, x0 + 1] - img[y0 + 1, x0])
        vals[i] = top + ay * (bot - top)
        valid[i] = True
    return vals, valid


@numba.njit(cache=True)
def rot_sample_multi(img, R, grid, fx, fy, cx, cy):
    h, w, c = img.shape
    n = grid.shape[1]
    vals = np.zeros((n, c))
    valid = np.zeros(n, dtype=numba.boolean)
    for i in range(n):
        gx = grid[0, i]
        gy = grid[1, i]
        gz = grid[2, i]
        qz = R[2, 0] * gx + R[2, 1] * gy + R[2, 2] * gz
        if qz <= MIN_RAY_DEPTH:
            continue
        qx = R[0, 0] * gx + R[0, 1] * gy + R[0, 2] * gz
        qy = R[1, 0] * gx + R[1, 1] * gy + R[1, 2] * gz
        x = fx * (qx / qz) + cx
        y = fy * (qy / qz) + cy
        if x < 0.0 or x > w - 1 or y < 0.0 or y > h - 1:
            continue
        x0 = int(np.floor(x))
        y0 = int(np.floor(y))
        if x0 > w - 2:
            x0 = w - 2
        if y0 > h - 2:
            y0 = h - 2
        ax = x - x0
        ay = y - y0
        for k in range(c):
            top = img[y0, x0, k] + ax * (img[y0, x0 + 1, k] - img[y0, x0, k])
            bot = (img[y0 + 1, x0, k]
                   + ax * (img[y0 + 1, x0 + 1, k] - img[y0 + 1, x0, k]))
            vals[i, k] = top + ay * (bot - top)
        valid[i] = True
    return vals, valid


def rot_sample(img, R, grid, K):
    """Sample img at the projections of R @ grid through intrinsics K."""
    img = np.ascontiguousarray(img)
    R = np.ascontiguousarray(R, dtype=np.float64)
    if img.ndim == 2:
        return rot_sample_gray(img, R, grid, K.fx, K.fy, K.cx, K.cy)
    return rot_sample_multi(img, R, grid, K.fx, K.fy, K.cx, K.cy)
