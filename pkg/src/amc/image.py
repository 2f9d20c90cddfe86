"""Image containers, sampling, gradients, and full-frame rotational remapping.

Images are numpy float arrays with values in [0, 1], shaped (H, W) for gray
or (H, W, 3) for RGB. The Frame dataclass carries a pixel array together with
its timestamp and index; the functions below operate on the raw arrays.
"""

from __future__ import annotations

import functools
import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image

from . import _kernels
from .geometry import Intrinsics, MIN_RAY_DEPTH

REMAP_MAGIC = b"AMCREMAP"


@dataclass
class Frame:
    """A float image plus stream metadata."""

    pixels: np.ndarray  # (H, W) or (H, W, 3), values in [0, 1]
    timestamp: float = 0.0
    index: int = 0

    @property
    def shape(self):
        return self.pixels.shape


def bilinear_sample(img: np.ndarray, x, y):
    """Bilinearly sample img at continuous pixel coordinates.

    x, y may be scalars or arrays. Returns (values, valid) where valid is
    False wherever a sample would need a neighbor outside the image; those
    values are set to 0. Samples exactly on the border are valid.
    """
    h, w = img.shape[:2]
    scalar = np.ndim(x) == 0 and np.ndim(y) == 0
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    valid = (x >= 0) & (x <= w - 1) & (y >= 0) & (y <= h - 1)

    x0 = np.clip(np.floor(x).astype(np.intp), 0, w - 2)
    y0 = np.clip(np.floor(y).astype(np.intp), 0, h - 2)
    fx = np.clip(x, 0, w - 1) - x0
    fy = np.clip(y, 0, h - 1) - y0

    flat = img.reshape(h * w, -1)
    i00 = y0 * w + x0
    v00 = flat[i00]
    v01 = flat[i00 + 1]
    v10 = flat[i00 + w]
    v11 = flat[i00 + w + 1]

    w00 = ((1 - fx) * (1 - fy))[..., None]
    w01 = (fx * (1 - fy))[..., None]
    w10 = ((1 - fx) * fy)[..., None]
    w11 = (fx * fy)[..., None]
    vals = w00 * v00 + w01 * v01 + w10 * v10 + w11 * v11
    vals[~valid] = 0.0
    if img.ndim == 2:
        vals = vals[..., 0]
    if scalar:
        return (vals[0], bool(valid[0]))
    return vals, valid


def sobel_gradients(img: np.ndarray):
    """3x3 Sobel gradients with 1/8 normalization and replicate borders.

    Normalized so a unit-slope ramp (1 intensity per pixel) yields 1.0.
    Returns (gx, gy) with the same shape as img.
    """
    if img.ndim == 2:
        pad = np.pad(img, 1, mode="edge")
    else:
        pad = np.pad(img, ((1, 1), (1, 1), (0, 0)), mode="edge")
    smooth_v = pad[:-2] + 2.0 * pad[1:-1] + pad[2:]
    gx = (smooth_v[:, 2:] - smooth_v[:, :-2]) / 8.0
    smooth_h = pad[:, :-2] + 2.0 * pad[:, 1:-1] + pad[:, 2:]
    gy = (smooth_h[2:] - smooth_h[:-2]) / 8.0
    return gx, gy


def rgb_to_gray(img: np.ndarray) -> np.ndarray:
    """Rec.601 luma."""
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("rgb_to_gray expects an (H, W, 3) image")
    return img @ np.array([0.299, 0.587, 0.114])


def block_downsample(img: np.ndarray, factor: int) -> np.ndarray:
    """Area (block-mean) downsampling by an integer factor."""
    h, w = img.shape[:2]
    if h % factor or w % factor:
        raise ValueError(f"image size {w}x{h} not divisible by factor {factor}")
    if factor == 1:
        return img.copy()
    if img.ndim == 2:
        return img.reshape(h // factor, factor, w // factor, factor).mean(axis=(1, 3))
    return img.reshape(h // factor, factor, w // factor, factor, img.shape[2]).mean(axis=(1, 3))


@functools.lru_cache(maxsize=8)
def normalized_grid(K: Intrinsics) -> np.ndarray:
    """Homogeneous normalized coordinates of every pixel center, shape (3, H*W)."""
    xs = (np.arange(K.width) - K.cx) / K.fx
    ys = (np.arange(K.height) - K.cy) / K.fy
    gx, gy = np.meshgrid(xs, ys)
    grid = np.empty((3, K.width * K.height))
    grid[0] = gx.ravel()
    grid[1] = gy.ravel()
    grid[2] = 1.0
    return grid


def warp_frame(src: np.ndarray, R: np.ndarray, K_src: Intrinsics, K_dst: Intrinsics):
    """Remap src through a pure rotation.

    Each destination pixel is back-projected through K_dst, its ray rotated by
    R (destination-to-source sense), projected through K_src, and bilinearly
    sampled. Returns (out, count) where count is 1 where the sample was valid
    and 0 elsewhere (invalid pixels hold value 0).
    """
    grid = normalized_grid(K_dst)
    vals, valid = _kernels.rot_sample(src, R, grid, K_src)
    h, w = K_dst.height, K_dst.width
    if src.ndim == 2:
        out = vals.reshape(h, w)
    else:
        out = vals.reshape(h, w, src.shape[2])
    return out, valid.reshape(h, w).astype(np.int32)


def margin_sizes(width: int, height: int, margin_fraction: float):
    if not 0 <= margin_fraction < 0.5:
        raise ValueError("margin_fraction must be in [0, 0.5)")
    return int(margin_fraction * width), int(margin_fraction * height)


def crop_margins(img: np.ndarray, mask, margin_fraction: float):
    """Remove floor(margin*W) columns and floor(margin*H) rows per side."""
    h, w = img.shape[:2]
    mx, my = margin_sizes(w, h, margin_fraction)
    sl = (slice(my, h - my), slice(mx, w - mx))
    cropped = img[sl]
    return cropped, (None if mask is None else mask[sl])


def crop_intrinsics(K: Intrinsics, margin_fraction: float) -> Intrinsics:
    mx, my = margin_sizes(K.width, K.height, margin_fraction)
    return K.cropped(mx, my, K.width - 2 * mx, K.height - 2 * my)


def load_image(path) -> np.ndarray:
    """Read an 8-bit PNG as a float image in [0, 1]."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16"):
            arr = np.asarray(im.convert("L"), dtype=np.float64)
        else:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def save_image(path, img: np.ndarray) -> None:
    """Write a float image as 8-bit PNG, rounding half up."""
    arr = np.floor(np.clip(img, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(arr).save(path, format="PNG")


def load_remap(path) -> np.ndarray:
    """Read a precomputed undistortion remap.

    Format: magic "AMCREMAP", H and W as little-endian uint32, then H*W
    (x, y) float32 source-coordinate pairs in row-major order.
    Returns an (H, W, 2) float array.
    """
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != REMAP_MAGIC:
            raise ValueError(f"bad remap magic {magic!r}")
        h, w = struct.unpack("<II", f.read(8))
        data = np.fromfile(f, dtype="<f4", count=h * w * 2)
    if data.size != h * w * 2:
        raise ValueError("truncated remap file")
    return data.reshape(h, w, 2).astype(np.float64)


def save_remap(path, remap: np.ndarray) -> None:
    h, w = remap.shape[:2]
    with open(path, "wb") as f:
        f.write(REMAP_MAGIC)
        f.write(struct.pack("<II", h, w))
        remap.astype("<f4").tofile(f)


def apply_remap(img: np.ndarray, remap: np.ndarray):
    """Undistort by sampling img at the remap's source coordinates."""
    vals, valid = bilinear_sample(img, remap[..., 0].ravel(), remap[..., 1].ravel())
    h, w = remap.shape[:2]
    if img.ndim == 2:
        out = vals.reshape(h, w)
    else:
        out = vals.reshape(h, w, img.shape[2])
    return out, valid.reshape(h, w)
