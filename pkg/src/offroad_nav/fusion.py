"""Fuse the scan buffer into a vehicle-centered map bundle.

Steps: recency-weighted average of buffered heights, unwrap around the
vehicle, normalized-convolution hole filling, numerical gradient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import EmptyBufferError
from .grid import GridSpec, LayerRingBuffer, Pose2D, RoiTracker


@dataclass(frozen=True)
class MapBundle:
    spec: GridSpec
    origin: Pose2D  # world position of the lower-left corner of cell (0, 0)
    height: np.ndarray  # NaN where unknown
    height_filled: np.ndarray
    gradient_mag: np.ndarray
    obstacle: np.ndarray
    certainty: np.ndarray  # after hole filling
    certainty_raw: np.ndarray
    stamp: float = 0.0

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        res = self.spec.resolution
        return (math.floor((x - self.origin.x) / res), math.floor((y - self.origin.y) / res))

    def layers(self) -> dict[str, np.ndarray]:
        return {
            "height": self.height,
            "height_filled": self.height_filled,
            "gradient": self.gradient_mag,
            "obstacle": self.obstacle,
            "certainty": self.certainty,
            "certainty_raw": self.certainty_raw,
        }


def recency_weights(n: int) -> np.ndarray:
    """f(i) = (n - i) / n for i = 0 (newest) .. n - 1 (oldest)."""
    return (n - np.arange(n)) / n


def fuse_buffer(buf: LayerRingBuffer) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Weighted average of buffered max-height layers, in wrapped memory layout.

    Returns ``(height, certainty, obstacle)``.  Height is NaN where no slot
    carries weight; certainty is the total weight normalized by the weight a
    cell seen in every slot would get; obstacle is the OR over slots.
    """
    if len(buf) == 0:
        raise EmptyBufferError("cannot fuse an empty buffer")
    f = recency_weights(buf.n)
    shape = (buf.spec.size, buf.spec.size)
    num = np.zeros(shape)
    den = np.zeros(shape)
    obstacle = np.zeros(shape, dtype=bool)
    for i, layers in enumerate(buf):
        c = layers.certainty.cells
        w = c * f[i]
        seen = c > 0
        num += np.where(seen, layers.max_height.cells, 0.0) * w
        den += w
        obstacle |= layers.obstacle.cells > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        height = np.where(den > 0, num / den, np.nan)
    certainty = den / f.sum()
    return height, certainty, obstacle.astype(float)


def recenter(layer: np.ndarray, robot: Pose2D, roi: RoiTracker, fill: float = math.nan
             ) -> tuple[np.ndarray, Pose2D]:
    """Unwrap a memory-layout layer so the robot's cell sits at (size//2, size//2).

    Cells outside the ROI window get ``fill``.  Returns the centered array and
    the world origin (lower-left corner) of its cell (0, 0).
    """
    spec = roi.spec
    size = spec.size
    half = size // 2
    col0 = spec.global_index(robot.x) - half
    row0 = spec.global_index(robot.y) - half
    out = np.roll(layer, shift=(-row0 % size, -col0 % size), axis=(0, 1))
    h = roi.half_cells
    lo, hi = half - h, half + h + 1
    if lo > 0 or hi < size:
        out[:lo, :] = fill
        out[hi:, :] = fill
        out[:, :lo] = fill
        out[:, hi:] = fill
    return out, Pose2D(col0 * spec.resolution, row0 * spec.resolution, 0.0)


def gaussian_kernel_1d(sigma: float = 2.0, radius: int = 3) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=float)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _smooth(a: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    if kernel.ndim == 1:
        tmp = ndimage.correlate1d(a, kernel, axis=0, mode="constant", cval=0.0)
        return ndimage.correlate1d(tmp, kernel, axis=1, mode="constant", cval=0.0)
    return ndimage.correlate(a, kernel, mode="constant", cval=0.0)


def fill_holes(height: np.ndarray, certainty: np.ndarray, kernel: np.ndarray | None = None,
               exclude: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Normalized convolution applied to unknown cells only.

    ``kernel`` is either a 1D separable kernel or a full 2D kernel; the
    default is a 7-tap Gaussian with sigma 2 cells.  Known cells keep their
    values; unknown cells with no known neighbour inside the kernel stay NaN
    (height) and 0 (certainty).

    Cells in the boolean mask ``exclude`` (typically obstacles) keep their
    own values but do not feed the interpolation, so a post's top height is
    not smeared across the ground around it.
    """
    if kernel is None:
        kernel = gaussian_kernel_1d()
    kernel = np.asarray(kernel, dtype=float)
    if np.any(kernel < 0) or kernel.sum() <= 0:
        raise ValueError("kernel must be non-negative with positive mass")
    known = np.isfinite(height) & (certainty > 0)
    source = known if exclude is None else known & ~np.asarray(exclude, dtype=bool)
    c = np.where(source, certainty, 0.0)
    num = _smooth(np.where(source, height, 0.0) * c, kernel)
    den = _smooth(c, kernel)
    mass = kernel.sum() ** 2 if kernel.ndim == 1 else kernel.sum()
    unknown = ~known
    fillable = unknown & (den > 0)
    h_out = np.where(known, height, np.nan)
    h_out[fillable] = num[fillable] / den[fillable]
    c_out = np.where(known, certainty, 0.0)
    c_out[unknown] = np.clip(den[unknown] / mass, 0.0, 1.0)
    return h_out, c_out


def compute_gradient(height_filled: np.ndarray, resolution: float) -> np.ndarray:
    """Slope magnitude (m/m) by central differences, one-sided at the borders."""
    gy, gx = np.gradient(height_filled, resolution)
    mag = np.hypot(gx, gy)
    mag[~np.isfinite(height_filled)] = np.nan
    return mag


def build_bundle(buf: LayerRingBuffer, robot: Pose2D, roi: RoiTracker,
                 kernel: np.ndarray | None = None, stamp: float = 0.0) -> MapBundle:
    height_w, cert_w, obst_w = fuse_buffer(buf)
    height, origin = recenter(height_w, robot, roi, math.nan)
    cert_raw, _ = recenter(cert_w, robot, roi, 0.0)
    obstacle, _ = recenter(obst_w, robot, roi, 0.0)
    filled, cert = fill_holes(height, cert_raw, kernel, exclude=obstacle > 0)
    grad = compute_gradient(filled, roi.spec.resolution)
    return MapBundle(roi.spec, origin, height, filled, grad, obstacle, cert, cert_raw, stamp)
