"""Image-modality preprocessing: background separation, resizing, stacking.

Output contract: a 112x112 RGB frame stack whose non-ROI pixels hold the
sentinel color exactly. Background is replaced *before* resizing and the
sentinel is re-stamped afterwards through a nearest-neighbor-resized mask,
because bilinear interpolation would otherwise blend sentinel and tissue
values and the sentinel must stay a color absent from the real data.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import DimensionMismatch, EmptyVolume, SentinelCollision
from .roi import DEFAULT_ORANGE_BOUNDS, RoiMask, _tight_bbox, crop_to_roi, detect_roi
from .volume_io import VolumeTensor

DEFAULT_SENTINEL = (0, 0, 255)  # pure blue
TARGET_SIZE = (112, 112)


def separate_background(
    v: VolumeTensor, r: RoiMask, sentinel: tuple[int, int, int] = DEFAULT_SENTINEL
) -> VolumeTensor:
    """Replace every non-ROI pixel of every frame with the sentinel color.

    ROI pixels are passed through bitwise. If the sentinel already occurs
    inside the ROI a :class:`SentinelCollision` warning is emitted and the
    replacement still completes.
    """
    if (r.height, r.width) != (v.height, v.width):
        raise DimensionMismatch(
            f"mask is {r.width}x{r.height} but frames are {v.width}x{v.height}"
        )
    sent = np.asarray(sentinel, dtype=np.uint8)
    inside = v.data[:, r.mask, :]
    if inside.size and bool(np.all(inside == sent, axis=-1).any()):
        warnings.warn(
            f"sentinel color {tuple(int(c) for c in sent)} occurs inside the ROI",
            SentinelCollision,
            stacklevel=2,
        )
    out = np.where(r.mask[None, :, :, None], v.data, sent[None, None, None, :])
    return VolumeTensor(out.astype(np.uint8))


def _linear_coords(src_len: int, dst_len: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Half-pixel-centered source sampling for one axis.

    Returns (lo, hi, frac): integer neighbor indices clamped to the source
    range and the fractional weight of ``hi``.
    """
    scale = src_len / dst_len
    centers = (np.arange(dst_len, dtype=np.float64) + 0.5) * scale - 0.5
    lo = np.floor(centers).astype(np.int64)
    frac = centers - lo
    hi = np.clip(lo + 1, 0, src_len - 1)
    lo = np.clip(lo, 0, src_len - 1)
    return lo, hi, frac


def resize_frames(v: VolumeTensor, target: tuple[int, int] = TARGET_SIZE) -> VolumeTensor:
    """Resize every frame independently with half-pixel-centered bilinear sampling.

    Values are rounded half away from zero back to 8 bits. The convention is
    pinned down to the float64 operation order so independent implementations
    agree bitwise: scale = src/dst, center = (i + 0.5) * scale - 0.5,
    neighbors clamped to the frame, then lerp along y as v0 + f * (v1 - v0)
    and the two row values along x the same way. A same-size target is an
    exact identity.
    """
    tw, th = target
    if tw < 1 or th < 1:
        raise ValueError(f"target size must be positive, got {target}")
    if v.depth < 1:
        raise EmptyVolume("cannot resize an empty volume")

    x_lo, x_hi, fx = _linear_coords(v.width, tw)
    y_lo, y_hi, fy = _linear_coords(v.height, th)

    data = v.data.astype(np.float64)
    top = data[:, y_lo, :, :]
    bot = data[:, y_hi, :, :]
    rows = top + fy[None, :, None, None] * (bot - top)
    left = rows[:, :, x_lo, :]
    right = rows[:, :, x_hi, :]
    out = left + fx[None, None, :, None] * (right - left)

    # round half away from zero; values are non-negative here
    out = np.floor(out + 0.5)
    return VolumeTensor(np.clip(out, 0, 255).astype(np.uint8))


def _nearest_indices(src_len: int, dst_len: int) -> np.ndarray:
    # round-half-up of the half-pixel mapping: floor((i + 0.5) * scale)
    idx = np.floor((np.arange(dst_len, dtype=np.float64) + 0.5) * (src_len / dst_len))
    return np.clip(idx.astype(np.int64), 0, src_len - 1)


def resize_mask_nearest(r: RoiMask, target: tuple[int, int] = TARGET_SIZE) -> RoiMask:
    """Nearest-neighbor mask resize on the same half-pixel grid as resize_frames."""
    tw, th = target
    xs = _nearest_indices(r.width, tw)
    ys = _nearest_indices(r.height, th)
    sub = r.mask[np.ix_(ys, xs)]
    return RoiMask(mask=sub, bbox=_tight_bbox(sub))


def build_image_stream(
    v_raw: VolumeTensor,
    sentinel: tuple[int, int, int] = DEFAULT_SENTINEL,
    orange_bounds: tuple[int, ...] = DEFAULT_ORANGE_BOUNDS,
    target: tuple[int, int] = TARGET_SIZE,
) -> VolumeTensor:
    """Raw volume -> background-separated, ROI-cropped, 112x112 frame stack.

    Depth is preserved: the image branch never samples frames.
    """
    roi = detect_roi(v_raw, orange_bounds)
    cropped, roi_c = crop_to_roi(v_raw, roi)
    separated = separate_background(cropped, roi_c, sentinel)
    resized = resize_frames(separated, target)
    mask_t = resize_mask_nearest(roi_c, target)

    out = resized.data.copy()
    out[:, ~mask_t.mask, :] = np.asarray(sentinel, dtype=np.uint8)
    return VolumeTensor(out)
