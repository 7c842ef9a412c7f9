"""Region-of-interest recovery from the orange overlay and volume cropping.

The source videos mark the target vessel with a hand-drawn orange contour
that stays constant across frames, so detection runs on frame 0 only. The
ROI is the filled interior of that contour: pixels that a flood fill from
the frame border cannot reach without crossing the contour, plus the
contour pixels themselves.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch, NoRoiFound, OpenContour
from .volume_io import VolumeTensor

# inclusive 8-bit bounds: r_min, r_max, g_min, g_max, b_min, b_max
DEFAULT_ORANGE_BOUNDS = (180, 255, 60, 160, 0, 100)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)
_FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass
class RoiMask:
    """Per-pixel ROI membership plus the tight bounding box of the true pixels.

    ``bbox`` is (x_min, y_min, x_max, y_max) with inclusive coordinates.
    """

    mask: np.ndarray
    bbox: tuple[int, int, int, int]

    def __post_init__(self) -> None:
        if self.mask.dtype != bool or self.mask.ndim != 2:
            raise TypeError("mask must be a 2-D boolean array")
        if not self.mask.any():
            raise ValueError("RoiMask must contain at least one true pixel")
        if self.bbox != _tight_bbox(self.mask):
            raise ValueError(f"bbox {self.bbox} is not the tight bounding box")
        self.mask.setflags(write=False)

    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]


def _tight_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    ys, xs = np.nonzero(mask)
    return int(xs.min()), int(ys.min()), int(xs.max()), int(ys.max())


def classify_overlay(frame: np.ndarray, bounds: tuple[int, ...] = DEFAULT_ORANGE_BOUNDS) -> np.ndarray:
    """Boolean map of overlay-colored pixels in one (height, width, 3) frame."""
    r_min, r_max, g_min, g_max, b_min, b_max = bounds
    r, g, b = frame[..., 0], frame[..., 1], frame[..., 2]
    return (
        (r >= r_min) & (r <= r_max)
        & (g >= g_min) & (g <= g_max)
        & (b >= b_min) & (b <= b_max)
    )


def detect_roi(v: VolumeTensor, bounds: tuple[int, ...] = DEFAULT_ORANGE_BOUNDS) -> RoiMask:
    """Recover the ROI mask from the orange contour on frame 0.

    Steps: classify orange pixels by the RGB box ``bounds``; keep the largest
    8-connected orange component as the contour; flood the background from
    the frame border (4-connected, so the 8-connected contour is tight);
    everything not flooded is ROI.
    """
    orange = classify_overlay(v.data[0], bounds)
    if not orange.any():
        raise NoRoiFound("no overlay-colored pixels in frame 0")

    labels, n_components = ndimage.label(orange, structure=_EIGHT_CONNECTED)
    if n_components == 1:
        contour = orange
    else:
        sizes = np.bincount(labels.ravel())
        sizes[0] = 0
        # argmax ties resolve to the lowest label id, i.e. raster-first component
        contour = labels == int(np.argmax(sizes))

    free = ~contour
    free_labels, _ = ndimage.label(free, structure=_FOUR_CONNECTED)
    border_ids = np.unique(
        np.concatenate(
            [free_labels[0, :], free_labels[-1, :], free_labels[:, 0], free_labels[:, -1]]
        )
    )
    border_ids = border_ids[border_ids != 0]
    outside = np.isin(free_labels, border_ids)

    roi = ~outside
    if not (roi & ~contour).any():
        raise OpenContour("contour encloses no interior pixels")
    return RoiMask(mask=roi, bbox=_tight_bbox(roi))


def crop_to_roi(v: VolumeTensor, r: RoiMask) -> tuple[VolumeTensor, RoiMask]:
    """Crop every frame and the mask itself to the mask's bounding box."""
    if (r.height, r.width) != (v.height, v.width):
        raise DimensionMismatch(
            f"mask is {r.width}x{r.height} but frames are {v.width}x{v.height}"
        )
    x_min, y_min, x_max, y_max = r.bbox
    cropped = VolumeTensor(v.data[:, y_min : y_max + 1, x_min : x_max + 1, :].copy())
    sub = r.mask[y_min : y_max + 1, x_min : x_max + 1].copy()
    return cropped, RoiMask(mask=sub, bbox=_tight_bbox(sub))
