"""Synthetic labeled vessel volumes for desk-scale testing.

Each sample is a bright tube drifting sinusoidally through a noisy dark
volume, wrapped in an orange rectangular ROI contour. Stalled samples
carve a contiguous run of empty frames out of the tube. The generator
also returns the exact foreground mask and ROI so downstream claims can be
checked against ground truth instead of against the code under test.

The overlay contour is drawn on frame 0 only (detection reads frame 0)
and one pixel thick: a single-frame ribbon falls below the default DBSCAN
density and is removed as noise, keeping the point-cloud branch's signal
purely the vessel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import IoFailure, TubeOutOfBounds
from .pointcloud import BinaryMask3D
from .roi import RoiMask
from .volume_io import SampleManifest, SampleRecord, VolumeTensor, save_manifest, write_volume

OVERLAY_COLOR = (255, 128, 0)
TUBE_LEVEL = 220.0
BACKGROUND_LEVEL = 20.0


@dataclass
class SynthConfig:
    dims: tuple[int, int, int] = (160, 120, 40)  # (width, height, depth)
    tube_radius: float = 4.0
    gap_length: int = 6
    noise_std: float = 10.0
    curvature: float = 8.0  # amplitude of the sinusoidal centerline drift
    seed: int = 0

    def __post_init__(self) -> None:
        if self.gap_length < 1:
            raise ValueError("gap_length must be >= 1")
        if min(self.dims) < 1:
            raise ValueError(f"dims must be positive, got {self.dims}")


def _quantize(arr: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(arr + 0.5), 0, 255).astype(np.uint8)


def generate_sample(
    cfg: SynthConfig, label: str
) -> tuple[VolumeTensor, BinaryMask3D, RoiMask]:
    """Render one labeled sample plus its ground-truth masks, deterministic per seed."""
    if label not in ("stalled", "flowing"):
        raise ValueError(f"label must be 'stalled' or 'flowing', got {label!r}")
    w, h, d = cfg.dims
    rng = np.random.default_rng(cfg.seed)

    # ROI contour hugs the tube's reachable extent; a tight crop keeps the
    # vessel a substantial fraction of the resized frame, which is what
    # makes the downstream data-adaptive threshold place itself between
    # the background and vessel modes
    half = math.ceil(cfg.curvature + cfg.tube_radius) + 4
    x0, x1 = w // 2 - half, w // 2 + half
    y0, y1 = h // 2 - half, h // 2 + half
    if x0 < 1 or y0 < 1 or x1 > w - 2 or y1 > h - 2:
        raise TubeOutOfBounds(
            f"tube with radius {cfg.tube_radius} and curvature {cfg.curvature} "
            f"needs a {2 * half + 3}-pixel square; frame is {w}x{h}"
        )

    cx0, cy0 = (x0 + x1) / 2.0, (y0 + y1) / 2.0
    phase_x = rng.uniform(0.0, 2.0 * math.pi)
    phase_y = rng.uniform(0.0, 2.0 * math.pi)
    zs = np.arange(d, dtype=np.float64)
    cx = cx0 + cfg.curvature * np.sin(2.0 * math.pi * zs / d + phase_x)
    cy = cy0 + cfg.curvature * np.sin(2.0 * math.pi * zs / d + phase_y)

    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    dist_sq = (xs[None, None, :] - cx[:, None, None]) ** 2 + (
        ys[None, :, None] - cy[:, None, None]
    ) ** 2
    tube = dist_sq <= cfg.tube_radius**2

    if label == "stalled":
        lo = d // 4
        hi = (3 * d) // 4 - cfg.gap_length
        if hi < lo:
            raise TubeOutOfBounds(f"gap of {cfg.gap_length} frames does not fit in depth {d}")
        gap_start = int(rng.integers(lo, hi + 1))
        tube[gap_start : gap_start + cfg.gap_length] = False

    data = _quantize(rng.normal(BACKGROUND_LEVEL, cfg.noise_std, size=(d, h, w, 3)))
    n_fg = int(tube.sum())
    data[tube] = _quantize(rng.normal(TUBE_LEVEL, cfg.noise_std, size=(n_fg, 3)))

    ring = np.zeros((h, w), dtype=bool)
    ring[y0, x0 : x1 + 1] = True
    ring[y1, x0 : x1 + 1] = True
    ring[y0 : y1 + 1, x0] = True
    ring[y0 : y1 + 1, x1] = True
    data[0][ring] = np.asarray(OVERLAY_COLOR, dtype=np.uint8)

    roi_mask = np.zeros((h, w), dtype=bool)
    roi_mask[y0 : y1 + 1, x0 : x1 + 1] = True
    roi = RoiMask(mask=roi_mask, bbox=(x0, y0, x1, y1))
    return VolumeTensor(data), BinaryMask3D(bits=tube), roi


def generate_dataset(
    n_per_class: int, cfg_base: SynthConfig, out_dir: str | Path
) -> SampleManifest:
    """Write n stalled + n flowing samples as .cvol files plus a manifest.

    Per-sample seeds are cfg_base.seed + index, so regeneration with the
    same arguments reproduces identical bytes.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc

    records = []
    index = 0
    for label in ("flowing", "stalled"):
        for i in range(n_per_class):
            cfg = replace(cfg_base, seed=cfg_base.seed + index)
            volume, _, _ = generate_sample(cfg, label)
            sample_id = f"{label}_{i:04d}"
            filename = f"{sample_id}.cvol"
            write_volume(volume, out / filename)
            records.append(
                SampleRecord(
                    id=sample_id,
                    path=filename,
                    label=label,
                    num_frames=volume.depth,
                )
            )
            index += 1

    manifest = SampleManifest(samples=records, seed=cfg_base.seed)
    save_manifest(manifest, out / "manifest.json")
    return manifest
