"""Point-cloud modality: filter, depth-sample, threshold, denoise, voxelize.

The chain mirrors the image branch up to the crop/resize, then diverges:
a 3-D Gaussian low-pass filter smooths the stack, frames are sampled down
to a fixed depth, a threshold (data-adaptive Otsu or fixed per-channel
percentile) lifts foreground voxels into a point cloud, DBSCAN drops
outlier points, and the surviving cloud masks the image frames so
non-vessel voxels go black.

Thresholding conventions are pinned for cross-implementation bit-exactness:
strictly-greater comparisons, smallest-argmax tie handling, and integer
arithmetic wherever a float rounding error could move a decision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from scipy import ndimage
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import (
    BadCount,
    BadPercentile,
    BadSigma,
    DegenerateHistogram,
    DimensionMismatch,
    EmptyVolume,
    IoFailure,
)
from .image_stream import resize_frames
from .roi import crop_to_roi, detect_roi
from .volume_io import VolumeTensor

if TYPE_CHECKING:
    from .config import PipelineConfig


@dataclass
class BinaryMask3D:
    """Per-voxel foreground flags for a volume of matching dimensions."""

    bits: np.ndarray  # bool, shape (depth, height, width)

    def __post_init__(self) -> None:
        if self.bits.dtype != bool or self.bits.ndim != 3:
            raise TypeError("bits must be a 3-D boolean array")
        self.bits.setflags(write=False)

    @property
    def width(self) -> int:
        return self.bits.shape[2]

    @property
    def height(self) -> int:
        return self.bits.shape[1]

    @property
    def depth(self) -> int:
        return self.bits.shape[0]


@dataclass
class DbscanParams:
    eps: float = 2.0
    min_pts: int = 8  # neighbor count including the point itself

    def __post_init__(self) -> None:
        if self.eps <= 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if self.min_pts < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")


@dataclass
class PointCloudSample:
    """Foreground voxel coordinates plus their colors.

    ``points`` holds (x, y, z) integer coordinates sorted by (z, y, x) with
    no duplicates; ``colors`` is the matching per-point RGB.
    """

    points: np.ndarray
    colors: np.ndarray
    source_dims: tuple[int, int, int]  # (width, height, depth)
    n_prime: int = 0

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.int64).reshape(-1, 3)
        self.colors = np.asarray(self.colors, dtype=np.uint8).reshape(-1, 3)
        if len(self.points) != len(self.colors):
            raise DimensionMismatch(
                f"{len(self.points)} points but {len(self.colors)} colors"
            )
        w, h, d = self.source_dims
        if len(self.points):
            if self.points.min() < 0 or (self.points >= (w, h, d)).any():
                raise ValueError("point coordinates fall outside source_dims")
            zyx = self.points[:, ::-1]
            gaps = np.any(zyx[1:] != zyx[:-1], axis=1)
            if not gaps.all():
                raise ValueError("duplicate points")
            order = np.lexsort((self.points[:, 0], self.points[:, 1], self.points[:, 2]))
            if not np.array_equal(order, np.arange(len(self.points))):
                raise ValueError("points must be sorted by (z, y, x)")
        if self.n_prime == 0:
            self.n_prime = d
        self.points.setflags(write=False)
        self.colors.setflags(write=False)

    def __len__(self) -> int:
        return len(self.points)


# ---------------------------------------------------------------------------
# Filtering and frame sampling
# ---------------------------------------------------------------------------


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian truncated at radius ceil(3*sigma)."""
    if sigma <= 0:
        raise BadSigma(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def gaussian_lpf_3d(v: VolumeTensor, sigma: float) -> np.ndarray:
    """Separable per-channel 3-D Gaussian with replicate borders.

    Returns float64 of shape (depth, height, width, 3); callers keep the
    result in floating point until thresholding.
    """
    kernel = gaussian_kernel_1d(sigma)
    out = v.data.astype(np.float64)
    for axis in (0, 1, 2):
        out = ndimage.correlate1d(out, kernel, axis=axis, mode="nearest")
    return out


def quantize_u8(arr: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero to 8 bits."""
    return np.clip(np.floor(arr + 0.5), 0, 255).astype(np.uint8)


def sample_indices(depth: int, n_prime: int) -> list[int]:
    """Uniformly spread frame indices; the formula is integer-exact.

    Keeps round(i*(depth-1)/(n_prime-1)) for each i, rounding half up; a
    single requested frame maps to the middle of the stack.
    """
    if not 1 <= n_prime <= depth:
        raise BadCount(f"n_prime must be in [1, {depth}], got {n_prime}")
    if n_prime == 1:
        return [depth // 2]
    den = n_prime - 1
    return [(2 * i * (depth - 1) + den) // (2 * den) for i in range(n_prime)]


def sample_frames(v: VolumeTensor, n_prime: int) -> VolumeTensor:
    idx = sample_indices(v.depth, n_prime)
    return VolumeTensor(v.data[idx].copy())


# ---------------------------------------------------------------------------
# Thresholding
# ---------------------------------------------------------------------------


def luminance(v: VolumeTensor) -> np.ndarray:
    """Grayscale conversion Y = round(0.299 R + 0.587 G + 0.114 B), uint8."""
    data = v.data.astype(np.float64)
    y = 0.299 * data[..., 0] + 0.587 * data[..., 1] + 0.114 * data[..., 2]
    return quantize_u8(y)


def _as_gray(volume: VolumeTensor | np.ndarray) -> np.ndarray:
    if isinstance(volume, VolumeTensor):
        return luminance(volume)
    arr = np.asarray(volume)
    if arr.size == 0:
        raise EmptyVolume("cannot threshold an empty volume")
    if arr.ndim == 4 and arr.shape[3] == 3:
        return luminance(VolumeTensor(quantize_u8(arr)))
    if arr.ndim == 3:
        return arr if arr.dtype == np.uint8 else quantize_u8(arr)
    raise DimensionMismatch(f"cannot interpret shape {arr.shape} as a volume")


def otsu_threshold(volume: VolumeTensor | np.ndarray) -> tuple[int, BinaryMask3D]:
    """Gray level maximizing between-class variance; foreground is value > t.

    The argmax is found with exact integer arithmetic (between-class variance
    compared as rational numbers), so ties resolve to the smallest t with no
    float ambiguity.
    """
    gray = _as_gray(volume)
    hist = np.bincount(gray.ravel(), minlength=256)
    if np.count_nonzero(hist) < 2:
        raise DegenerateHistogram("all voxels share one gray value")

    total = int(hist.sum())
    total_sum = int(np.dot(np.arange(256, dtype=np.int64), hist))

    # sigma_b^2(t) = (s0*c1 - s1*c0)^2 / (c0*c1*N^2); N^2 is constant, so
    # compare num^2/den across t by cross-multiplying exact integers.
    best_t = -1
    best_num2 = -1
    best_den = 1
    c0 = 0
    s0 = 0
    for t in range(256):
        h = int(hist[t])
        c0 += h
        s0 += t * h
        c1 = total - c0
        if c0 == 0 or c1 == 0:
            continue
        s1 = total_sum - s0
        num = s0 * c1 - s1 * c0
        num2 = num * num
        den = c0 * c1
        if num2 * best_den > best_num2 * den:
            best_t = t
            best_num2 = num2
            best_den = den

    return best_t, BinaryMask3D(bits=gray > best_t)


def _nearest_rank(sorted_values: np.ndarray, p: float) -> int:
    # exact rational ceil(p/100 * count): a float like 0.9*count must never
    # tip the rank over an integer boundary
    frac = Fraction(str(p))
    if not 0 < frac <= 100:
        raise BadPercentile(f"percentile must be in (0, 100], got {p}")
    count = len(sorted_values)
    k = -((-frac.numerator * count) // (frac.denominator * 100))
    return int(sorted_values[k - 1])


def channel_thresholds(v: VolumeTensor, percentiles: tuple[float, float, float]) -> tuple[int, int, int]:
    """Nearest-rank percentile cut per channel."""
    if v.data.size == 0:
        raise EmptyVolume("cannot threshold an empty volume")
    cuts = []
    for c, p in enumerate(percentiles):
        channel = np.sort(v.data[..., c], axis=None)
        cuts.append(_nearest_rank(channel, p))
    return cuts[0], cuts[1], cuts[2]


def percentile_threshold(
    v: VolumeTensor, percentiles: tuple[float, float, float]
) -> BinaryMask3D:
    """Foreground voxels exceed their channel's percentile cut in all three channels."""
    t_r, t_g, t_b = channel_thresholds(v, percentiles)
    bits = (v.data[..., 0] > t_r) & (v.data[..., 1] > t_g) & (v.data[..., 2] > t_b)
    return BinaryMask3D(bits=bits)


# ---------------------------------------------------------------------------
# Point clouds
# ---------------------------------------------------------------------------


def mask_to_points(m: BinaryMask3D, v: VolumeTensor) -> PointCloudSample:
    """One point per foreground voxel, colored from ``v``, sorted by (z, y, x)."""
    if (m.depth, m.height, m.width) != (v.depth, v.height, v.width):
        raise DimensionMismatch(
            f"mask {m.width}x{m.height}x{m.depth} does not match volume "
            f"{v.width}x{v.height}x{v.depth}"
        )
    zyx = np.argwhere(m.bits)  # row-major scan order == (z, y, x) sort
    points = zyx[:, ::-1].astype(np.int64)
    colors = v.data[zyx[:, 0], zyx[:, 1], zyx[:, 2]]
    return PointCloudSample(
        points=points,
        colors=colors,
        source_dims=(v.width, v.height, v.depth),
        n_prime=v.depth,
    )


def _neighbor_pairs(points: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """All ordered pairs (i, j), i != j, with exact squared distance <= eps^2.

    A k-d tree prunes the candidate set (queried with a slightly inflated
    radius so its float distance math can never drop a boundary pair), then
    integer arithmetic on the coordinates makes the final call. The tree is
    acceleration only; results match a full O(n^2) scan exactly.
    """
    tree = cKDTree(points)
    pairs = tree.query_pairs(eps * (1.0 + 1e-9) + 1e-9, output_type="ndarray")
    if len(pairs):
        delta = points[pairs[:, 0]] - points[pairs[:, 1]]
        dist_sq = np.einsum("ij,ij->i", delta, delta)
        pairs = pairs[dist_sq <= eps * eps]
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    return src, dst


def dbscan_labels(points: np.ndarray, params: DbscanParams) -> np.ndarray:
    """Cluster labels per point: -1 for noise, 0..k-1 otherwise.

    Classic DBSCAN over Euclidean distance, computed set-wise: core points
    are those with >= min_pts neighbors (self included); clusters are
    connected components of the core points under eps-reachability; border
    points join the cluster of an adjacent core. This is equivalent to the
    sequential scan-order algorithm, including its tie rule: clusters are
    numbered by their first core in stored (z, y, x) order, and a border
    point reachable from several clusters takes the earliest-seeded one.
    """
    points = np.asarray(points, dtype=np.int64)
    n = len(points)
    if n == 0:
        return np.full(0, -1, dtype=np.int64)

    src, dst = _neighbor_pairs(points, params.eps)
    counts = np.bincount(src, minlength=n) + 1  # +1: the point itself
    core = counts >= params.min_pts

    labels = np.full(n, -1, dtype=np.int64)
    if not core.any():
        return labels

    core_edge = core[src] & core[dst]
    graph = csr_matrix(
        (np.ones(core_edge.sum(), dtype=np.int8), (src[core_edge], dst[core_edge])),
        shape=(n, n),
    )
    n_comp, comp = connected_components(graph, directed=False)

    # renumber components so cluster ids follow the scan order of their seeds
    core_idx = np.flatnonzero(core)
    seed_of_comp = np.full(n_comp, n, dtype=np.int64)
    np.minimum.at(seed_of_comp, comp[core_idx], core_idx)
    with_cores = np.flatnonzero(seed_of_comp < n)
    ranked = with_cores[np.argsort(seed_of_comp[with_cores])]
    cluster_id = np.full(n_comp, -1, dtype=np.int64)
    cluster_id[ranked] = np.arange(len(ranked))
    labels[core_idx] = cluster_id[comp[core_idx]]

    # border points: non-core with a core neighbor; earliest-seeded cluster wins
    border_edge = ~core[src] & core[dst]
    if border_edge.any():
        b_src = src[border_edge]
        b_lab = labels[dst[border_edge]]
        order = np.lexsort((b_lab, b_src))
        b_src, b_lab = b_src[order], b_lab[order]
        first = np.ones(len(b_src), dtype=bool)
        first[1:] = b_src[1:] != b_src[:-1]
        labels[b_src[first]] = b_lab[first]
    return labels


def dbscan_filter(
    pc: PointCloudSample, params: DbscanParams, largest_cluster_only: bool = False
) -> PointCloudSample:
    """Drop noise points; optionally keep only the biggest cluster."""
    labels = dbscan_labels(pc.points, params)
    keep = labels >= 0
    if largest_cluster_only and keep.any():
        sizes = np.bincount(labels[keep])
        keep = labels == int(np.argmax(sizes))  # ties: earliest-seeded cluster
    return PointCloudSample(
        points=pc.points[keep],
        colors=pc.colors[keep],
        source_dims=pc.source_dims,
        n_prime=pc.n_prime,
    )


def voxelize(pc: PointCloudSample, v: VolumeTensor) -> VolumeTensor:
    """Copy ``v`` where a point exists; black out everything else."""
    if pc.source_dims != (v.width, v.height, v.depth):
        raise DimensionMismatch(
            f"cloud dims {pc.source_dims} do not match volume "
            f"{(v.width, v.height, v.depth)}"
        )
    mask = np.zeros((v.depth, v.height, v.width), dtype=bool)
    if len(pc.points):
        x, y, z = pc.points[:, 0], pc.points[:, 1], pc.points[:, 2]
        mask[z, y, x] = True
    out = np.where(mask[..., None], v.data, np.uint8(0))
    return VolumeTensor(out.astype(np.uint8))


# ---------------------------------------------------------------------------
# PLY persistence
# ---------------------------------------------------------------------------

_PLY_PROPS = [
    "property float x",
    "property float y",
    "property float z",
    "property uchar red",
    "property uchar green",
    "property uchar blue",
]


def write_ply(pc: PointCloudSample, path: str | Path) -> None:
    """ASCII PLY, one vertex per line in the cloud's (z, y, x) order."""
    lines = ["ply", "format ascii 1.0", f"element vertex {len(pc)}"]
    lines += _PLY_PROPS
    lines.append("end_header")
    for (x, y, z), (r, g, b) in zip(pc.points, pc.colors):
        lines.append(f"{x} {y} {z} {r} {g} {b}")
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write point cloud to {path}: {exc}") from exc


def read_ply(path: str | Path, source_dims: tuple[int, int, int] | None = None) -> PointCloudSample:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read point cloud from {path}: {exc}") from exc
    if not lines or lines[0] != "ply":
        raise IoFailure(f"{path}: not an ASCII PLY file")
    n_vertices = 0
    body_at = None
    for i, line in enumerate(lines[1:], start=1):
        if line.startswith("element vertex "):
            n_vertices = int(line.split()[-1])
        elif line == "end_header":
            body_at = i + 1
            break
    if body_at is None:
        raise IoFailure(f"{path}: missing end_header")
    points = np.zeros((n_vertices, 3), dtype=np.int64)
    colors = np.zeros((n_vertices, 3), dtype=np.uint8)
    for row, line in enumerate(lines[body_at : body_at + n_vertices]):
        fields = line.split()
        points[row] = [int(float(f)) for f in fields[:3]]
        colors[row] = [int(f) for f in fields[3:6]]
    if source_dims is None:
        if n_vertices:
            w, h, d = (int(points[:, c].max()) + 1 for c in range(3))
        else:
            w, h, d = 1, 1, 1
        source_dims = (w, h, d)
    return PointCloudSample(points=points, colors=colors, source_dims=source_dims)


# ---------------------------------------------------------------------------
# Full branch
# ---------------------------------------------------------------------------


def build_pointcloud_stream(
    v_raw: VolumeTensor, cfg: "PipelineConfig"
) -> tuple[VolumeTensor, PointCloudSample]:
    """Raw volume -> (vessel-suppressed 112x112xN' volume, cleaned point cloud).

    The threshold runs on the filtered stack; point colors and the
    suppressed output come from the unfiltered resized frames at the same
    sampled indices, so the vessel keeps its real appearance.
    """
    roi = detect_roi(v_raw, cfg.orange_thresholds)
    cropped, _ = crop_to_roi(v_raw, roi)
    resized = resize_frames(cropped, cfg.resize)

    blurred = gaussian_lpf_3d(resized, cfg.sigma)
    filtered = VolumeTensor(quantize_u8(blurred))
    filtered_n = sample_frames(filtered, cfg.n_prime)
    frames_n = sample_frames(resized, cfg.n_prime)

    if cfg.threshold_mode == "otsu":
        _, mask = otsu_threshold(filtered_n)
    else:
        mask = percentile_threshold(filtered_n, cfg.percentiles)

    cloud = mask_to_points(mask, frames_n)
    cloud = dbscan_filter(cloud, cfg.dbscan, cfg.largest_cluster_only)
    suppressed = voxelize(cloud, frames_n)
    return suppressed, cloud
