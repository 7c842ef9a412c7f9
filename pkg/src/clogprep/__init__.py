"""clogprep: preprocessing toolkit for stalled-capillary classification.

Converts raw volumetric frame stacks into background-separated image
tensors and denoised point-cloud/voxel tensors, with a deterministic CLI
around ingestion, synthetic data, splits, and evaluation.
"""

from .config import PipelineConfig, load_config
from .image_stream import build_image_stream, resize_frames, separate_background
from .metrics import ConfusionCounts, accuracy, confusion, mcc
from .pointcloud import (
    BinaryMask3D,
    DbscanParams,
    PointCloudSample,
    build_pointcloud_stream,
    dbscan_filter,
    gaussian_lpf_3d,
    mask_to_points,
    otsu_threshold,
    percentile_threshold,
    sample_frames,
    voxelize,
)
from .roi import RoiMask, crop_to_roi, detect_roi
from .synthgen import SynthConfig, generate_dataset, generate_sample
from .volume_io import (
    SampleManifest,
    SampleRecord,
    VolumeTensor,
    assign_splits,
    load_manifest,
    read_volume,
    save_manifest,
    write_volume,
)

__version__ = "0.1.0"
