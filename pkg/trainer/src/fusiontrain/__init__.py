"""fusiontrain: dual-stream bidirectional classifier over preprocessed vessel tensors."""

from .data import MissingTensor, PreprocessedDataset
from .model import (
    FusionHead,
    StallClassifier,
    TinyEncoder3d,
    encode_bidirectional,
    fuse_and_score,
    make_encoder,
)
from .train import NonFiniteLoss, TrainConfig, binary_metrics, train
from .volumes import read_cvol, read_manifest

__version__ = "0.1.0"
