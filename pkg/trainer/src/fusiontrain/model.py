"""Dual-stream classifier: bidirectional 3-D encoders plus a fusion head.

Each stream owns one encoder that maps a (3, T, 112, 112) clip to a
512-feature vector. A clip is encoded twice, forward and depth-reversed,
with the same weights; the concatenated 1024-vector per stream feeds a
single dense layer whose sigmoid output is the stall score.

Because both directions run through one encoder, reversing the input exactly
swaps the two halves of the bidirectional feature, a property tests rely on
bit-for-bit.
"""

from __future__ import annotations

import torch
from torch import nn

FEATURE_DIM = 512


class TinyEncoder3d(nn.Module):
    """Small from-scratch 3-D conv net: 4 blocks, global pool, 512 features.

    Sized to train on CPU in minutes. GroupNorm instead of BatchNorm because
    training runs at batch size 1. The global pool averages spatially first
    and then takes both mean and max over time: a stall is a temporally
    local event over a spatially extended vessel, and a plain global
    average dilutes it below what batch-1 training recovers.
    """

    def __init__(self, widths: tuple[int, int, int, int] = (16, 32, 64, 128)):
        super().__init__()
        c1, c2, c3, c4 = widths
        self.blocks = nn.Sequential(
            # temporal kernel stays at 3 so a single-frame clip is valid input
            nn.Conv3d(3, c1, kernel_size=(3, 4, 4), stride=(2, 4, 4), padding=1),
            nn.GroupNorm(4, c1),
            nn.ReLU(inplace=True),
            nn.Conv3d(c1, c2, kernel_size=3, stride=2, padding=1),
            nn.GroupNorm(4, c2),
            nn.ReLU(inplace=True),
            nn.Conv3d(c2, c3, kernel_size=3, stride=2, padding=1),
            nn.GroupNorm(4, c3),
            nn.ReLU(inplace=True),
            nn.Conv3d(c3, c4, kernel_size=3, stride=2, padding=1),
            nn.GroupNorm(4, c4),
            nn.ReLU(inplace=True),
        )
        self.project = nn.Linear(2 * c4, FEATURE_DIM)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.dim() != 5 or x.shape[1] != 3:
            raise ValueError(f"expected (batch, 3, T, H, W), got {tuple(x.shape)}")
        h = self.blocks(x)
        spatial = h.mean(dim=(3, 4))  # (batch, channels, T')
        pooled = torch.cat([spatial.mean(dim=2), spatial.amax(dim=2)], dim=1)
        return self.project(pooled)


def make_encoder(name: str) -> nn.Module:
    """tiny3d (default) or a torchvision video backbone with its fc stripped."""
    if name == "tiny3d":
        return TinyEncoder3d()
    if name in ("r2plus1d_18", "r3d_18", "mc3_18"):
        from torchvision.models import video as tv_video

        net = getattr(tv_video, name)(weights=None)
        net.fc = nn.Identity()  # these backbones end in 512 features
        return net
    raise ValueError(f"unknown encoder {name!r}")


def encode_bidirectional(encoder: nn.Module, x: torch.Tensor) -> torch.Tensor:
    """concat(E(clip), E(clip reversed along depth)) -> (batch, 1024)."""
    if x.dim() != 5 or x.shape[1] != 3:
        raise ValueError(f"expected (batch, 3, T, H, W), got {tuple(x.shape)}")
    forward = encoder(x)
    backward = encoder(torch.flip(x, dims=[2]))
    return torch.cat([forward, backward], dim=1)


class FusionHead(nn.Module):
    """Single dense layer over the concatenated stream features."""

    def __init__(self, in_dim: int):
        super().__init__()
        self.dense = nn.Linear(in_dim, 1)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.dense(features).squeeze(-1)


def fuse_and_score(f_i: torch.Tensor, f_p: torch.Tensor, head: FusionHead) -> torch.Tensor:
    """sigmoid(dense([f_i, f_p])), strictly inside (0, 1) for finite inputs."""
    return torch.sigmoid(head(torch.cat([f_i, f_p], dim=1)))


class StallClassifier(nn.Module):
    """Configurable dual-stream model.

    streams: "both", "image", or "pc" (unimodal ablations drop a stream and
    shrink the head). bidirectional=False runs a single forward pass per
    stream, halving the feature width.
    """

    def __init__(
        self,
        streams: str = "both",
        bidirectional: bool = True,
        encoder: str = "tiny3d",
    ):
        super().__init__()
        if streams not in ("both", "image", "pc"):
            raise ValueError(f"streams must be both|image|pc, got {streams!r}")
        self.streams = streams
        self.bidirectional = bidirectional
        per_stream = FEATURE_DIM * (2 if bidirectional else 1)
        n_streams = 2 if streams == "both" else 1
        if streams in ("both", "image"):
            self.encoder_image = make_encoder(encoder)
        if streams in ("both", "pc"):
            self.encoder_pc = make_encoder(encoder)
        self.head = FusionHead(per_stream * n_streams)

    def _encode(self, encoder: nn.Module, x: torch.Tensor) -> torch.Tensor:
        if self.bidirectional:
            return encode_bidirectional(encoder, x)
        return encoder(x)

    def forward(self, image: torch.Tensor | None, pc: torch.Tensor | None) -> torch.Tensor:
        parts = []
        if self.streams in ("both", "image"):
            parts.append(self._encode(self.encoder_image, image))
        if self.streams in ("both", "pc"):
            parts.append(self._encode(self.encoder_pc, pc))
        return self.head(torch.cat(parts, dim=1))
