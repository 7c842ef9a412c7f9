"""Readers for the preprocessing toolkit's on-disk interfaces.

The trainer consumes the pipeline's outputs purely through their documented
formats, so it carries its own small readers instead of importing the
preprocessing package.

`.cvol`: magic "CVOL", u32 LE version=1, u32 LE width/height/depth/channels
(=3), then width*height*depth*3 raw bytes, frame-major / row-major /
RGB-interleaved.

`manifest.json`: {"seed": uint, "samples": [{"id", "path", "label",
"num_frames", "split"}, ...]} with labels stalled|flowing and splits
train|val|test|unassigned.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

_HEADER = struct.Struct("<4sIIIII")


def read_cvol(path: str | Path) -> np.ndarray:
    """Load a packed volume as a (depth, height, width, 3) uint8 array."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: shorter than the 24-byte header")
    magic, version, width, height, depth, channels = _HEADER.unpack_from(raw)
    if magic != b"CVOL":
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != 1:
        raise ValueError(f"{path}: unsupported version {version}")
    if channels != 3:
        raise ValueError(f"{path}: expected 3 channels, got {channels}")
    body = raw[_HEADER.size :]
    expected = width * height * depth * channels
    if len(body) != expected:
        raise ValueError(f"{path}: expected {expected} body bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(depth, height, width, 3).copy()


@dataclass
class ManifestEntry:
    id: str
    path: str
    label: str
    num_frames: int
    split: str


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    doc = json.loads(Path(path).read_text())
    entries = [
        ManifestEntry(
            id=s["id"],
            path=s["path"],
            label=s["label"],
            num_frames=int(s["num_frames"]),
            split=s.get("split", "unassigned"),
        )
        for s in doc["samples"]
    ]
    for e in entries:
        if e.label not in ("stalled", "flowing"):
            raise ValueError(f"sample {e.id}: unknown label {e.label!r}")
    return entries
