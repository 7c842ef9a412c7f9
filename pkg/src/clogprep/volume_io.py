"""Volume containers, packed-file I/O, and dataset manifests.

The in-memory currency of the whole pipeline is :class:`VolumeTensor`, an
8-bit RGB frame stack stored frame-major / row-major / channel-interleaved,
i.e. a C-contiguous numpy array of shape ``(depth, height, width, 3)``.

On disk a volume is either a directory of consecutively numbered
``frame_%05d.png`` images or a ``.cvol`` packed container:

    magic "CVOL" | u32 LE version=1 | u32 LE width | u32 LE height
    | u32 LE depth | u32 LE channels=3 | raw sample bytes

The 24-byte header plus raw bytes keeps the format trivially parseable from
any language with no codec dependency.
"""

from __future__ import annotations

import json
import random
import re
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import (
    BadMagic,
    BadVersion,
    DimensionMismatch,
    EmptyManifest,
    EmptyVolume,
    IoFailure,
    MissingFrames,
)

CVOL_MAGIC = b"CVOL"
CVOL_VERSION = 1
_HEADER = struct.Struct("<4sIIIII")  # magic, version, width, height, depth, channels

_FRAME_RE = re.compile(r"^frame_(\d{5})\.png$")

LABELS = ("stalled", "flowing")
SPLITS = ("train", "val", "test", "unassigned")

# per-class split fractions; remainder after the two floors goes to test
TRAIN_FRACTION = 0.75
VAL_FRACTION = 0.15


@dataclass
class VolumeTensor:
    """8-bit RGB frame stack; immutable after construction.

    ``data`` has shape (depth, height, width, 3), dtype uint8, C-contiguous.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.dtype != np.uint8:
            raise TypeError(f"volume data must be uint8, got {self.data.dtype}")
        if self.data.ndim != 4 or self.data.shape[3] != 3:
            raise DimensionMismatch(
                f"volume data must have shape (depth, height, width, 3), got {self.data.shape}"
            )
        if min(self.data.shape[:3]) < 1:
            raise EmptyVolume(f"volume has empty extent {self.data.shape}")
        self.data = np.ascontiguousarray(self.data)
        self.data.setflags(write=False)

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def depth(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> int:
        return 3

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VolumeTensor):
            return NotImplemented
        return self.data.shape == other.data.shape and np.array_equal(self.data, other.data)

    def tobytes(self) -> bytes:
        return self.data.tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes, width: int, height: int, depth: int) -> "VolumeTensor":
        expected = width * height * depth * 3
        if len(raw) != expected:
            raise DimensionMismatch(
                f"expected {expected} sample bytes for {width}x{height}x{depth}x3, got {len(raw)}"
            )
        arr = np.frombuffer(raw, dtype=np.uint8).reshape(depth, height, width, 3)
        return cls(arr.copy())


def read_volume(path: str | Path) -> VolumeTensor:
    """Load a volume from a frame directory or a ``.cvol`` container.

    Directory frames must be named ``frame_00000.png`` upward with no gaps;
    pixel bytes are taken as stored, with no color conversion.
    """
    p = Path(path)
    if p.is_dir():
        return _read_frame_dir(p)
    return _read_cvol(p)


def write_volume(v: VolumeTensor, path: str | Path) -> None:
    """Write ``v`` as a ``.cvol`` container (bit-exact round trip with read_volume)."""
    header = _HEADER.pack(CVOL_MAGIC, CVOL_VERSION, v.width, v.height, v.depth, v.channels)
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(v.tobytes())
    except OSError as exc:
        raise IoFailure(f"cannot write volume to {path}: {exc}") from exc


def _read_cvol(path: Path) -> VolumeTensor:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read volume from {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise BadMagic(f"{path}: file shorter than the 24-byte header")
    magic, version, width, height, depth, channels = _HEADER.unpack_from(raw)
    if magic != CVOL_MAGIC:
        raise BadMagic(f"{path}: bad magic {magic!r}")
    if version != CVOL_VERSION:
        raise BadVersion(f"{path}: unsupported version {version}")
    if channels != 3:
        raise DimensionMismatch(f"{path}: only 3-channel volumes are supported, got {channels}")
    if width < 1 or height < 1 or depth < 1:
        raise EmptyVolume(f"{path}: empty extent {width}x{height}x{depth}")
    body = raw[_HEADER.size :]
    expected = width * height * depth * channels
    if len(body) != expected:
        raise IoFailure(f"{path}: expected {expected} sample bytes, found {len(body)}")
    return VolumeTensor.from_bytes(body, width, height, depth)


def _read_frame_dir(path: Path) -> VolumeTensor:
    numbered: dict[int, Path] = {}
    for child in path.iterdir():
        m = _FRAME_RE.match(child.name)
        if m:
            numbered[int(m.group(1))] = child
    if not numbered:
        raise EmptyVolume(f"{path}: no frame_%05d.png files")
    indices = sorted(numbered)
    if indices[0] != 0 or indices[-1] != len(indices) - 1:
        expected = set(range(indices[-1] + 1))
        missing = sorted(expected - set(indices))
        raise MissingFrames(f"{path}: missing frame numbers {missing}")

    frames = []
    shape = None
    for i in indices:
        try:
            with Image.open(numbered[i]) as img:
                if img.mode != "RGB":
                    img = img.convert("RGB")
                arr = np.asarray(img, dtype=np.uint8)
        except OSError as exc:
            raise IoFailure(f"cannot read frame {numbered[i]}: {exc}") from exc
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise DimensionMismatch(
                f"{numbered[i]}: frame size {arr.shape[1]}x{arr.shape[0]} differs from "
                f"{shape[1]}x{shape[0]}"
            )
        frames.append(arr)
    return VolumeTensor(np.stack(frames, axis=0))


# ---------------------------------------------------------------------------
# Manifests and splits
# ---------------------------------------------------------------------------


@dataclass
class SampleRecord:
    id: str
    path: str
    label: str
    num_frames: int
    split: str = "unassigned"

    def __post_init__(self) -> None:
        if self.label not in LABELS:
            raise ValueError(f"label must be one of {LABELS}, got {self.label!r}")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")


@dataclass
class SampleManifest:
    samples: list[SampleRecord] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self) -> None:
        ids = [s.id for s in self.samples]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate sample ids in manifest: {dupes}")

    def by_split(self, split: str) -> list[SampleRecord]:
        return [s for s in self.samples if s.split == split]


def load_manifest(path: str | Path) -> SampleManifest:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoFailure(f"manifest {path} is not valid JSON: {exc}") from exc
    samples = [
        SampleRecord(
            id=s["id"],
            path=s["path"],
            label=s["label"],
            num_frames=int(s["num_frames"]),
            split=s.get("split", "unassigned"),
        )
        for s in doc["samples"]
    ]
    return SampleManifest(samples=samples, seed=int(doc.get("seed", 0)))


def save_manifest(m: SampleManifest, path: str | Path) -> None:
    doc = {
        "seed": m.seed,
        "samples": [
            {
                "id": s.id,
                "path": s.path,
                "label": s.label,
                "num_frames": s.num_frames,
                "split": s.split,
            }
            for s in m.samples
        ],
    }
    try:
        Path(path).write_text(json.dumps(doc, indent=2) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write manifest {path}: {exc}") from exc


def assign_splits(m: SampleManifest, seed: int) -> SampleManifest:
    """Assign train/val/test splits, stratified per label.

    Each class is shuffled deterministically (keyed by ``seed``) and split
    75:15:10: the first floor(0.75*n) records go to train, the next
    floor(0.15*n) to val, and the remainder to test. Reassignment of a
    previously split manifest is allowed and overwrites old splits.
    """
    if not m.samples:
        raise EmptyManifest("cannot split an empty manifest")

    assignment: dict[str, str] = {}
    rng = random.Random(seed)
    for label in sorted(LABELS):
        members = [s.id for s in m.samples if s.label == label]
        rng.shuffle(members)
        n = len(members)
        n_train = int(TRAIN_FRACTION * n)
        n_val = int(VAL_FRACTION * n)
        for i, sid in enumerate(members):
            if i < n_train:
                assignment[sid] = "train"
            elif i < n_train + n_val:
                assignment[sid] = "val"
            else:
                assignment[sid] = "test"

    samples = [replace(s, split=assignment[s.id]) for s in m.samples]
    return SampleManifest(samples=samples, seed=seed)
