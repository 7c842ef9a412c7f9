"""Dataset access over preprocessed tensors.

Samples are cached in RAM as uint8 (a 200-sample set is ~0.5 GB) and
converted to normalized float tensors on demand. Every tensor required by
the requested streams must exist up front; a missing file is a setup error,
not something to discover mid-epoch.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .volumes import ManifestEntry, read_cvol, read_manifest


class MissingTensor(RuntimeError):
    """A preprocessed .img.cvol / .pc.cvol file is absent for a needed sample."""


class PreprocessedDataset:
    def __init__(self, manifest_path: str | Path, data_dir: str | Path, streams: str = "both"):
        self.data_dir = Path(data_dir)
        self.streams = streams
        entries = [e for e in read_manifest(manifest_path) if e.split != "unassigned"]
        if not entries:
            raise ValueError("manifest has no split assignments; run `clogprep split` first")
        self.entries: dict[str, list[ManifestEntry]] = {
            split: [e for e in entries if e.split == split] for split in ("train", "val", "test")
        }

        missing = []
        for e in entries:
            for suffix in self._suffixes():
                if not (self.data_dir / f"{e.id}{suffix}").exists():
                    missing.append(f"{e.id}{suffix}")
        if missing:
            raise MissingTensor(
                f"{len(missing)} preprocessed tensors missing under {self.data_dir}: "
                + ", ".join(missing[:5])
                + ("..." if len(missing) > 5 else "")
            )

        self._cache: dict[str, np.ndarray] = {}

    def _suffixes(self) -> list[str]:
        if self.streams == "image":
            return [".img.cvol"]
        if self.streams == "pc":
            return [".pc.cvol"]
        return [".img.cvol", ".pc.cvol"]

    def split_ids(self, split: str) -> list[str]:
        return [e.id for e in self.entries[split]]

    def label(self, sample_id: str) -> float:
        for split_entries in self.entries.values():
            for e in split_entries:
                if e.id == sample_id:
                    return 1.0 if e.label == "stalled" else 0.0
        raise KeyError(sample_id)

    def _volume(self, name: str) -> np.ndarray:
        if name not in self._cache:
            self._cache[name] = read_cvol(self.data_dir / name)
        return self._cache[name]

    def tensors(self, sample_id: str) -> tuple[torch.Tensor | None, torch.Tensor | None]:
        """(image, pointcloud) clips as (1, 3, T, 112, 112) floats in [0, 1]."""
        image = pc = None
        if self.streams in ("both", "image"):
            image = self._to_clip(self._volume(f"{sample_id}.img.cvol"))
        if self.streams in ("both", "pc"):
            pc = self._to_clip(self._volume(f"{sample_id}.pc.cvol"))
        return image, pc

    @staticmethod
    def _to_clip(volume: np.ndarray) -> torch.Tensor:
        # (T, H, W, C) uint8 -> (1, C, T, H, W) float
        clip = torch.from_numpy(volume).permute(3, 0, 1, 2).unsqueeze(0)
        return clip.float().div_(255.0)
