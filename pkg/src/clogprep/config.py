"""Pipeline configuration: one JSON file owns every tunable knob.

Unknown keys are rejected rather than ignored; a typo in a config must not
silently fall back to defaults in a pipeline meant to be reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, IoFailure
from .image_stream import DEFAULT_SENTINEL, TARGET_SIZE
from .pointcloud import DbscanParams
from .roi import DEFAULT_ORANGE_BOUNDS

DEFAULT_PERCENTILES = (90.0, 95.0, 99.0)


@dataclass
class PipelineConfig:
    sentinel_rgb: tuple[int, int, int] = DEFAULT_SENTINEL
    orange_thresholds: tuple[int, int, int, int, int, int] = DEFAULT_ORANGE_BOUNDS
    sigma: float = 1.0
    n_prime: int = 32
    threshold_mode: str = "otsu"  # "otsu" | "percentile"
    percentiles: tuple[float, float, float] = DEFAULT_PERCENTILES
    dbscan: DbscanParams = field(default_factory=DbscanParams)
    largest_cluster_only: bool = False
    resize: tuple[int, int] = TARGET_SIZE  # fixed by the model input contract
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if len(self.sentinel_rgb) != 3 or any(not 0 <= c <= 255 for c in self.sentinel_rgb):
            raise ConfigError(f"sentinel_rgb must be three bytes, got {self.sentinel_rgb}")
        b = self.orange_thresholds
        if len(b) != 6 or any(not 0 <= v <= 255 for v in b):
            raise ConfigError(f"orange_thresholds must be six bytes, got {b}")
        if b[0] > b[1] or b[2] > b[3] or b[4] > b[5]:
            raise ConfigError(f"orange_thresholds min exceeds max in {b}")
        if self.sigma <= 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.n_prime < 1:
            raise ConfigError(f"n_prime must be >= 1, got {self.n_prime}")
        if self.threshold_mode not in ("otsu", "percentile"):
            raise ConfigError(f"threshold_mode must be 'otsu' or 'percentile', got {self.threshold_mode!r}")
        if len(self.percentiles) != 3 or any(not 0 < p <= 100 for p in self.percentiles):
            raise ConfigError(f"percentiles must be three values in (0, 100], got {self.percentiles}")
        if tuple(self.resize) != TARGET_SIZE:
            raise ConfigError(f"resize is fixed at {TARGET_SIZE}, got {self.resize}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")


_KNOWN_KEYS = {
    "sentinel_rgb",
    "orange_thresholds",
    "sigma",
    "n_prime",
    "threshold_mode",
    "dbscan",
    "largest_cluster_only",
    "resize",
    "seed",
    "workers",
}


def config_from_dict(doc: dict) -> PipelineConfig:
    unknown = set(doc) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    kwargs: dict = {}
    if "sentinel_rgb" in doc:
        kwargs["sentinel_rgb"] = tuple(doc["sentinel_rgb"])
    if "orange_thresholds" in doc:
        kwargs["orange_thresholds"] = tuple(doc["orange_thresholds"])
    for key in ("sigma", "n_prime", "largest_cluster_only", "seed", "workers"):
        if key in doc:
            kwargs[key] = doc[key]
    if "resize" in doc:
        kwargs["resize"] = tuple(doc["resize"])

    mode = doc.get("threshold_mode", "otsu")
    if isinstance(mode, str):
        kwargs["threshold_mode"] = mode
    elif isinstance(mode, dict) and set(mode) == {"percentile"}:
        kwargs["threshold_mode"] = "percentile"
        kwargs["percentiles"] = tuple(mode["percentile"])
    else:
        raise ConfigError(
            f'threshold_mode must be "otsu" or {{"percentile": [p_r, p_g, p_b]}}, got {mode!r}'
        )

    if "dbscan" in doc:
        db = doc["dbscan"]
        extra = set(db) - {"eps", "min_pts"}
        if extra:
            raise ConfigError(f"unknown dbscan keys: {sorted(extra)}")
        try:
            kwargs["dbscan"] = DbscanParams(
                eps=float(db.get("eps", 2.0)), min_pts=int(db.get("min_pts", 8))
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    try:
        return PipelineConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def load_config(path: str | Path | None) -> PipelineConfig:
    """Parse a JSON config file; None means all defaults."""
    if path is None:
        return PipelineConfig()
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return config_from_dict(doc)
