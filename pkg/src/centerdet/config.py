"""Runtime configuration shared by the library, CLI and service.

One JSON file carries every tuning constant: output stride, decoder top-K,
tile geometry, NMS threshold, focal exponents, branch loss weights, the
post-decode score floor, the multi-scale test set and the class list.
Serialization round-trips field-for-field.
"""

import json
import os
from dataclasses import asdict, dataclass, field, replace
from typing import List

from .losses import LossConfig

CONFIG_ENV_VAR = "CENTERDET_CONFIG"

DEFAULT_CLASS_NAMES = tuple(f"class{i:02d}" for i in range(15))


@dataclass
class ModelConfig:
    down_ratio: int = 4              # output stride between image and head maps
    max_detections: int = 160        # decoder top-K per image
    tile_size: int = 1024
    tile_stride: int = 824
    nms_iou: float = 0.45
    pos_threshold: float = 1.0       # heatmap value from which a cell is positive
    focal_alpha: float = 2.0
    focal_beta: float = 4.0
    size_loss_weight: float = 0.1
    offset_loss_weight: float = 1.0
    score_floor: float = 0.05        # drop decoded boxes scoring below this
    test_scales: List[float] = field(default_factory=lambda: [0.5, 1.0, 1.5])
    class_names: List[str] = field(default_factory=lambda: list(DEFAULT_CLASS_NAMES))
    base_width: int = 64             # backbone stage-1 channel width
    head_width: int = 64             # channels after pyramid reduction / in heads
    se_ratio: int = 16               # squeeze-excite bottleneck ratio
    workers: int = 1                 # tile-level parallelism (1 = sequential)

    def __post_init__(self):
        if self.down_ratio < 1:
            raise ValueError(f"down_ratio must be >= 1, got {self.down_ratio}")
        if self.max_detections < 1:
            raise ValueError(
                f"max_detections must be >= 1, got {self.max_detections}")
        if not 0 < self.tile_stride <= self.tile_size:
            raise ValueError(
                f"tile stride {self.tile_stride} must be in (0, tile size "
                f"{self.tile_size}]")
        if self.tile_size % self.down_ratio:
            raise ValueError(
                f"tile size {self.tile_size} must be divisible by the "
                f"output stride {self.down_ratio}")
        if not 0.0 <= self.nms_iou <= 1.0:
            raise ValueError(f"nms_iou {self.nms_iou} outside [0, 1]")
        if not self.test_scales or any(s <= 0 for s in self.test_scales):
            raise ValueError(
                f"test_scales must be non-empty positive, got {self.test_scales}")
        if not self.class_names:
            raise ValueError("class list must not be empty")
        if len(set(self.class_names)) != len(self.class_names):
            raise ValueError("class names must be unique")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def loss_config(self) -> LossConfig:
        return LossConfig(alpha=self.focal_alpha, beta=self.focal_beta,
                          pos_threshold=self.pos_threshold,
                          size_weight=self.size_loss_weight,
                          offset_weight=self.offset_loss_weight)

    def class_id(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise ValueError(f"unknown class name {name!r}") from None

    def to_dict(self) -> dict:
        return asdict(self)

    def with_overrides(self, **kwargs) -> "ModelConfig":
        return replace(self, **kwargs)


def config_from_dict(data: dict) -> ModelConfig:
    known = set(ModelConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    return ModelConfig(**data)


def save_config(cfg: ModelConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(cfg.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")


def load_config(path: str) -> ModelConfig:
    with open(path, "r", encoding="utf-8") as f:
        return config_from_dict(json.load(f))


def resolve_config(path: str = None) -> ModelConfig:
    """Load from the given path, else $CENTERDET_CONFIG, else defaults."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    if path:
        return load_config(path)
    return ModelConfig()
