"""Anchor-free center-point object detection for large imagery."""

from .codec import BBox, Peak, Targets, decode_boxes, encode_targets, extract_peaks
from .config import ModelConfig, load_config, resolve_config, save_config
from .evaluation import EvalReport, evaluate, iou
from .losses import LossConfig, focal_loss, l1_loss_masked, total_loss
from .model import Detector, fuse_model_params, init_model_params, model_forward
from .pipeline import (DetectionSet, Tile, infer_large_image, multiscale_infer,
                       nms, split_tiles)
from .synth import OraclePredictor, SceneSpec, generate_scene, oracle_heads

__version__ = "0.1.0"

__all__ = [
    "BBox", "Peak", "Targets", "decode_boxes", "encode_targets",
    "extract_peaks", "ModelConfig", "load_config", "resolve_config",
    "save_config", "EvalReport", "evaluate", "iou", "LossConfig",
    "focal_loss", "l1_loss_masked", "total_loss", "Detector",
    "fuse_model_params", "init_model_params", "model_forward",
    "DetectionSet", "Tile", "infer_large_image", "multiscale_infer", "nms",
    "split_tiles", "OraclePredictor", "SceneSpec", "generate_scene",
    "oracle_heads", "__version__",
]
