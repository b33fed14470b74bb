"""Pydantic request/response models for the HTTP service.

Requests reference server-local file paths (the service is a job runner
over a shared filesystem, not an upload endpoint) and responses carry the
same summaries the CLI prints.
"""

from typing import Dict, List, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"


class ConfigResponse(BaseModel):
    down_ratio: int
    max_detections: int
    tile_size: int
    tile_stride: int
    nms_iou: float
    pos_threshold: float
    focal_alpha: float
    focal_beta: float
    size_loss_weight: float
    offset_loss_weight: float
    score_floor: float
    test_scales: List[float]
    class_names: List[str]
    base_width: int
    head_width: int
    se_ratio: int
    workers: int


class InitWeightsRequest(BaseModel):
    output_path: str
    seed: int = 0


class InitWeightsResponse(BaseModel):
    output_path: str
    tensor_count: int
    parameter_count: int
    form: str
    seed: int


class EncodeRequest(BaseModel):
    annotations_path: str
    width: int = Field(gt=0)
    height: int = Field(gt=0)
    output_path: str


class EncodeResponse(BaseModel):
    output_path: str
    object_count: int
    collisions: int
    heatmap_max: float
    heatmap_argmax: List[int]


class Detection(BaseModel):
    class_name: str
    score: float
    x1: float
    y1: float
    x2: float
    y2: float


class InferRequest(BaseModel):
    image_path: str
    weights_path: str
    output_path: str
    render_path: Optional[str] = None
    scales: Optional[List[float]] = None


class InferResponse(BaseModel):
    output_path: str
    detection_count: int
    detections: List[Detection]
    render_path: Optional[str] = None


class TileRequest(BaseModel):
    image_path: str
    out_dir: str
    annotations_path: Optional[str] = None
    min_area_frac: float = 0.3


class TileResponse(BaseModel):
    index_path: str
    tile_count: int
    width: int
    height: int


class MergeRequest(BaseModel):
    index_path: str
    detections_dir: str
    output_path: str


class MergeResponse(BaseModel):
    output_path: str
    tiles_read: int
    input_count: int
    detection_count: int


class EvalRequest(BaseModel):
    detections_path: str
    annotations_path: str
    iou_thresh: float = 0.5


class ClassResult(BaseModel):
    ap: float
    tp: int
    fp: int
    fn: int
    gt_count: int


class EvalResponse(BaseModel):
    map: float
    per_class: Dict[str, ClassResult]
    classes_in_gt: List[int]
    flags: List[str]
    table: str


class DemoRequest(BaseModel):
    out_dir: str
    seed: int = 0
    num_objects: int = 24
    width: int = 1848
    height: int = 1848
    scales: Optional[List[float]] = None


class DemoResponse(BaseModel):
    out_dir: str
    seed: int
    object_count: int
    detection_count: int
    map: float
    flags: List[str]
    table: str


class FuseRequest(BaseModel):
    weights_path: str
    output_path: str


class FuseResponse(BaseModel):
    output_path: str
    input_tensors: int
    output_tensors: int
