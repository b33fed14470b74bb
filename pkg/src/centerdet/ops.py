"""High-level operations shared by the CLI and the HTTP service.

Each function does one end-to-end job on files (encode targets, tiled
inference, tiling/merging, evaluation, the closed-loop demo, weight
fusion) and returns a JSON-friendly summary dict.  All outputs are
deterministic given the same inputs and configuration.
"""

import json
import os
from typing import List, Optional, Sequence

import numpy as np

from . import formats, raster
from .codec import BBox, clip_box_to_window, encode_targets
from .config import ModelConfig
from .evaluation import evaluate
from .model import (Detector, fuse_model_params, init_model_params,
                    model_manifest, params_to_tensors, tensors_to_params)
from .pipeline import (DetectionSet, FRAME_TILE, Tile, extract_tile,
                       infer_large_image, multiscale_infer, nms, split_tiles,
                       tile_to_global)
from .synth import OraclePredictor, generate_scene, random_scene_spec
from .weights import load_tensors, save_tensors

TARGETS_KIND = "targets"

DEMO_WIDTH = 1848
DEMO_HEIGHT = 1848
DEMO_OBJECTS = 24


def load_detector(weights_path: str, cfg: ModelConfig) -> Detector:
    tensors, manifest = load_tensors(weights_path)
    params = tensors_to_params(tensors, manifest)
    if params.num_classes != cfg.num_classes:
        raise ValueError(
            f"weight container was built for {params.num_classes} classes "
            f"but the configuration lists {cfg.num_classes}")
    return Detector(params)


def run_init_weights(output_path: str, cfg: ModelConfig, seed: int = 0) -> dict:
    """Create a fresh seeded weight container (train form)."""
    params = init_model_params(cfg.num_classes, base_width=cfg.base_width,
                               head_width=cfg.head_width,
                               se_ratio=cfg.se_ratio, seed=seed)
    tensors = params_to_tensors(params)
    save_tensors(output_path, tensors, model_manifest(params))
    return {"output_path": output_path, "tensor_count": len(tensors),
            "parameter_count": int(sum(t.size for t in tensors.values())),
            "form": "train", "seed": seed}


def run_encode(annotations_path: str, width: int, height: int,
               output_path: str, cfg: ModelConfig) -> dict:
    boxes = formats.load_annotations(annotations_path, cfg.class_names)
    targets = encode_targets(boxes, width, height, cfg.num_classes,
                             cfg.down_ratio)
    tensors = {
        "heatmap": targets.heatmap,
        "wh": targets.wh,
        "offset": targets.offset,
        "pos_mask": targets.pos_mask.astype(np.float32),
    }
    manifest = {"kind": TARGETS_KIND, "width": width, "height": height,
                "down_ratio": cfg.down_ratio,
                "object_count": targets.num_objects,
                "collisions": targets.collisions}
    save_tensors(output_path, tensors, manifest)
    peak = np.unravel_index(int(targets.heatmap.argmax()),
                            targets.heatmap.shape)
    return {"output_path": output_path,
            "object_count": targets.num_objects,
            "collisions": targets.collisions,
            "heatmap_max": float(targets.heatmap.max()),
            "heatmap_argmax": [int(v) for v in peak]}


def _detections_summary(boxes: Sequence[BBox], cfg: ModelConfig) -> List[dict]:
    return [{"class_name": cfg.class_names[b.class_id], "score": b.score,
             "x1": b.x1, "y1": b.y1, "x2": b.x2, "y2": b.y2} for b in boxes]


def run_infer(image_path: str, weights_path: str, output_path: str,
              cfg: ModelConfig, render_path: Optional[str] = None,
              scales: Optional[Sequence[float]] = None) -> dict:
    image = raster.load_ppm(image_path)
    detector = load_detector(weights_path, cfg)
    if scales:
        dets = multiscale_infer(image, detector, cfg, scales)
    else:
        dets = infer_large_image(image, detector, cfg)
    formats.save_detections(dets.boxes, cfg.class_names, output_path)
    if render_path:
        raster.save_ppm(raster.draw_boxes(image, dets.boxes, cfg.num_classes),
                        render_path)
    return {"output_path": output_path, "detection_count": len(dets.boxes),
            "detections": _detections_summary(dets.boxes, cfg),
            "render_path": render_path}


def run_tile(image_path: str, out_dir: str, cfg: ModelConfig,
             annotations_path: Optional[str] = None,
             min_area_frac: float = 0.3) -> dict:
    image = raster.load_ppm(image_path)
    _, h, w = image.shape
    tiles = split_tiles(w, h, cfg.tile_size, cfg.tile_stride)
    os.makedirs(out_dir, exist_ok=True)
    boxes = (formats.load_annotations(annotations_path, cfg.class_names)
             if annotations_path else None)

    index = {"width": w, "height": h, "tile_size": cfg.tile_size,
             "tile_stride": cfg.tile_stride, "tiles": []}
    for i, t in enumerate(tiles):
        name = f"tile_{i:03d}"
        raster.save_ppm(extract_tile(image, t),
                        os.path.join(out_dir, name + ".ppm"))
        entry = {"name": name, "origin_x": t.origin_x, "origin_y": t.origin_y,
                 "width": t.width, "height": t.height}
        if boxes is not None:
            local = []
            for b in boxes:
                clipped = clip_box_to_window(
                    b, t.origin_x, t.origin_y, t.origin_x + t.width,
                    t.origin_y + t.height, min_area_frac)
                if clipped is not None:
                    local.append(clipped)
            formats.save_annotations(local, cfg.class_names,
                                     os.path.join(out_dir, name + ".txt"))
            entry["object_count"] = len(local)
        index["tiles"].append(entry)

    index_path = os.path.join(out_dir, "index.json")
    with open(index_path, "w", encoding="utf-8") as f:
        json.dump(index, f, indent=2, sort_keys=True)
        f.write("\n")
    return {"index_path": index_path, "tile_count": len(tiles),
            "width": w, "height": h}


def run_merge(index_path: str, detections_dir: str, output_path: str,
              cfg: ModelConfig) -> dict:
    with open(index_path, "r", encoding="utf-8") as f:
        index = json.load(f)
    pooled: List[BBox] = []
    read = 0
    for entry in index["tiles"]:
        det_path = os.path.join(detections_dir, entry["name"] + ".txt")
        if not os.path.exists(det_path):
            continue
        read += 1
        local = formats.load_detections(det_path, cfg.class_names)
        tile = Tile(origin_x=entry["origin_x"], origin_y=entry["origin_y"],
                    width=entry["width"], height=entry["height"])
        pooled.extend(tile_to_global(DetectionSet(local, FRAME_TILE),
                                     tile).boxes)
    merged = nms(DetectionSet(pooled), cfg.nms_iou)
    formats.save_detections(merged.boxes, cfg.class_names, output_path)
    return {"output_path": output_path, "tiles_read": read,
            "input_count": len(pooled), "detection_count": len(merged.boxes)}


def run_eval(detections_path: str, annotations_path: str, cfg: ModelConfig,
             iou_thresh: float = 0.5) -> dict:
    dets = formats.load_detections(detections_path, cfg.class_names)
    gts = formats.load_annotations(annotations_path, cfg.class_names)
    report = evaluate(dets, gts, cfg.num_classes, iou_thresh)
    return {"report": report.to_dict(),
            "table": report.to_table(cfg.class_names)}


def run_demo(out_dir: str, cfg: ModelConfig, seed: int = 0,
             num_objects: int = DEMO_OBJECTS, width: int = DEMO_WIDTH,
             height: int = DEMO_HEIGHT,
             scales: Optional[Sequence[float]] = None) -> dict:
    """Closed loop: scene -> oracle heads -> tiled decode -> evaluation.

    Object sizes stay below the tile overlap so every object is fully
    contained in at least one tile; with the oracle predictor the merged
    detections should reproduce the ground truth exactly (mAP 1.0).
    """
    overlap = cfg.tile_size - cfg.tile_stride
    max_size = min(120, overlap if overlap >= 16 else cfg.tile_size // 4)
    spec = random_scene_spec(seed, width, height, cfg.num_classes,
                             num_objects, min_size=16, max_size=max_size,
                             down_ratio=cfg.down_ratio, cell_spacing=4)
    image, gts = generate_scene(spec)

    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "scene_spec.json"), "w",
              encoding="utf-8") as f:
        f.write(spec.to_json())
    raster.save_ppm(image, os.path.join(out_dir, "scene.ppm"))
    annotations_path = os.path.join(out_dir, "annotations.txt")
    formats.save_annotations(gts, cfg.class_names, annotations_path)

    oracle = OraclePredictor(gts, cfg.num_classes, cfg.down_ratio)
    if scales:
        dets = multiscale_infer(image, oracle, cfg, scales)
    else:
        dets = infer_large_image(image, oracle, cfg)
    detections_path = os.path.join(out_dir, "detections.txt")
    formats.save_detections(dets.boxes, cfg.class_names, detections_path)

    report = evaluate(dets.boxes, gts, cfg.num_classes, iou_thresh=0.5)
    table = report.to_table(cfg.class_names)
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as f:
        f.write(table + "\n")
    with open(os.path.join(out_dir, "report.json"), "w",
              encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")

    return {"out_dir": out_dir, "seed": seed, "object_count": len(gts),
            "detection_count": len(dets.boxes), "map": report.mean_ap,
            "flags": report.flags, "table": table}


def run_fuse(weights_path: str, output_path: str) -> dict:
    tensors, manifest = load_tensors(weights_path)
    params = tensors_to_params(tensors, manifest)
    fused = fuse_model_params(params)
    fused_tensors = params_to_tensors(fused)
    save_tensors(output_path, fused_tensors, model_manifest(fused))
    return {"output_path": output_path,
            "input_tensors": len(tensors),
            "output_tensors": len(fused_tensors)}
