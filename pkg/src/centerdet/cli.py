"""Command-line interface: a thin wrapper over the ops layer.

Every subcommand loads the configuration (``--config`` flag, else the
CENTERDET_CONFIG environment variable, else defaults), applies any
field overrides given as flags, runs one operation and prints a short
summary.  Exit code is 0 exactly when no error occurred.
"""

import argparse
import json
import sys

from . import ops
from .config import resolve_config, save_config, ModelConfig


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="path to a JSON config file")
    p.add_argument("--workers", type=int, help="tile-level worker threads")
    p.add_argument("--k", type=int, dest="max_detections",
                   help="decoder top-K override")
    p.add_argument("--score-floor", type=float, dest="score_floor",
                   help="minimum decoded score to keep")
    p.add_argument("--nms-iou", type=float, dest="nms_iou",
                   help="NMS IoU threshold override")
    p.add_argument("--tile-size", type=int, dest="tile_size")
    p.add_argument("--tile-stride", type=int, dest="tile_stride")


def _load_config(args) -> ModelConfig:
    cfg = resolve_config(args.config)
    overrides = {}
    for name in ("workers", "max_detections", "score_floor", "nms_iou",
                 "tile_size", "tile_stride"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return cfg.with_overrides(**overrides) if overrides else cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="centerdet",
        description="Anchor-free center-point detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init-weights", help="create a seeded weight container")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    _add_config_flags(p)

    p = sub.add_parser("encode", help="convert annotations to training targets")
    p.add_argument("--annotations", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)

    p = sub.add_parser("infer", help="detect objects in a raster image")
    p.add_argument("--image", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--render", help="write the image with boxes drawn")
    p.add_argument("--scales", type=float, nargs="+",
                   help="multi-scale test factors (omit for single scale)")
    _add_config_flags(p)

    p = sub.add_parser("tile", help="split an image (and annotations) into tiles")
    p.add_argument("--image", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--annotations")
    p.add_argument("--min-area-frac", type=float, default=0.3,
                   help="keep clipped boxes with at least this area fraction")
    _add_config_flags(p)

    p = sub.add_parser("merge", help="merge per-tile detections and run NMS")
    p.add_argument("--index", required=True, help="index.json from 'tile'")
    p.add_argument("--detections-dir", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)

    p = sub.add_parser("eval", help="score detections against annotations")
    p.add_argument("--detections", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--json-out", help="also write the report as JSON")
    _add_config_flags(p)

    p = sub.add_parser("demo", help="closed-loop synthetic demo (oracle heads)")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--objects", type=int, default=ops.DEMO_OBJECTS)
    p.add_argument("--width", type=int, default=ops.DEMO_WIDTH)
    p.add_argument("--height", type=int, default=ops.DEMO_HEIGHT)
    p.add_argument("--scales", type=float, nargs="+")
    _add_config_flags(p)

    p = sub.add_parser("fuse-weights",
                       help="collapse train-form weights for inference")
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)

    p = sub.add_parser("write-config", help="write the active config as JSON")
    p.add_argument("--out", required=True)
    _add_config_flags(p)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    _add_config_flags(p)

    return parser


def _dispatch(args) -> int:
    cfg = _load_config(args)
    if args.command == "init-weights":
        info = ops.run_init_weights(args.out, cfg, seed=args.seed)
        print(f"wrote {info['tensor_count']} tensors "
              f"({info['parameter_count']} parameters) to {info['output_path']}")
    elif args.command == "encode":
        info = ops.run_encode(args.annotations, args.width, args.height,
                              args.out, cfg)
        print(f"encoded {info['object_count']} objects "
              f"({info['collisions']} center collisions) to {info['output_path']}")
        print(f"heatmap max {info['heatmap_max']:.6f} at "
              f"{tuple(info['heatmap_argmax'])}")
    elif args.command == "infer":
        info = ops.run_infer(args.image, args.weights, args.out, cfg,
                             render_path=args.render, scales=args.scales)
        print(f"{info['detection_count']} detections -> {info['output_path']}")
    elif args.command == "tile":
        info = ops.run_tile(args.image, args.out_dir, cfg,
                            annotations_path=args.annotations,
                            min_area_frac=args.min_area_frac)
        print(f"{info['tile_count']} tiles -> {info['index_path']}")
    elif args.command == "merge":
        info = ops.run_merge(args.index, args.detections_dir, args.out, cfg)
        print(f"merged {info['input_count']} boxes from {info['tiles_read']} "
              f"tiles into {info['detection_count']} -> {info['output_path']}")
    elif args.command == "eval":
        result = ops.run_eval(args.detections, args.annotations, cfg,
                              iou_thresh=args.iou)
        print(result["table"])
        if args.json_out:
            with open(args.json_out, "w", encoding="utf-8") as f:
                json.dump(result["report"], f, indent=2, sort_keys=True)
                f.write("\n")
    elif args.command == "demo":
        info = ops.run_demo(args.out_dir, cfg, seed=args.seed,
                            num_objects=args.objects, width=args.width,
                            height=args.height, scales=args.scales)
        print(info["table"])
        print(f"demo mAP {info['map']:.4f} "
              f"({info['detection_count']} detections, "
              f"{info['object_count']} objects) -> {info['out_dir']}")
    elif args.command == "fuse-weights":
        info = ops.run_fuse(args.weights, args.out)
        print(f"fused {info['input_tensors']} tensors into "
              f"{info['output_tensors']} -> {info['output_path']}")
    elif args.command == "write-config":
        save_config(cfg, args.out)
        print(f"config -> {args.out}")
    elif args.command == "serve":
        import uvicorn
        from .service import create_app
        uvicorn.run(create_app(cfg), host=args.host, port=args.port)
    else:  # pragma: no cover - argparse enforces the choices
        raise ValueError(f"unknown command {args.command!r}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
