"""FastAPI service wrapping the detection library.

The app is bound to one configuration at startup (``GET /config`` echoes
it) and exposes each pipeline operation as a POST endpoint over
server-local files.  Bad inputs surface as 400s with the library's
diagnostic message; missing files as 404s.
"""

from fastapi import FastAPI, HTTPException

from .. import ops
from ..config import ModelConfig, resolve_config
from . import schemas


def _guarded(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except FileNotFoundError as e:
        raise HTTPException(status_code=404, detail=str(e)) from e
    except ValueError as e:
        raise HTTPException(status_code=400, detail=str(e)) from e


def create_app(cfg: ModelConfig = None) -> FastAPI:
    cfg = cfg or resolve_config()
    app = FastAPI(title="centerdet",
                  description="Anchor-free center-point detection service")

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse()

    @app.get("/config", response_model=schemas.ConfigResponse)
    def get_config():
        return schemas.ConfigResponse(**cfg.to_dict())

    @app.post("/init-weights", response_model=schemas.InitWeightsResponse)
    def init_weights(req: schemas.InitWeightsRequest):
        return _guarded(ops.run_init_weights, req.output_path, cfg,
                        seed=req.seed)

    @app.post("/encode", response_model=schemas.EncodeResponse)
    def encode(req: schemas.EncodeRequest):
        return _guarded(ops.run_encode, req.annotations_path, req.width,
                        req.height, req.output_path, cfg)

    @app.post("/infer", response_model=schemas.InferResponse)
    def infer(req: schemas.InferRequest):
        return _guarded(ops.run_infer, req.image_path, req.weights_path,
                        req.output_path, cfg, render_path=req.render_path,
                        scales=req.scales)

    @app.post("/tile", response_model=schemas.TileResponse)
    def tile(req: schemas.TileRequest):
        return _guarded(ops.run_tile, req.image_path, req.out_dir, cfg,
                        annotations_path=req.annotations_path,
                        min_area_frac=req.min_area_frac)

    @app.post("/merge", response_model=schemas.MergeResponse)
    def merge(req: schemas.MergeRequest):
        return _guarded(ops.run_merge, req.index_path, req.detections_dir,
                        req.output_path, cfg)

    @app.post("/eval", response_model=schemas.EvalResponse)
    def evaluate(req: schemas.EvalRequest):
        result = _guarded(ops.run_eval, req.detections_path,
                          req.annotations_path, cfg,
                          iou_thresh=req.iou_thresh)
        report = result["report"]
        return schemas.EvalResponse(
            map=report["mAP"], per_class=report["per_class"],
            classes_in_gt=report["classes_in_gt"], flags=report["flags"],
            table=result["table"])

    @app.post("/demo", response_model=schemas.DemoResponse)
    def demo(req: schemas.DemoRequest):
        return _guarded(ops.run_demo, req.out_dir, cfg, seed=req.seed,
                        num_objects=req.num_objects, width=req.width,
                        height=req.height, scales=req.scales)

    @app.post("/fuse-weights", response_model=schemas.FuseResponse)
    def fuse_weights(req: schemas.FuseRequest):
        return _guarded(ops.run_fuse, req.weights_path, req.output_path)

    return app
