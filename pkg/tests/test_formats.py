import json

import numpy as np
import pytest

from centerdet import formats, raster
from centerdet.codec import BBox
from centerdet.config import (CONFIG_ENV_VAR, ModelConfig, config_from_dict,
                              load_config, resolve_config, save_config)
from centerdet.synth import generate_scene, random_scene_spec

CLASSES = ["car", "ship", "plane"]


class TestAnnotations:
    def test_roundtrip(self, tmp_path):
        boxes = [BBox(1, 2, 30, 40, class_id=0),
                 BBox(5.5, 6.25, 10.5, 11.75, class_id=2)]
        path = tmp_path / "ann.txt"
        formats.save_annotations(boxes, CLASSES, path)
        assert formats.load_annotations(path, CLASSES) == boxes

    def test_empty_file(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("")
        assert formats.load_annotations(path, CLASSES) == []

    def test_malformed_line_names_number(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("1 2 30 40 car\n1 2 30\n")
        with pytest.raises(ValueError, match=":2"):
            formats.load_annotations(path, CLASSES)

    def test_unknown_class_rejected(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("1 2 30 40 submarine\n")
        with pytest.raises(ValueError, match="submarine"):
            formats.load_annotations(path, CLASSES)

    def test_degenerate_box_names_line(self, tmp_path):
        path = tmp_path / "ann.txt"
        path.write_text("30 2 30 40 car\n")
        with pytest.raises(ValueError, match=":1"):
            formats.load_annotations(path, CLASSES)


class TestDetections:
    def test_roundtrip(self, tmp_path):
        boxes = [BBox(1, 2, 30, 40, class_id=1, score=0.875),
                 BBox(0, 0, 4, 4, class_id=0, score=1.0)]
        path = tmp_path / "det.txt"
        formats.save_detections(boxes, CLASSES, path)
        assert formats.load_detections(path, CLASSES) == boxes

    def test_write_is_deterministic(self, tmp_path):
        boxes = [BBox(1 / 3, 2 / 7, 30.123456789, 40, class_id=1, score=0.5)]
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        formats.save_detections(boxes, CLASSES, a)
        formats.save_detections(boxes, CLASSES, b)
        assert a.read_bytes() == b.read_bytes()

    def test_malformed_rejected(self, tmp_path):
        path = tmp_path / "det.txt"
        path.write_text("car 0.5 1 2 3\n")
        with pytest.raises(ValueError, match="expected"):
            formats.load_detections(path, CLASSES)


class TestClassList:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "classes.txt"
        formats.save_class_list(CLASSES, path)
        assert formats.load_class_list(path) == CLASSES

    def test_rejects_duplicates(self, tmp_path):
        path = tmp_path / "classes.txt"
        path.write_text("a\nb\na\n")
        with pytest.raises(ValueError, match="duplicates"):
            formats.load_class_list(path)


class TestRaster:
    def test_scene_roundtrip_lossless(self, tmp_path):
        image, _ = generate_scene(random_scene_spec(5, 96, 64, 3, 4))
        path = tmp_path / "scene.ppm"
        raster.save_ppm(image, path)
        np.testing.assert_array_equal(raster.load_ppm(path), image)

    def test_header_and_size(self, tmp_path):
        image = np.zeros((3, 4, 6), np.float32)
        path = tmp_path / "img.ppm"
        raster.save_ppm(image, path)
        blob = path.read_bytes()
        assert blob.startswith(b"P6\n6 4\n255\n")
        assert len(blob) == len(b"P6\n6 4\n255\n") + 3 * 4 * 6

    def test_rejects_non_ppm(self, tmp_path):
        path = tmp_path / "img.ppm"
        path.write_bytes(b"P5\n2 2\n255\n" + b"\x00" * 4)
        with pytest.raises(ValueError, match="not binary PPM"):
            raster.load_ppm(path)

    def test_rejects_truncated(self, tmp_path):
        path = tmp_path / "img.ppm"
        path.write_bytes(b"P6\n4 4\n255\n" + b"\x00" * 10)
        with pytest.raises(ValueError, match="pixel bytes"):
            raster.load_ppm(path)

    def test_draw_boxes_marks_outline(self):
        image = np.zeros((3, 32, 32), np.float32)
        out = raster.draw_boxes(image, [BBox(4, 4, 12, 12, class_id=0)], 3)
        assert out[:, 4, 4:13].any() and out[:, 12, 4:13].any()
        assert not out[:, 20:, 20:].any()
        assert not image.any()  # original untouched


class TestConfig:
    def test_defaults_roundtrip(self, tmp_path):
        cfg = ModelConfig()
        path = tmp_path / "config.json"
        save_config(cfg, path)
        assert load_config(path) == cfg

    def test_custom_roundtrip(self, tmp_path):
        cfg = ModelConfig(tile_size=256, tile_stride=200, nms_iou=0.3,
                          test_scales=[1.0], class_names=["one", "two"],
                          base_width=8)
        path = tmp_path / "config.json"
        save_config(cfg, path)
        assert load_config(path) == cfg

    def test_env_var_resolution(self, tmp_path, monkeypatch):
        cfg = ModelConfig(class_names=["x", "y"])
        path = tmp_path / "config.json"
        save_config(cfg, path)
        monkeypatch.setenv(CONFIG_ENV_VAR, str(path))
        assert resolve_config() == cfg
        monkeypatch.delenv(CONFIG_ENV_VAR)
        assert resolve_config() == ModelConfig()

    def test_unknown_field_rejected(self):
        with pytest.raises(ValueError, match="unknown"):
            config_from_dict({"tile_size": 128, "bogus": 1})

    def test_validation(self):
        with pytest.raises(ValueError):
            ModelConfig(tile_stride=2048)
        with pytest.raises(ValueError):
            ModelConfig(test_scales=[])
        with pytest.raises(ValueError):
            ModelConfig(class_names=["a", "a"])
        with pytest.raises(ValueError):
            ModelConfig(workers=0)

    def test_loss_view_carries_weights(self):
        cfg = ModelConfig(focal_alpha=3.0, size_loss_weight=0.25)
        lc = cfg.loss_config()
        assert lc.alpha == 3.0 and lc.size_weight == 0.25
        assert lc.pos_threshold == 1.0 and lc.offset_weight == 1.0

    def test_json_keys_stable(self, tmp_path):
        path = tmp_path / "config.json"
        save_config(ModelConfig(), path)
        data = json.loads(path.read_text())
        assert data["down_ratio"] == 4
        assert data["max_detections"] == 160
        assert data["tile_size"] == 1024
        assert data["tile_stride"] == 824
        assert data["nms_iou"] == 0.45
