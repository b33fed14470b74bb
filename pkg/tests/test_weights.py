import numpy as np
import pytest

from centerdet.model import (fuse_model_params, init_model_params,
                             model_forward, model_manifest, params_to_tensors,
                             tensors_to_params)
from centerdet.weights import load_tensors, save_tensors

from conftest import uniform_array


def test_save_load_bit_exact(tmp_path, rng):
    tensors = {
        "a": uniform_array(rng, (2, 3, 4)),
        "b.nested.name": uniform_array(rng, (7,)),
        "c": uniform_array(rng, (1, 1, 2, 2)),
    }
    manifest = {"kind": "test", "note": "round trip", "count": 3}
    path = tmp_path / "w.bin"
    save_tensors(path, tensors, manifest)
    loaded, got_manifest = load_tensors(path)
    assert got_manifest == manifest
    assert list(loaded) == list(tensors)
    for name in tensors:
        assert loaded[name].dtype == np.float32
        np.testing.assert_array_equal(loaded[name], tensors[name])


def test_save_twice_identical_bytes(tmp_path, rng):
    tensors = {"x": uniform_array(rng, (4, 4))}
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    save_tensors(p1, tensors, {"k": 1})
    save_tensors(p2, tensors, {"k": 1})
    assert p1.read_bytes() == p2.read_bytes()


def test_load_save_load_stable(tmp_path, rng):
    p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
    save_tensors(p1, {"x": uniform_array(rng, (3, 5))}, {"v": [1, 2]})
    t, m = load_tensors(p1)
    save_tensors(p2, t, m)
    assert p1.read_bytes() == p2.read_bytes()


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(ValueError, match="magic"):
        load_tensors(path)


def test_truncated_rejected(tmp_path, rng):
    path = tmp_path / "w.bin"
    save_tensors(path, {"x": uniform_array(rng, (8, 8))}, {})
    blob = path.read_bytes()
    path.write_bytes(blob[:-17])
    with pytest.raises(ValueError, match="truncated"):
        load_tensors(path)


def test_model_params_roundtrip_through_file(tmp_path, rng):
    params = init_model_params(3, base_width=8, head_width=8, se_ratio=8, seed=1)
    path = tmp_path / "model.bin"
    save_tensors(path, params_to_tensors(params), model_manifest(params))
    tensors, manifest = load_tensors(path)
    rebuilt = tensors_to_params(tensors, manifest)
    image = uniform_array(rng, (3, 64, 64), low=0.0, high=1.0)
    for a, b in zip(model_forward(image, params), model_forward(image, rebuilt)):
        np.testing.assert_array_equal(a, b)


def test_fused_params_roundtrip(tmp_path, rng):
    params = fuse_model_params(
        init_model_params(2, base_width=8, head_width=8, se_ratio=8, seed=4))
    path = tmp_path / "fused.bin"
    save_tensors(path, params_to_tensors(params), model_manifest(params))
    tensors, manifest = load_tensors(path)
    assert manifest["form"] == "fused"
    rebuilt = tensors_to_params(tensors, manifest)
    assert rebuilt.fused
    image = uniform_array(rng, (3, 32, 32), low=0.0, high=1.0)
    for a, b in zip(model_forward(image, params), model_forward(image, rebuilt)):
        np.testing.assert_array_equal(a, b)
