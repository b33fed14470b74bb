import numpy as np
import pytest

from centerdet.config import ModelConfig
from centerdet.rng import SplitMix64


@pytest.fixture
def rng():
    return SplitMix64(20240817)


@pytest.fixture
def small_cfg():
    """Desk-scale config: tiny tiles and a narrow backbone."""
    return ModelConfig(
        tile_size=128, tile_stride=96,
        base_width=8, head_width=16, se_ratio=8,
        class_names=["car", "ship", "plane", "tank"])


def uniform_array(rng, shape, low=-1.0, high=1.0, dtype=np.float32):
    n = int(np.prod(shape))
    return (rng.uniforms(n).reshape(shape) * (high - low) + low).astype(dtype)
