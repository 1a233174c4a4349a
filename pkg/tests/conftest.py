import io

import numpy as np
import pytest
from PIL import Image

from drscreen.model import ModelConfig, build, save_checkpoint


def encode_png(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def random_rgb(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


@pytest.fixture(scope="session")
def tiny_config():
    return ModelConfig.tiny()


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory, tiny_config):
    """A saved tiny-config model, for service and CLI tests."""
    path = tmp_path_factory.mktemp("ckpt") / "tiny.ckpt"
    net = build(tiny_config, seed=7)
    save_checkpoint(path, net, {"seed": 7, "epochs": 0, "final_metrics": {}})
    return path
