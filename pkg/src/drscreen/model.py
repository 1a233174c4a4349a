"""Dense-convolutional DR classifier.

The reference configuration is a DenseNet-121 backbone (growth 32, blocks
[6,12,24,16], bottleneck x4, compression 0.5, 7x7 stem) followed by global
average pooling, dropout 0.5 and a 5-way sigmoid head. Parameter counts
include the batch-norm running statistics; at the reference configuration
the total is 7,042,629.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, asdict

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .grading import Grade

BN_EPSILON = 1e-3
BN_MOMENTUM = 0.01  # torch convention: running <- (1-m)*running + m*batch

CHECKPOINT_MAGIC = b"DRSCRNCK"
CHECKPOINT_VERSION = 1


class ConfigError(ValueError):
    """Raised for model configurations that cannot be instantiated."""


class ShapeError(ValueError):
    """Raised when an input batch does not match the configured shape."""


@dataclass(frozen=True)
class ModelConfig:
    """Hyperparameters of the dense-block classifier family."""

    initial_filters: int = 64
    growth_rate: int = 32
    block_layers: tuple[int, ...] = (6, 12, 24, 16)
    bottleneck_factor: int = 4
    compression: float = 0.5
    dropout_rate: float = 0.5
    num_classes: int = 5
    input_side: int = 224

    def __post_init__(self):
        if min(self.initial_filters, self.growth_rate, self.bottleneck_factor,
               self.num_classes, self.input_side) <= 0:
            raise ConfigError("all counts must be positive")
        if not self.block_layers or min(self.block_layers) <= 0:
            raise ConfigError("block_layers must be a non-empty list of positive counts")
        if not 0.0 < self.compression <= 1.0:
            raise ConfigError(f"compression must be in (0,1], got {self.compression}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must be in [0,1), got {self.dropout_rate}")
        object.__setattr__(self, "block_layers", tuple(self.block_layers))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["block_layers"] = list(self.block_layers)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        if "block_layers" in d:
            d["block_layers"] = tuple(d["block_layers"])
        return cls(**d)

    @classmethod
    def tiny(cls) -> "ModelConfig":
        """Small configuration used for gradient checks and fast tests."""
        return cls(initial_filters=16, growth_rate=8, block_layers=(2, 2),
                   bottleneck_factor=4, compression=0.5, dropout_rate=0.0,
                   num_classes=5, input_side=32)


@dataclass(frozen=True)
class Prediction:
    probabilities: tuple[float, ...]
    grade: Grade


def _bn(channels: int) -> nn.BatchNorm2d:
    return nn.BatchNorm2d(channels, eps=BN_EPSILON, momentum=BN_MOMENTUM)


class DenseLayer(nn.Module):
    """Norm-ReLU-1x1 conv bottleneck, Norm-ReLU-3x3 conv, concat output."""

    def __init__(self, in_channels: int, growth_rate: int, bottleneck_factor: int):
        super().__init__()
        width = bottleneck_factor * growth_rate
        self.norm1 = _bn(in_channels)
        self.conv1 = nn.Conv2d(in_channels, width, kernel_size=1, bias=False)
        self.norm2 = _bn(width)
        self.conv2 = nn.Conv2d(width, growth_rate, kernel_size=3, padding=1, bias=False)

    def forward(self, x):
        out = self.conv1(F.relu(self.norm1(x)))
        out = self.conv2(F.relu(self.norm2(out)))
        return torch.cat([x, out], dim=1)


class Transition(nn.Module):
    """Norm-ReLU-1x1 compression conv followed by 2x2 average pooling."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.norm = _bn(in_channels)
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size=1, bias=False)

    def forward(self, x):
        return F.avg_pool2d(self.conv(F.relu(self.norm(x))), kernel_size=2, stride=2)


class DenseClassifier(nn.Module):
    """Backbone plus global-average-pool / dropout / sigmoid head."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        self._validate_spatial_trace(config)

        self.stem_conv = nn.Conv2d(3, config.initial_filters, kernel_size=7,
                                   stride=2, padding=3, bias=False)
        self.stem_norm = _bn(config.initial_filters)

        channels = config.initial_filters
        blocks = []
        for i, n_layers in enumerate(config.block_layers):
            layers = []
            for _ in range(n_layers):
                layers.append(DenseLayer(channels, config.growth_rate,
                                         config.bottleneck_factor))
                channels += config.growth_rate
            blocks.append(nn.Sequential(*layers))
            if i != len(config.block_layers) - 1:
                out_channels = int(math.floor(channels * config.compression))
                blocks.append(Transition(channels, out_channels))
                channels = out_channels
        self.blocks = nn.Sequential(*blocks)
        self.final_norm = _bn(channels)
        self.feature_channels = channels
        self.head = nn.Linear(channels, config.num_classes)

    @staticmethod
    def _validate_spatial_trace(config: ModelConfig) -> None:
        side = config.input_side
        side = (side + 1) // 2  # 7x7 stride-2 stem conv
        side = (side + 1) // 2  # 3x3 stride-2 max pool
        for i in range(len(config.block_layers) - 1):
            side = side // 2  # transition average pool
            if side == 0:
                raise ConfigError(
                    f"input side {config.input_side} collapses to zero after "
                    f"transition {i + 1}"
                )

    def features(self, x: torch.Tensor) -> torch.Tensor:
        out = self.stem_conv(x)
        out = F.max_pool2d(F.relu(self.stem_norm(out)), kernel_size=3, stride=2,
                           padding=1)
        out = self.blocks(out)
        return F.relu(self.final_norm(out))

    def forward(self, x: torch.Tensor, return_trace: bool = False):
        feat = self.features(x)
        pooled = feat.mean(dim=(2, 3))
        dropped = F.dropout(pooled, p=self.config.dropout_rate, training=self.training)
        logits = self.head(dropped)
        probs = torch.sigmoid(logits)
        if return_trace:
            return probs, {"input": tuple(x.shape), "backbone": tuple(feat.shape),
                           "pooled": tuple(pooled.shape), "output": tuple(probs.shape)}
        return probs


def build(config: ModelConfig, seed: int) -> DenseClassifier:
    """Construct a freshly initialized model, deterministic for a given seed.

    Convolutions use fan-in-scaled normal init, norm layers scale=1/shift=0,
    head weights small-uniform with zero bias. No pretrained weights.
    """
    gen = torch.Generator().manual_seed(seed)
    model = DenseClassifier(config)
    with torch.no_grad():
        for m in model.modules():
            if isinstance(m, nn.Conv2d):
                fan_in = m.in_channels * m.kernel_size[0] * m.kernel_size[1]
                std = math.sqrt(2.0 / fan_in)
                m.weight.copy_(torch.randn(m.weight.shape, generator=gen) * std)
            elif isinstance(m, nn.BatchNorm2d):
                m.weight.fill_(1.0)
                m.bias.zero_()
                m.running_mean.zero_()
                m.running_var.fill_(1.0)
            elif isinstance(m, nn.Linear):
                bound = 1.0 / math.sqrt(m.in_features)
                m.weight.copy_((torch.rand(m.weight.shape, generator=gen) * 2 - 1) * bound)
                m.bias.zero_()
    model.eval()
    return model


def _counted_tensors(model: DenseClassifier) -> dict[str, torch.Tensor]:
    """Named tensors that make up the model: parameters plus BN running stats."""
    out = dict(model.named_parameters())
    for name, buf in model.named_buffers():
        if name.endswith(("running_mean", "running_var")):
            out[name] = buf
    return out


def parameter_count(model: DenseClassifier) -> int:
    """Total scalar count over weights, biases and normalization statistics."""
    return sum(t.numel() for t in _counted_tensors(model).values())


def head_parameter_count(model: DenseClassifier) -> int:
    return model.head.weight.numel() + model.head.bias.numel()


def forward(model: DenseClassifier, batch: np.ndarray, mode: str = "eval",
            rng_seed: int | None = None) -> np.ndarray:
    """Run a batch of M x side x side x 3 images through the network.

    Train mode enables inverted dropout and batch-statistic normalization;
    eval mode is deterministic. Returns M x num_classes probabilities.
    """
    cfg = model.config
    batch = np.asarray(batch, dtype=np.float32)
    expected = (cfg.input_side, cfg.input_side, 3)
    if batch.ndim != 4 or batch.shape[1:] != expected:
        raise ShapeError(f"batch must be M x {expected}, got {batch.shape}")
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")

    x = torch.from_numpy(batch).permute(0, 3, 1, 2).contiguous()
    was_training = model.training
    model.train(mode == "train")
    try:
        with torch.no_grad():
            if rng_seed is not None:
                torch.manual_seed(rng_seed)
            probs = model(x)
    finally:
        model.train(was_training)
    return probs.numpy()


def predict(model: DenseClassifier, image: np.ndarray) -> Prediction:
    """Eval-mode forward on one image; argmax grade, ties to the lowest index."""
    image = np.asarray(image, dtype=np.float32)
    side = model.config.input_side
    if image.shape != (side, side, 3):
        raise ShapeError(f"image must be {side}x{side}x3, got {image.shape}")
    probs = forward(model, image[None], mode="eval")[0]
    return prediction_from_probabilities(probs)


def prediction_from_probabilities(probs: np.ndarray) -> Prediction:
    probs = np.asarray(probs, dtype=np.float64)
    grade = Grade(int(np.argmax(probs)))  # np.argmax breaks ties at lowest index
    return Prediction(probabilities=tuple(float(p) for p in probs), grade=grade)


def dr_score(probs) -> float:
    """Scalar DR-positive score: 1 minus the renormalized grade-0 probability."""
    p = np.asarray(probs, dtype=np.float64)
    return float(1.0 - p[0] / p.sum())


# --- checkpoint container ---------------------------------------------------
#
# Layout: magic, u32 version, u64 JSON header length, UTF-8 JSON header
# (config, metadata, ordered tensor index with shapes), then each tensor's
# raw little-endian float32 data in index order.


class CheckpointError(ValueError):
    """Raised for malformed or inconsistent checkpoint files."""


def save_checkpoint(path, model: DenseClassifier, metadata: dict | None = None) -> None:
    tensors = _counted_tensors(model)
    index = []
    payload = bytearray()
    for name, tensor in tensors.items():
        data = tensor.detach().to(torch.float32).contiguous().numpy()
        index.append({"name": name, "shape": list(data.shape)})
        payload += data.astype("<f4").tobytes()
    header = json.dumps({
        "format_version": CHECKPOINT_VERSION,
        "config": model.config.to_dict(),
        "metadata": metadata or {},
        "tensors": index,
    }).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        fh.write(bytes(payload))


def load_checkpoint(path) -> tuple[DenseClassifier, dict]:
    """Load a checkpoint; returns the model (eval mode) and its metadata."""
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint file")
        version, header_len = struct.unpack("<IQ", fh.read(12))
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"{path}: unsupported format version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        config = ModelConfig.from_dict(header["config"])
        model = DenseClassifier(config)
        tensors = _counted_tensors(model)
        with torch.no_grad():
            for entry in header["tensors"]:
                name, shape = entry["name"], tuple(entry["shape"])
                if name not in tensors:
                    raise CheckpointError(f"{path}: unknown tensor {name!r}")
                target = tensors[name]
                if tuple(target.shape) != shape:
                    raise CheckpointError(
                        f"{path}: tensor {name!r} has shape {shape}, "
                        f"expected {tuple(target.shape)}"
                    )
                n = int(np.prod(shape)) if shape else 1
                raw = fh.read(4 * n)
                if len(raw) != 4 * n:
                    raise CheckpointError(f"{path}: truncated tensor data for {name!r}")
                arr = np.frombuffer(raw, dtype="<f4").reshape(shape)
                target.copy_(torch.from_numpy(arr.copy()))
    model.eval()
    return model, header["metadata"]


def checkpoint_digest(path) -> str:
    """Short content digest used as the served model version."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:12]
