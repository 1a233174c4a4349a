"""Image decoding, normalization, cropping, resizing and seeded augmentation.

All images are numpy arrays of shape H x W x 3 in RGB channel order:
uint8 in [0, 255] straight after decoding, float32 in [0, 1] after
:func:`normalize`.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

NETWORK_INPUT_SIDE = 224


class ImageDecodeError(ValueError):
    """Raised when a byte stream cannot be decoded as a raster image."""


class CropBoundsError(ValueError):
    """Raised when a crop rectangle falls outside the image."""


@dataclass(frozen=True)
class CropRect:
    """Square crop region: top-left offsets plus edge length, in pixels."""

    x: int
    y: int
    side: int

    def __post_init__(self):
        if self.x < 0 or self.y < 0 or self.side <= 0:
            raise CropBoundsError(
                f"invalid crop rect x={self.x} y={self.y} side={self.side}"
            )

    def check_within(self, height: int, width: int) -> None:
        if self.x + self.side > width or self.y + self.side > height:
            raise CropBoundsError(
                f"crop rect x={self.x} y={self.y} side={self.side} exceeds "
                f"image {height}x{width}"
            )


@dataclass(frozen=True)
class AugmentConfig:
    """Probabilities and ranges for the training-time augmentation pipeline."""

    p_zoom: float = 0.15
    zoom_range: tuple[float, float] = (1.0, 1.3)
    p_hflip: float = 0.5
    p_vflip: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("p_zoom", "p_hflip", "p_vflip"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0,1], got {p}")
        lo, hi = self.zoom_range
        if lo <= 0 or hi < lo:
            raise ValueError(f"zoom_range must be a positive interval, got {self.zoom_range}")

    def make_rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def decode_image(data: bytes) -> np.ndarray:
    """Decode PNG/JPEG bytes into an H x W x 3 uint8 RGB array.

    Grayscale sources are replicated across the three channels; an alpha
    plane, if present, is dropped.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image bytes: {exc}") from exc
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ImageDecodeError(f"unexpected decoded shape {arr.shape}")
    return arr


def normalize(img: np.ndarray) -> np.ndarray:
    """Scale intensities from [0, 255] to [0, 1] by dividing by 255."""
    img = np.asarray(img)
    if img.size and (img.min() < 0 or img.max() > 255):
        raise ValueError("pixel intensities must lie in [0, 255]")
    return (img.astype(np.float32) / np.float32(255.0)).astype(np.float32)


def square_crop(img: np.ndarray, rect: CropRect | None = None) -> np.ndarray:
    """Extract a square region; defaults to the centered maximal square."""
    h, w = img.shape[:2]
    if rect is None:
        side = min(h, w)
        rect = CropRect(x=(w - side) // 2, y=(h - side) // 2, side=side)
    rect.check_within(h, w)
    return img[rect.y : rect.y + rect.side, rect.x : rect.x + rect.side].copy()


def resize_bilinear(img: np.ndarray, target: int) -> np.ndarray:
    """Resize a square image to target x target with bilinear interpolation.

    Sampling uses half-pixel centers: source coordinate for output index i
    is (i + 0.5) * scale - 0.5, clamped to the valid range.
    """
    h, w = img.shape[:2]
    if h != w:
        raise ValueError(f"resize_bilinear requires a square input, got {h}x{w}")
    if target <= 0:
        raise ValueError(f"target side must be positive, got {target}")
    if target == h:
        return img.astype(np.float32, copy=True)

    squeeze = img.ndim == 2
    src = img.astype(np.float32)
    if squeeze:
        src = src[:, :, None]
    scale = h / target
    coords = (np.arange(target, dtype=np.float64) + 0.5) * scale - 0.5
    coords = np.clip(coords, 0.0, h - 1)
    lo = np.floor(coords).astype(np.int64)
    hi = np.minimum(lo + 1, h - 1)
    frac = (coords - lo).astype(np.float32)

    # rows then columns; bilinear is separable
    top = src[lo]
    bot = src[hi]
    rows = top + (bot - top) * frac[:, None, None]
    left = rows[:, lo]
    right = rows[:, hi]
    out = (left + (right - left) * frac[None, :, None]).astype(np.float32)
    return out[:, :, 0] if squeeze else out


def flip(img: np.ndarray, axis: str) -> np.ndarray:
    """Mirror the image: 'horizontal' reverses columns, 'vertical' rows."""
    if axis == "horizontal":
        return img[:, ::-1].copy()
    if axis == "vertical":
        return img[::-1].copy()
    raise ValueError(f"axis must be 'horizontal' or 'vertical', got {axis!r}")


def random_zoom(img: np.ndarray, factor: float) -> np.ndarray:
    """Zoom in by `factor`: crop the centered 1/factor region, resize back.

    Only factors >= 1 are supported; zoom-out would need border padding,
    which the default pipeline never requests.
    """
    if factor <= 0:
        raise ValueError(f"zoom factor must be positive, got {factor}")
    if factor < 1.0:
        raise ValueError(f"zoom-out (factor < 1) is not supported, got {factor}")
    if factor == 1.0:
        return img.copy()
    h, w = img.shape[:2]
    if h != w:
        raise ValueError("random_zoom requires a square input")
    crop_side = max(1, int(round(h / factor)))
    off = (h - crop_side) // 2
    region = square_crop(img, CropRect(x=off, y=off, side=crop_side))
    return resize_bilinear(region, h)


def augment(img: np.ndarray, cfg: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    """Apply zoom / hflip / vflip, each with its configured probability.

    The four uniform draws (zoom fire, zoom factor, hflip fire, vflip fire)
    are always consumed in that order, so a seeded stream stays aligned no
    matter which transforms actually fire.
    """
    u_zoom = rng.uniform()
    factor = rng.uniform(cfg.zoom_range[0], cfg.zoom_range[1])
    u_hflip = rng.uniform()
    u_vflip = rng.uniform()

    out = img
    if u_zoom < cfg.p_zoom:
        out = random_zoom(out, factor)
    if u_hflip < cfg.p_hflip:
        out = flip(out, "horizontal")
    if u_vflip < cfg.p_vflip:
        out = flip(out, "vertical")
    return out if out is not img else img.copy()


def preprocess_for_inference(
    data: bytes, rect: CropRect | None = None, target: int = NETWORK_INPUT_SIDE
) -> np.ndarray:
    """decode -> square crop -> bilinear resize -> normalize; no augmentation."""
    img = decode_image(data)
    img = square_crop(img, rect)
    img = resize_bilinear(img, target)
    return normalize(img)
