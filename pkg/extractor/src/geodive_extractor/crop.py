"""Image preprocessing: center crop, then resize to a backend's input size."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError


class DecodeError(Exception):
    """An image file could not be opened or decoded."""


def load_image(path: str | Path) -> Image.Image:
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc


def center_crop(image: Image.Image) -> Image.Image:
    """Centered square of side min(width, height).

    Odd margins use the floor convention: the left/top offset is
    (extent - side) // 2.
    """
    width, height = image.size
    if width <= 0 or height <= 0:
        raise DecodeError(f"image has degenerate size {image.size}")
    side = min(width, height)
    left = (width - side) // 2
    top = (height - side) // 2
    if (left, top, side) == (0, 0, width) and side == height:
        return image
    return image.crop((left, top, left + side, top + side))


def preprocess(image: Image.Image, size: int) -> np.ndarray:
    """Center crop and bilinear-resize to (size, size); returns uint8 HxWx3."""
    square = center_crop(image)
    if square.size != (size, size):
        square = square.resize((size, size), Image.BILINEAR)
    return np.asarray(square, dtype=np.uint8)
