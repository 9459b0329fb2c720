"""PNG input/output helpers.

Images travel through the library as float arrays in [0, 1] (H, W, 3);
binary masks as uint8 arrays over {0, 1} with 1 = valid pixel, 0 = hole.
On disk both are 8-bit PNG: images RGB, masks single-channel with holes
stored as 0 and valid pixels as 255.
"""

from __future__ import annotations

import numpy as np
from PIL import Image

from .errors import DimensionMismatch


def load_image(path) -> np.ndarray:
    """Read an 8-bit PNG as a float64 (H, W, 3) array scaled by 1/255."""
    with Image.open(path) as im:
        rgb = im.convert("RGB")
        arr = np.asarray(rgb, dtype=np.float64)
    return arr / 255.0


def save_image(path, img: np.ndarray, compress_level: int = 6) -> None:
    """Write a [0, 1] float image as 8-bit RGB PNG (values round(x*255))."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DimensionMismatch(f"expected (H, W, 3) image, got {arr.shape}")
    out = np.rint(np.clip(arr, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(out, mode="RGB").save(path, format="PNG",
                                          compress_level=compress_level)


def load_mask(path) -> np.ndarray:
    """Read a single-channel PNG mask as uint8 {0, 1}; pixels >= 128 are valid."""
    with Image.open(path) as im:
        gray = im.convert("L")
        arr = np.asarray(gray, dtype=np.uint8)
    return (arr >= 128).astype(np.uint8)


def save_mask(path, mask: np.ndarray, compress_level: int = 6) -> None:
    """Write a {0, 1} mask as single-channel PNG with valid = 255, hole = 0."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected (H, W) mask, got {arr.shape}")
    out = (arr.astype(np.uint8) * 255)
    Image.fromarray(out, mode="L").save(path, format="PNG",
                                        compress_level=compress_level)


def require_same_shape(a: np.ndarray, b: np.ndarray, what: str = "inputs") -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(f"{what} differ in shape: {a.shape} vs {b.shape}")


def require_image_mask(img: np.ndarray, mask: np.ndarray) -> None:
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionMismatch(f"expected (H, W, 3) image, got {img.shape}")
    if mask.ndim != 2 or mask.shape != img.shape[:2]:
        raise DimensionMismatch(
            f"mask shape {mask.shape} does not match image {img.shape[:2]}")
