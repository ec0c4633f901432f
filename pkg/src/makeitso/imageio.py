"""PNG/JPEG ingestion and emission for generator-space images.

Generator images are float arrays shaped (3, H, W) in [-1, 1]. Encoding maps
[-1, 1] to [0, 255] via (x + 1) * 127.5 with round-half-even, so a decoded
PNG re-encodes byte-identically.
"""

from __future__ import annotations

import io
import os

import numpy as np
from PIL import Image

from .errors import ContractViolationError


def image_to_uint8(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[0] != 3:
        raise ContractViolationError(f"expected (3, H, W) image, got {img.shape}")
    clipped = np.clip(img, -1.0, 1.0)
    scaled = (clipped + 1.0) * 127.5
    return np.rint(scaled).astype(np.uint8)


def uint8_to_image(pixels: np.ndarray) -> np.ndarray:
    pixels = np.asarray(pixels, dtype=np.float32)
    return pixels / 127.5 - 1.0


def save_png(img: np.ndarray, path: str | os.PathLike):
    with open(path, "wb") as fh:
        fh.write(encode_png(img))


def encode_png(img: np.ndarray) -> bytes:
    u8 = image_to_uint8(img)
    pil = Image.fromarray(np.transpose(u8, (1, 2, 0)), mode="RGB")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def load_image(source: str | os.PathLike | bytes, resolution: int):
    """Decode a PNG/JPEG and fit it to a square generator canvas.

    Non-square inputs are center-cropped to square, then bilinear-resized.
    Returns (image in [-1, 1], (original_width, original_height)).
    """
    if isinstance(source, (bytes, bytearray)):
        fh = io.BytesIO(source)
    else:
        fh = open(source, "rb")
    try:
        with Image.open(fh) as pil:
            pil = pil.convert("RGB")
            orig_size = pil.size
            w, h = pil.size
            side = min(w, h)
            left = (w - side) // 2
            top = (h - side) // 2
            pil = pil.crop((left, top, left + side, top + side))
            if side != resolution:
                pil = pil.resize((resolution, resolution), Image.BILINEAR)
            arr = np.asarray(pil, dtype=np.float32)
    finally:
        if not isinstance(source, (bytes, bytearray)):
            fh.close()
    chw = np.transpose(arr, (2, 0, 1))
    return uint8_to_image(chw), orig_size
