"""Small helpers over image handles (paths or raw bytes)."""

from __future__ import annotations

import hashlib
import io

from PIL import Image


def load_image(ref) -> Image.Image:
    if isinstance(ref, bytes):
        return Image.open(io.BytesIO(ref))
    return Image.open(ref)


def image_size(ref) -> tuple[int, int]:
    with load_image(ref) as img:
        return img.size


def image_key(ref) -> str:
    """Stable identity for an image handle, used for caching and mocks."""
    if isinstance(ref, bytes):
        return "bytes:" + hashlib.sha256(ref).hexdigest()
    return str(ref)


def crop_image(ref, bbox: tuple[float, float, float, float]) -> bytes:
    """Crop (x, y, w, h) out of the image; returns PNG bytes."""
    x, y, w, h = bbox
    with load_image(ref) as img:
        region = img.crop((int(x), int(y), int(x + w), int(y + h)))
        buf = io.BytesIO()
        region.save(buf, format="PNG")
        return buf.getvalue()


def image_bytes(ref) -> bytes:
    if isinstance(ref, bytes):
        return ref
    with open(ref, "rb") as fh:
        return fh.read()


def placeholder_png(key: str, size: tuple[int, int] = (64, 64)) -> bytes:
    """Deterministic solid-color placeholder keyed by the id hash."""
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    color = (digest[0], digest[1], digest[2])
    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, format="PNG")
    return buf.getvalue()
