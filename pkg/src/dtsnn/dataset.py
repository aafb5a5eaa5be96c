"""MNIST-style IDX file handling and image-to-amplitude encoding.

Images load as float arrays in [0, 1] (pixels divided by 255).  Encoding
delta-modulates the row-major raster scan of an image: the event emitted at
pixel index p becomes the input amplitude of network line p, so a 784-pixel
image drives 784 input lines.  Pixel 0 has no predecessor and never fires.

Files may be plain IDX or gzip-compressed (detected by magic).
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spike_codec import delta_encode_signal

__all__ = [
    "LabeledImageSet",
    "load_idx",
    "save_idx",
    "encode_image",
    "synthetic_digits",
]

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass
class LabeledImageSet:
    images: np.ndarray  # (n, rows, cols) float64 in [0, 1]
    labels: np.ndarray  # (n,) int64

    def __post_init__(self) -> None:
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 3:
            raise ValueError("images must be (n, rows, cols)")
        if len(self.images) != len(self.labels):
            raise ValueError(
                f"count mismatch: {len(self.images)} images vs {len(self.labels)} labels"
            )
        if self.images.size and (self.images.min() < 0.0 or self.images.max() > 1.0):
            raise ValueError("pixel values must lie in [0, 1]")

    def __len__(self) -> int:
        return len(self.images)


def _open_maybe_gzip(path):
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"\x1f\x8b":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_exact(fh, n: int, path) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ValueError(f"truncated IDX file {path}")
    return data


def load_idx(images_path, labels_path) -> LabeledImageSet:
    """Parse a big-endian IDX image/label file pair."""
    with _open_maybe_gzip(images_path) as fh:
        magic, count, rows, cols = struct.unpack(">IIII", _read_exact(fh, 16, images_path))
        if magic != IMAGE_MAGIC:
            raise ValueError(f"bad magic 0x{magic:08x} in image file {images_path}")
        raw = _read_exact(fh, count * rows * cols, images_path)
        images = np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols)
    with _open_maybe_gzip(labels_path) as fh:
        magic, lcount = struct.unpack(">II", _read_exact(fh, 8, labels_path))
        if magic != LABEL_MAGIC:
            raise ValueError(f"bad magic 0x{magic:08x} in label file {labels_path}")
        labels = np.frombuffer(_read_exact(fh, lcount, labels_path), dtype=np.uint8)
    if count != lcount:
        raise ValueError(f"count mismatch: {count} images vs {lcount} labels")
    return LabeledImageSet(images=images / 255.0, labels=labels.astype(np.int64))


def save_idx(data: LabeledImageSet, images_path, labels_path) -> None:
    """Write a LabeledImageSet back to IDX (pixels re-scaled to 0..255)."""
    n, rows, cols = data.images.shape
    pixels = np.rint(data.images * 255.0).astype(np.uint8)
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        fh.write(pixels.tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, n))
        fh.write(data.labels.astype(np.uint8).tobytes())


def encode_image(image: np.ndarray, theta_enc: float = 0.05) -> np.ndarray:
    """Delta-encode an image's raster scan into a per-line amplitude vector.

    Returns an int64 vector with one entry per pixel; entry p is the amplitude
    of the raster-scan event at pixel index p (0 when the scan emitted none).
    """
    flat = np.asarray(image, dtype=np.float64).reshape(-1)
    q = np.zeros(flat.shape[0], dtype=np.int64)
    for t, a in delta_encode_signal(flat, theta_enc):
        q[t] += a
    return q


def synthetic_digits(
    n: int,
    *,
    seed: int = 0,
    template_seed: int = 1234,
    n_classes: int = 10,
    rows: int = 28,
    cols: int = 28,
    noise: float = 0.03,
) -> LabeledImageSet:
    """Deterministic stand-in dataset for environments without MNIST.

    Each class is a fixed random soft blob pattern; images add pixel noise and
    a small shift, so classes are separable but not trivially identical.  The
    class templates depend only on ``template_seed``, so differently seeded
    splits (train/test) share the same classes.
    """
    trng = np.random.default_rng(template_seed)
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:rows, 0:cols]
    templates = []
    for _ in range(n_classes):
        img = np.zeros((rows, cols))
        for _ in range(trng.integers(2, 5)):
            cy, cx = trng.uniform(6, rows - 6), trng.uniform(6, cols - 6)
            r = trng.uniform(2.0, 5.0)
            img += np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
        templates.append(np.clip(img / img.max(), 0.0, 1.0))
    images = np.zeros((n, rows, cols))
    labels = np.zeros(n, dtype=np.int64)
    for i in range(n):
        c = int(rng.integers(n_classes))
        labels[i] = c
        img = templates[c]
        dy, dx = int(rng.integers(-2, 3)), int(rng.integers(-2, 3))
        img = np.roll(np.roll(img, dy, axis=0), dx, axis=1)
        img = img + rng.normal(0.0, noise, size=img.shape)
        images[i] = np.clip(img, 0.0, 1.0)
    # land pixels on the 8-bit grid like a real capture would
    images = np.rint(images * 255.0) / 255.0
    return LabeledImageSet(images=images, labels=labels)
