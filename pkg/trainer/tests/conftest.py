import os
import struct
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))


def write_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path) -> None:
    """Minimal IDX writer for test fixtures (big-endian, uint8 pixels)."""
    n, rows, cols = images.shape
    with open(images_path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        fh.write(np.rint(images * 255).astype(np.uint8).tobytes())
    with open(labels_path, "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, n))
        fh.write(labels.astype(np.uint8).tobytes())


def blob_dataset(n: int, n_classes: int = 3, seed: int = 0, rows: int = 28, cols: int = 28):
    """Blobby class templates plus noise; separable in the delta domain."""
    trng = np.random.default_rng(99)
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:rows, 0:cols]
    templates = []
    for _ in range(n_classes):
        img = np.zeros((rows, cols))
        for _ in range(trng.integers(2, 5)):
            cy, cx = trng.uniform(6, rows - 6), trng.uniform(6, cols - 6)
            r = trng.uniform(2.0, 4.5)
            img += np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * r * r))
        templates.append(np.clip(img / img.max(), 0, 1))
    images = np.zeros((n, rows, cols))
    labels = np.zeros(n, dtype=np.int64)
    for i in range(n):
        c = int(rng.integers(n_classes))
        labels[i] = c
        img = templates[c] + rng.normal(0, 0.02, size=(rows, cols))
        images[i] = np.clip(img, 0, 1)
    return np.rint(images * 255) / 255, labels


@pytest.fixture(scope="session")
def tiny_data_dir(tmp_path_factory):
    """IDX train/test pair small enough for a seconds-long training run."""
    root = tmp_path_factory.mktemp("idx")
    train_x, train_y = blob_dataset(180, seed=1)
    test_x, test_y = blob_dataset(60, seed=2)
    write_idx(train_x, train_y, root / "train-images-idx3-ubyte", root / "train-labels-idx1-ubyte")
    write_idx(test_x, test_y, root / "t10k-images-idx3-ubyte", root / "t10k-labels-idx1-ubyte")
    return root


def find_mnist():
    candidates = [os.environ.get("DTSNN_MNIST_DIR"), "./mnist", "./data/mnist"]
    names = [
        "train-images-idx3-ubyte",
        "train-labels-idx1-ubyte",
        "t10k-images-idx3-ubyte",
        "t10k-labels-idx1-ubyte",
    ]
    for cand in candidates:
        if not cand:
            continue
        d = Path(cand)
        if all((d / n).exists() or (d / (n + ".gz")).exists() for n in names):
            return d
    return None


requires_mnist = pytest.mark.skipif(
    find_mnist() is None,
    reason="MNIST IDX files not present (set DTSNN_MNIST_DIR); sandbox has no dataset network access",
)
