import os
from pathlib import Path

import hypothesis
import pytest

hypothesis.settings.register_profile("ci", max_examples=30, deadline=None)
hypothesis.settings.register_profile("default", max_examples=75, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=500, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def find_mnist():
    """Directory holding the four MNIST IDX files, or None."""
    candidates = [os.environ.get("DTSNN_MNIST_DIR"), "./mnist", "./data/mnist"]
    names = ["t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"]
    for cand in candidates:
        if not cand:
            continue
        d = Path(cand)
        if all((d / n).exists() or (d / (n + ".gz")).exists() for n in names):
            return d
    return None


def mnist_path(directory: Path, name: str) -> Path:
    p = directory / name
    return p if p.exists() else directory / (name + ".gz")


requires_mnist = pytest.mark.skipif(
    find_mnist() is None,
    reason="MNIST IDX files not present (set DTSNN_MNIST_DIR); sandbox has no dataset network access",
)
