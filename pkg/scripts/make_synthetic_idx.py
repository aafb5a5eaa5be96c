#!/usr/bin/env python3
"""Generate a synthetic MNIST-shaped IDX dataset (for machines without the
real files).  Writes train/test image+label pairs in standard IDX layout."""

import argparse
from pathlib import Path

from dtsnn.dataset import save_idx, synthetic_digits


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="./synthetic-mnist")
    ap.add_argument("--train", type=int, default=10000)
    ap.add_argument("--test", type=int, default=2000)
    ap.add_argument("--classes", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--noise", type=float, default=0.03)
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train = synthetic_digits(args.train, seed=args.seed, n_classes=args.classes, noise=args.noise)
    test = synthetic_digits(args.test, seed=args.seed + 1, n_classes=args.classes, noise=args.noise)
    save_idx(train, out / "train-images-idx3-ubyte", out / "train-labels-idx1-ubyte")
    save_idx(test, out / "t10k-images-idx3-ubyte", out / "t10k-labels-idx1-ubyte")
    print(f"wrote {args.train} train / {args.test} test images to {out}")


if __name__ == "__main__":
    main()
