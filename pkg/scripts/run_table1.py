#!/usr/bin/env python3
"""Quantization-robustness experiment driver: train the 784-H-10 network,
then sweep weight bit widths over the test set and print the accuracy table.

Full scale (hours of training on CPU, needs the real MNIST IDX files):

    python scripts/run_table1.py --data ./mnist --hidden 1000 --epochs 100

Desk scale (minutes, works on the synthetic dataset too):

    python scripts/make_synthetic_idx.py --out-dir ./synthetic-mnist
    python scripts/run_table1.py --data ./synthetic-mnist --hidden 128 \
        --epochs 3 --limit 500

Training runs in the separate trainer component (torch); pass --net to skip
training and sweep an existing float netspec instead.
"""

import argparse
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--data", required=True, help="directory with the IDX files")
    ap.add_argument("--net", default=None, help="existing float netspec (skips training)")
    ap.add_argument("--hidden", type=int, default=1000)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--subset", type=int, default=None, help="cap training images")
    ap.add_argument("--bits", default="4,5,6,7,8,9")
    ap.add_argument("--limit", type=int, default=None, help="cap evaluated test images")
    ap.add_argument("--out-dir", default="./table1-run")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = Path(args.data)

    def idx(name: str) -> str:
        p = data / name
        return str(p if p.exists() else data.joinpath(name + ".gz"))

    netspec = args.net
    if netspec is None:
        netspec = str(out / "netspec.json")
        cmd = [
            sys.executable, str(REPO / "trainer" / "train.py"),
            "--hidden", str(args.hidden), "--epochs", str(args.epochs),
            "--seed", str(args.seed), "--out", netspec, "--data", str(data),
        ]
        if args.subset:
            cmd += ["--subset", str(args.subset)]
        print("+", " ".join(cmd))
        subprocess.run(cmd, check=True)

    table = str(out / "table.csv")
    cmd = [
        sys.executable, "-m", "dtsnn", "sweep",
        "--net", netspec,
        "--images", idx("t10k-images-idx3-ubyte"),
        "--labels", idx("t10k-labels-idx1-ubyte"),
        "--bits", args.bits, "--out", table,
    ]
    if args.limit:
        cmd += ["--limit", str(args.limit)]
    print("+", " ".join(cmd))
    subprocess.run(cmd, check=True)
    print(f"table written to {table}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
