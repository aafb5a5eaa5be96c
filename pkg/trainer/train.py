#!/usr/bin/env python3
"""Train a two-layer LIF network with surrogate gradients on delta-encoded
images and export float weights as a netspec JSON file.

The pipeline mirrors the fixed-point runtime: images are level-crossing
delta-encoded along the raster scan (threshold 0.05), the resulting amplitude
vector is presented statically for a number of unit-spaced steps, and neurons
are leaky integrate-and-fire with power-of-two decay, a positive threshold of
one, and reset by subtraction.  Prediction takes the output neuron with the
most spikes.  The exported JSON is consumed by the simulator's quantize /
infer / sweep commands.

    python train.py --hidden 1000 --epochs 100 --seed 0 \
        --out netspec.json --data ./mnist
"""

from __future__ import annotations

import argparse
import gzip
import json
import math
import struct
import sys
import time
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np
import torch
import torch.nn as nn

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
SURROGATE_SLOPE = 25.0


@dataclass
class TrainConfig:
    hidden: int = 1000
    epochs: int = 100
    beta: float = 0.5
    theta: float = 1.0
    enc_theta: float = 0.05
    reps: int = 28
    seed: int = 0
    batch_size: int = 128
    lr: float = 5e-4
    subset: Optional[int] = None

    def decay_exp(self) -> int:
        i = round(-math.log2(self.beta))
        if i < 1 or not math.isclose(self.beta, 2.0 ** -i, rel_tol=0, abs_tol=1e-12):
            raise ValueError(f"beta must be a power of two <= 0.5, got {self.beta}")
        return i


# ---------------------------------------------------------------------------
# data
# ---------------------------------------------------------------------------


def _open_idx(path):
    with open(path, "rb") as fh:
        head = fh.read(2)
    return gzip.open(path, "rb") if head == b"\x1f\x8b" else open(path, "rb")


def load_idx_pair(images_path, labels_path) -> Tuple[np.ndarray, np.ndarray]:
    with _open_idx(images_path) as fh:
        magic, count, rows, cols = struct.unpack(">IIII", fh.read(16))
        if magic != IMAGE_MAGIC:
            raise ValueError(f"bad image magic in {images_path}")
        images = np.frombuffer(fh.read(count * rows * cols), dtype=np.uint8)
        images = images.reshape(count, rows * cols).astype(np.float64) / 255.0
    with _open_idx(labels_path) as fh:
        magic, lcount = struct.unpack(">II", fh.read(8))
        if magic != LABEL_MAGIC:
            raise ValueError(f"bad label magic in {labels_path}")
        labels = np.frombuffer(fh.read(lcount), dtype=np.uint8).astype(np.int64)
    if count != lcount:
        raise ValueError("image/label count mismatch")
    return images, labels


def delta_encode(flat: np.ndarray, theta: float) -> np.ndarray:
    """Level-crossing delta modulation of one raster scan -> amplitude per
    pixel index (truncate toward zero, residual carried, eps-guarded)."""
    q = np.zeros(flat.shape[0], dtype=np.float32)
    residual = 0.0
    prev = float(flat[0])
    for p in range(1, flat.shape[0]):
        cur = float(flat[p])
        residual += cur - prev
        prev = cur
        ratio = residual / theta
        k = math.trunc(ratio + math.copysign(1e-9, ratio))
        if k:
            q[p] = k
            residual -= k * theta
    return q


def encode_dataset(images: np.ndarray, theta: float) -> np.ndarray:
    return np.stack([delta_encode(img, theta) for img in images])


def find_idx(data_dir, stem: str) -> str:
    from pathlib import Path

    for name in (stem, stem + ".gz"):
        p = Path(data_dir) / name
        if p.exists():
            return str(p)
    raise FileNotFoundError(f"{stem}[.gz] not found in {data_dir}")


# ---------------------------------------------------------------------------
# model
# ---------------------------------------------------------------------------


class SpikeFn(torch.autograd.Function):
    """Heaviside spike with fast-sigmoid surrogate gradient."""

    @staticmethod
    def forward(ctx, mem_minus_theta):
        ctx.save_for_backward(mem_minus_theta)
        return (mem_minus_theta >= 0).float()

    @staticmethod
    def backward(ctx, grad_output):
        (x,) = ctx.saved_tensors
        return grad_output / (1.0 + SURROGATE_SLOPE * x.abs()) ** 2


class LifNet(nn.Module):
    """784 -> hidden -> outputs, leaky neurons, no biases (the fixed-point
    runtime has none)."""

    def __init__(self, n_inputs: int, hidden: int, n_outputs: int, beta: float, theta: float):
        super().__init__()
        self.fc1 = nn.Linear(n_inputs, hidden, bias=False)
        self.fc2 = nn.Linear(hidden, n_outputs, bias=False)
        self.beta = beta
        self.theta = theta

    def forward(self, x: torch.Tensor, steps: int):
        batch = x.shape[0]
        mem1 = torch.zeros(batch, self.fc1.out_features, device=x.device)
        mem2 = torch.zeros(batch, self.fc2.out_features, device=x.device)
        spk2_sum = torch.zeros_like(mem2)
        mem2_rec = []
        cur1 = self.fc1(x)  # static presentation: same input current each step
        for _ in range(steps):
            mem1 = self.beta * mem1 + cur1
            spk1 = SpikeFn.apply(mem1 - self.theta)
            mem1 = mem1 - spk1 * self.theta
            mem2 = self.beta * mem2 + self.fc2(spk1)
            spk2 = SpikeFn.apply(mem2 - self.theta)
            mem2 = mem2 - spk2 * self.theta
            spk2_sum = spk2_sum + spk2
            mem2_rec.append(mem2)
        return spk2_sum, mem2_rec


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------


def evaluate(net: LifNet, x: torch.Tensor, y: torch.Tensor, cfg: TrainConfig) -> float:
    net.eval()
    correct = 0
    with torch.no_grad():
        for start in range(0, len(x), 512):
            xs, ys = x[start : start + 512], y[start : start + 512]
            counts, _ = net(xs, cfg.reps)
            correct += int((counts.argmax(dim=1) == ys).sum())
    return correct / len(x)


def train(cfg: TrainConfig, data_dir, *, log=print) -> dict:
    """Train on the IDX files in ``data_dir``; returns the netspec dict."""
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)

    images, labels = load_idx_pair(
        find_idx(data_dir, "train-images-idx3-ubyte"),
        find_idx(data_dir, "train-labels-idx1-ubyte"),
    )
    if cfg.subset is not None:
        images, labels = images[: cfg.subset], labels[: cfg.subset]
    log(f"encoding {len(images)} training images (theta={cfg.enc_theta}) ...")
    x_train = torch.from_numpy(encode_dataset(images, cfg.enc_theta))
    y_train = torch.from_numpy(labels)

    try:
        timg, tlab = (
            find_idx(data_dir, "t10k-images-idx3-ubyte"),
            find_idx(data_dir, "t10k-labels-idx1-ubyte"),
        )
        test_images, test_labels = load_idx_pair(timg, tlab)
        x_test = torch.from_numpy(encode_dataset(test_images, cfg.enc_theta))
        y_test = torch.from_numpy(test_labels)
    except FileNotFoundError:
        x_test = y_test = None

    n_inputs = x_train.shape[1]
    n_outputs = int(y_train.max()) + 1
    net = LifNet(n_inputs, cfg.hidden, n_outputs, cfg.beta, cfg.theta)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.lr, betas=(0.9, 0.999))
    loss_fn = nn.CrossEntropyLoss()

    n = len(x_train)
    for epoch in range(cfg.epochs):
        net.train()
        order = rng.permutation(n)
        epoch_loss = 0.0
        t0 = time.time()
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xs, ys = x_train[idx], y_train[idx]
            _, mem2_rec = net(xs, cfg.reps)
            loss = sum(loss_fn(mem, ys) for mem in mem2_rec)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += float(loss.detach())
        train_acc = evaluate(net, x_train, y_train, cfg)
        msg = f"epoch {epoch + 1}/{cfg.epochs}: loss {epoch_loss:.1f}, train acc {train_acc:.4f}"
        if x_test is not None:
            msg += f", test acc {evaluate(net, x_test, y_test, cfg):.4f}"
        log(msg + f" ({time.time() - t0:.0f}s)")

    float_train_acc = evaluate(net, x_train, y_train, cfg)
    float_test_acc = evaluate(net, x_test, y_test, cfg) if x_test is not None else None

    decay_exp = cfg.decay_exp()
    w1 = net.fc1.weight.detach().numpy().astype(np.float64)
    w2 = net.fc2.weight.detach().numpy().astype(np.float64)
    return {
        "format": "netspec",
        "width_bits": 8,
        "repetitions": cfg.reps,
        "metadata": {
            **asdict(cfg),
            "optimizer": "adam",
            "surrogate_slope": SURROGATE_SLOPE,
            "float_train_acc": float_train_acc,
            "float_test_acc": float_test_acc,
        },
        "layers": [
            {
                "n_inputs": n_inputs,
                "n_neurons": cfg.hidden,
                "decay_exp": decay_exp,
                "theta_high": cfg.theta,
                "theta_low": None,
                "weights_float": w1.tolist(),
            },
            {
                "n_inputs": cfg.hidden,
                "n_neurons": n_outputs,
                "decay_exp": decay_exp,
                "theta_high": cfg.theta,
                "theta_low": None,
                "weights_float": w2.tolist(),
            },
        ],
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hidden", type=int, default=1000)
    ap.add_argument("--epochs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True)
    ap.add_argument("--data", required=True, help="directory with MNIST IDX files")
    ap.add_argument("--batch-size", type=int, default=128)
    ap.add_argument("--lr", type=float, default=5e-4)
    ap.add_argument("--reps", type=int, default=28)
    ap.add_argument("--beta", type=float, default=0.5)
    ap.add_argument("--enc-theta", type=float, default=0.05)
    ap.add_argument("--subset", type=int, default=None)
    args = ap.parse_args(argv)

    cfg = TrainConfig(
        hidden=args.hidden,
        epochs=args.epochs,
        beta=args.beta,
        enc_theta=args.enc_theta,
        reps=args.reps,
        seed=args.seed,
        batch_size=args.batch_size,
        lr=args.lr,
        subset=args.subset,
    )
    try:
        cfg.decay_exp()  # fail fast on a bad beta
        spec = train(cfg, args.data)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(spec, fh)
        fh.write("\n")
    meta = spec["metadata"]
    print(f"wrote {args.out} (float test acc: {meta['float_test_acc']})")
    from export_check import check_netspec

    report = check_netspec(args.out)
    print(report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
