"""Fixed-point weight quantization and the bit-width accuracy sweep.

Weights quantize symmetrically to a per-layer power-of-two scale: the largest
scale s with max|w| * s <= 2**(bits-1) - 1, round-half-away-from-zero, with
saturation as the (normally unreachable) safety net.  Thresholds share the
layer's scale, so a float threshold of one becomes exactly s and the whole
network stays integer.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .netspec import LayerSpec, NetSpec, netspec_from_dict
from . import network

__all__ = ["quantize_weights", "quantize_layer_dict", "quantize_netspec", "sweep", "SweepRow", "write_sweep_csv"]

MIN_BITS = 2
MAX_BITS = 16


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quantize_weights(weights, bits: int):
    """Quantize a float matrix; returns (int64 matrix, power-of-two scale).

    Scale is the largest power of two keeping the largest magnitude inside the
    symmetric range; an all-zero matrix gets scale 1.  Entries round half away
    from zero and saturate at +-(2**(bits-1) - 1).
    """
    if not MIN_BITS <= bits <= MAX_BITS:
        raise ValueError(f"bit width must be in [{MIN_BITS}, {MAX_BITS}]")
    w = np.asarray(weights, dtype=np.float64)
    if not np.isfinite(w).all():
        raise ValueError("weights must be finite")
    qmax = (1 << (bits - 1)) - 1
    m = float(np.abs(w).max()) if w.size else 0.0
    scale = 1
    if m > 0.0:
        while m * (scale * 2) <= qmax:
            scale *= 2
    q = _round_half_away(w * scale)
    q = np.clip(q, -qmax, qmax)
    return q.astype(np.int64), scale


def _scale_threshold(theta: float, scale: int) -> int:
    return int(_round_half_away(np.asarray(theta * scale)))


def quantize_layer_dict(layer: dict, bits: int) -> LayerSpec:
    """Turn one float netspec layer entry into a fixed-point LayerSpec."""
    q, scale = quantize_weights(layer["weights_float"], bits)
    theta_high = _scale_threshold(float(layer["theta_high"]), scale)
    if theta_high < 1:
        raise ValueError("theta_high quantized to zero; scale too small")
    theta_low = layer.get("theta_low")
    if theta_low is not None:
        theta_low = _scale_threshold(float(theta_low), scale)
        if theta_low >= 0:
            raise ValueError("theta_low quantized to a non-negative value")
    return LayerSpec(
        n_inputs=int(layer["n_inputs"]),
        n_neurons=int(layer["n_neurons"]),
        weights=q,
        weight_scale=scale,
        theta_high=theta_high,
        theta_low=theta_low,
        decay_exp=int(layer["decay_exp"]),
    )


def quantize_netspec(data: dict, bits: int) -> NetSpec:
    """Quantize every float layer of a parsed netspec dict at one bit width."""
    if not any(l.get("weights_float") is not None for l in data.get("layers", [])):
        raise ValueError("netspec has no float weights to quantize")
    stripped = dict(data)
    stripped["layers"] = [
        {k: v for k, v in l.items() if k != "weights"} for l in data["layers"]
    ]
    return netspec_from_dict(stripped, bits=bits)


@dataclass
class SweepRow:
    bits: int
    accuracy: float  # percent
    images: int
    errors: int


def sweep(
    data: dict,
    images: np.ndarray,
    labels: Sequence[int],
    bits_list: Sequence[int],
    *,
    theta_enc: float = 0.05,
    reps: Optional[int] = None,
    limit: Optional[int] = None,
) -> list:
    """Quantize at each bit width, run full inference, report accuracy."""
    rows = []
    for bits in bits_list:
        net = quantize_netspec(data, bits)
        outcomes = network.evaluate_dataset(
            net, images, labels, theta_enc=theta_enc, reps=reps, limit=limit
        )
        if not outcomes:
            raise ValueError("no images evaluated")
        errors = sum(1 for o in outcomes if not o.correct)
        rows.append(
            SweepRow(
                bits=bits,
                accuracy=100.0 * (len(outcomes) - errors) / len(outcomes),
                images=len(outcomes),
                errors=errors,
            )
        )
    _warn_on_inverted_trend(rows)
    return rows


def _warn_on_inverted_trend(rows: Sequence[SweepRow]) -> None:
    # more weight bits should not cost accuracy; a noticeable inversion on a
    # non-toy sample usually means a broken export, so flag it (soft check)
    by_bits = {r.bits: r for r in rows}
    if 4 in by_bits and 8 in by_bits and by_bits[8].images > 200:
        if by_bits[8].accuracy < by_bits[4].accuracy - 0.5:
            warnings.warn(
                f"8-bit accuracy {by_bits[8].accuracy:.2f}% trails 4-bit "
                f"{by_bits[4].accuracy:.2f}% by more than 0.5%",
                stacklevel=2,
            )


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bits", "accuracy", "images", "errors"])
        for r in rows:
            writer.writerow([r.bits, f"{r.accuracy:.4f}", r.images, r.errors])
