"""Network description and its JSON file format.

A netspec file is a JSON object::

    {"width_bits": 8, "repetitions": 28,
     "layers": [{"n_inputs": 784, "n_neurons": 1000, "decay_exp": 1,
                 "theta_high": 64, "theta_low": null, "weight_scale": 64,
                 "weights": [[...], ...]}, ...]}

Integer ``weights`` plus ``weight_scale`` describe a runnable fixed-point
network.  A trainer may instead (or additionally) store ``weights_float``
with float thresholds; such layers are quantized on load when a bit width is
given.  Unknown top-level keys (e.g. trainer metadata) are preserved on a
best-effort basis and otherwise ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

__all__ = ["LayerSpec", "NetSpec", "load_netspec", "save_netspec", "netspec_from_dict"]


@dataclass
class LayerSpec:
    n_inputs: int
    n_neurons: int
    weights: np.ndarray  # int64, shape (n_neurons, n_inputs)
    weight_scale: int
    theta_high: int
    theta_low: Optional[int]
    decay_exp: int

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.int64)
        if self.weights.shape != (self.n_neurons, self.n_inputs):
            raise ValueError(
                f"weight matrix shape {self.weights.shape} does not match "
                f"({self.n_neurons}, {self.n_inputs})"
            )
        if self.weight_scale < 1:
            raise ValueError("weight_scale must be a positive integer")
        if self.theta_high <= 0:
            raise ValueError("theta_high must be positive")
        if self.theta_low is not None and self.theta_low >= 0:
            raise ValueError("theta_low must be negative when present")
        if self.decay_exp < 1:
            raise ValueError("decay_exp must be >= 1")


@dataclass
class NetSpec:
    layers: List[LayerSpec]
    width_bits: int = 8
    repetitions: int = 28

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("network needs at least one layer")
        if self.width_bits < 3:
            raise ValueError("width_bits must be >= 3")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        for prev, cur in zip(self.layers, self.layers[1:]):
            if prev.n_neurons != cur.n_inputs:
                raise ValueError(
                    f"layer dimension mismatch: {prev.n_neurons} outputs feed "
                    f"{cur.n_inputs} inputs"
                )

    @property
    def n_inputs(self) -> int:
        return self.layers[0].n_inputs

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].n_neurons


def _layer_to_dict(layer: LayerSpec) -> dict:
    return {
        "n_inputs": layer.n_inputs,
        "n_neurons": layer.n_neurons,
        "decay_exp": layer.decay_exp,
        "theta_high": layer.theta_high,
        "theta_low": layer.theta_low,
        "weight_scale": layer.weight_scale,
        "weights": layer.weights.tolist(),
    }


def netspec_to_dict(net: NetSpec) -> dict:
    return {
        "width_bits": net.width_bits,
        "repetitions": net.repetitions,
        "layers": [_layer_to_dict(l) for l in net.layers],
    }


def netspec_from_dict(data: dict, bits: Optional[int] = None) -> NetSpec:
    """Build a runnable NetSpec from a parsed netspec JSON object.

    Layers holding only float weights need ``bits`` to quantize on load.
    """
    layers = []
    for i, ld in enumerate(data.get("layers", [])):
        if ld.get("weights") is not None:
            layers.append(
                LayerSpec(
                    n_inputs=int(ld["n_inputs"]),
                    n_neurons=int(ld["n_neurons"]),
                    weights=np.asarray(ld["weights"], dtype=np.int64),
                    weight_scale=int(ld["weight_scale"]),
                    theta_high=int(ld["theta_high"]),
                    theta_low=None if ld.get("theta_low") is None else int(ld["theta_low"]),
                    decay_exp=int(ld["decay_exp"]),
                )
            )
        elif ld.get("weights_float") is not None:
            if bits is None:
                raise ValueError(
                    f"layer {i} has only float weights; a quantization bit width is required"
                )
            from .quantization import quantize_layer_dict

            layers.append(quantize_layer_dict(ld, bits))
        else:
            raise ValueError(f"layer {i} has neither 'weights' nor 'weights_float'")
    return NetSpec(
        layers=layers,
        width_bits=int(data.get("width_bits", 8)),
        repetitions=int(data.get("repetitions", 28)),
    )


def load_netspec(path, bits: Optional[int] = None) -> NetSpec:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return netspec_from_dict(data, bits=bits)


def save_netspec(net: NetSpec, path, extra: Optional[dict] = None) -> None:
    data = netspec_to_dict(net)
    if extra:
        for k, v in extra.items():
            data.setdefault(k, v)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh)
        fh.write("\n")
