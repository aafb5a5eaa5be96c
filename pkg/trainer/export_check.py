#!/usr/bin/env python3
"""Validate an exported float netspec before handing it to the simulator:
layer dimension chain, power-of-two decay, finite weights.  Prints the weight
range as a quantization preview."""

from __future__ import annotations

import json
import math
import sys

import numpy as np


def check_netspec(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    layers = data.get("layers")
    if not layers:
        raise ValueError("no layers in netspec")
    prev_out = None
    max_abs = 0.0
    for i, layer in enumerate(layers):
        n_in, n_out = int(layer["n_inputs"]), int(layer["n_neurons"])
        if prev_out is not None and n_in != prev_out:
            raise ValueError(f"layer {i}: {prev_out} outputs feed {n_in} inputs")
        prev_out = n_out
        decay_exp = layer.get("decay_exp")
        if not isinstance(decay_exp, int) or decay_exp < 1:
            raise ValueError(f"layer {i}: decay_exp must be an integer >= 1 (beta = 2**-i)")
        w = layer.get("weights_float", layer.get("weights"))
        if w is None:
            raise ValueError(f"layer {i}: no weights")
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (n_out, n_in):
            raise ValueError(f"layer {i}: weight shape {w.shape} != ({n_out}, {n_in})")
        if not np.isfinite(w).all():
            raise ValueError(f"layer {i}: non-finite weight")
        th = float(layer["theta_high"])
        if not (th > 0 and math.isfinite(th)):
            raise ValueError(f"layer {i}: theta_high must be positive and finite")
        max_abs = max(max_abs, float(np.abs(w).max()))
    dims = [layers[0]["n_inputs"]] + [l["n_neurons"] for l in layers]
    return f"ok, {'-'.join(map(str, dims))}, max|w|={max_abs:.4f}"


def main(argv=None) -> int:
    ap_args = sys.argv[1:] if argv is None else argv
    if len(ap_args) != 1:
        print("usage: export_check.py netspec.json", file=sys.stderr)
        return 2
    try:
        print(check_netspec(ap_args[0]))
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
