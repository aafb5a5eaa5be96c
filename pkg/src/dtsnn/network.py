"""Whole-network inference: present encoded inputs, run layers, classify.

A network input is the per-pixel amplitude vector produced by delta encoding
one image.  It is presented statically: each line with a nonzero amplitude
repeats its spike at unit spacing for ``repetitions`` steps, and the decoded
spike counts of the last layer pick the label.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .layer_engine import LayerState, run_layer, run_layer_fast
from .netspec import LayerSpec, NetSpec
from .neuron_core import NeuronParams
from .spike_codec import (
    DeltaStream,
    SpikeTrain,
    _stream_trusted,
    from_delta_words,
    to_delta_words,
)

__all__ = [
    "InferenceResult",
    "present_input",
    "run_network",
    "classify",
    "evaluate_dataset",
    "accuracy",
    "ImageOutcome",
]


@dataclass
class InferenceResult:
    output_counts: list
    label: int
    total_events: int
    total_cycles: int
    layer_outputs: Optional[list] = None


def present_input(amplitudes: Sequence[int], reps: int, width_bits: int) -> list:
    """Encode one amplitude vector as repeated static presentation.

    Line p carries its amplitude q_p as one spike per presentation step
    t = 0..reps-1 at unit spacing; zero lines stay empty.  Words are built
    directly (a folded event is a signed word plus |q|-1 zero-delta words;
    unit steps never need overflow words since the span per word is >= 3).
    """
    if reps < 1:
        raise ValueError("repetitions must be >= 1")
    if width_bits < 3:
        raise ValueError("width_bits must be >= 3")
    sign_bit = 1 << (width_bits - 1)
    streams = []
    for q in amplitudes:
        q = int(q)
        if q == 0:
            streams.append(_stream_trusted(width_bits, []))
            continue
        zero = sign_bit if q < 0 else 0
        count = abs(q)
        first = [zero] * count
        step = [zero | 1] + [zero] * (count - 1)
        streams.append(_stream_trusted(width_bits, first + step * (reps - 1)))
    return streams


def classify(counts: Sequence[int]) -> int:
    """Index of the maximum count; ties break to the lowest index."""
    if len(counts) == 0:
        raise ValueError("empty counts")
    best = 0
    for i, c in enumerate(counts):
        if c > counts[best]:
            best = i
    return best


def run_network(
    net: NetSpec,
    inputs: Sequence[DeltaStream],
    *,
    engine: str = "fast",
    auto_rebase: bool = False,
    validate: bool = False,
    collect_layer_outputs: bool = False,
) -> InferenceResult:
    """Run the layers sequentially and count positive output spikes.

    ``engine`` picks the vectorized driver ("fast") or the word-at-a-time
    state machine ("stepped"); both produce identical streams.  Bounded-width
    rebasing is a stepped-engine mode.
    """
    if engine not in ("fast", "stepped"):
        raise ValueError(f"unknown engine {engine!r}")
    if auto_rebase and engine != "stepped":
        raise ValueError("auto_rebase requires the stepped engine")
    if len(inputs) != net.n_inputs:
        raise ValueError(f"expected {net.n_inputs} input streams, got {len(inputs)}")
    for s in inputs:
        if s.width_bits != net.width_bits:
            raise ValueError("input stream width does not match the network width")
    streams = list(inputs)
    total_events = 0
    total_cycles = 0
    per_layer = []
    for spec in net.layers:
        params = NeuronParams(
            decay_exp=spec.decay_exp,
            theta_high=spec.theta_high,
            theta_low=spec.theta_low,
        )
        if engine == "fast":
            streams, events, cycles = run_layer_fast(
                spec.weights, params, net.width_bits, streams, validate=validate
            )
        else:
            layer = LayerState(
                spec.weights,
                params,
                net.width_bits,
                auto_rebase=auto_rebase,
                validate=validate,
            )
            streams = run_layer(layer, streams)
            events = layer.event_count
            cycles = layer.cycle_counter
        total_events += events
        total_cycles += cycles
        if collect_layer_outputs:
            per_layer.append(streams)
    counts = []
    for stream in streams:
        counts.append(sum(a for _, a in from_delta_words(stream) if a > 0))
    return InferenceResult(
        output_counts=counts,
        label=classify(counts),
        total_events=total_events,
        total_cycles=total_cycles,
        layer_outputs=per_layer if collect_layer_outputs else None,
    )


# ---------------------------------------------------------------------------
# dataset evaluation
# ---------------------------------------------------------------------------


@dataclass
class ImageOutcome:
    index: int
    label: int
    predicted: int
    events: int
    cycles: int

    @property
    def correct(self) -> bool:
        return self.label == self.predicted


def evaluate_dataset(
    net: NetSpec,
    images: np.ndarray,
    labels: Sequence[int],
    *,
    theta_enc: float = 0.05,
    reps: Optional[int] = None,
    limit: Optional[int] = None,
) -> list:
    """Classify every image and return one ImageOutcome per image."""
    from .dataset import encode_image

    reps = net.repetitions if reps is None else reps
    n = len(images) if limit is None else min(limit, len(images))
    outcomes = []
    for i in range(n):
        q = encode_image(images[i], theta_enc=theta_enc)
        streams = present_input(q, reps, net.width_bits)
        result = run_network(net, streams)
        outcomes.append(
            ImageOutcome(
                index=i,
                label=int(labels[i]),
                predicted=result.label,
                events=result.total_events,
                cycles=result.total_cycles,
            )
        )
    return outcomes


def accuracy(outcomes: Sequence[ImageOutcome]) -> float:
    if not outcomes:
        raise ValueError("no outcomes")
    return sum(1 for o in outcomes if o.correct) / len(outcomes)
