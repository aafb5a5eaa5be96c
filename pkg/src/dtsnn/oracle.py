"""Dense time-stepped reference simulator and the equivalence fuzzer.

This is the ground truth the event-driven engine is checked against: it walks
every tick of a dense grid, decays every neuron every tick with a plain floor
division, and re-implements the threshold/reset rule from its definition.  It
deliberately shares no simulation code with the layer engine; only the stream
codec is reused to get the inputs onto the grid.  Because floor-shift decay
composes across ticks, the two simulators must agree exactly, spike for
spike, with zero tolerance.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .netspec import LayerSpec, NetSpec
from .network import run_network
from .spike_codec import DeltaStream, SpikeTrain, from_delta_words, to_delta_words

__all__ = [
    "DenseInput",
    "densify",
    "dense_simulate",
    "check_equivalence",
    "EquivalenceReport",
    "random_net",
    "random_input_trains",
    "fuzz_equivalence",
]


@dataclass
class DenseInput:
    horizon: int
    grid: list  # grid[input][tick] -> signed amplitude, 0 = silent


def densify(inputs: Sequence[DeltaStream]) -> DenseInput:
    """Decode streams onto a dense (input, tick) grid.

    The horizon covers the full stream span, so trailing overflow words extend
    the grid with silent ticks.
    """
    spans = [s.span for s in inputs]
    horizon = (max(spans) + 1) if inputs and any(len(s) for s in inputs) else 0
    grid = [[0] * horizon for _ in inputs]
    for p, stream in enumerate(inputs):
        for t, a in from_delta_words(stream):
            grid[p][t] += a
    return DenseInput(horizon=horizon, grid=grid)


def _dense_layers(net: NetSpec, dense: DenseInput) -> list:
    """Per-layer spike trains from the naive per-tick simulation."""
    if len(dense.grid) != net.n_inputs:
        raise ValueError("dense grid does not match the network input count")
    horizon = dense.horizon
    layer_events: list = [[[] for _ in range(l.n_neurons)] for l in net.layers]
    weights = [[list(map(int, row)) for row in l.weights] for l in net.layers]
    potentials = [[0] * l.n_neurons for l in net.layers]
    divisors = [2 ** l.decay_exp for l in net.layers]
    for t in range(horizon):
        column = [row[t] for row in dense.grid]
        for li, layer in enumerate(net.layers):
            th = layer.theta_high
            tl = layer.theta_low
            div = divisors[li]
            pots = potentials[li]
            fired_column = [0] * layer.n_neurons
            active = [p for p, a in enumerate(column) if a != 0]
            for j in range(layer.n_neurons):
                p = pots[j] // div
                if active:
                    wrow = weights[li][j]
                    for k in active:
                        p += wrow[k] * column[k]
                fired = 0
                while p >= th:
                    p -= th
                    fired += 1
                if tl is not None:
                    while p <= tl:
                        p -= tl
                        fired -= 1
                pots[j] = p
                if fired:
                    fired_column[j] = fired
                    layer_events[li][j].append((t, fired))
            column = fired_column
    return [
        [SpikeTrain(tuple(evs)) for evs in per_layer] for per_layer in layer_events
    ]


def dense_simulate(net: NetSpec, dense: DenseInput) -> list:
    """Spike train of every output neuron under per-tick simulation."""
    return _dense_layers(net, dense)[-1]


@dataclass
class EquivalenceReport:
    equivalent: bool
    first_divergence: Optional[tuple] = None  # (layer, neuron, time)
    detail: str = ""


def check_equivalence(net: NetSpec, inputs: Sequence[DeltaStream], *, engine: str = "fast") -> EquivalenceReport:
    """Run both simulators and compare decoded trains layer by layer."""
    result = run_network(net, inputs, engine=engine, collect_layer_outputs=True)
    dense_trains = _dense_layers(net, densify(inputs))
    for li, (streams, trains) in enumerate(zip(result.layer_outputs, dense_trains)):
        for j, (stream, train) in enumerate(zip(streams, trains)):
            got = from_delta_words(stream).merged().events
            want = train.events
            if got != want:
                t = _first_difference_time(got, want)
                return EquivalenceReport(
                    equivalent=False,
                    first_divergence=(li, j, t),
                    detail=(
                        f"layer {li} neuron {j} diverges at t={t}: "
                        f"event-driven {got} vs dense {want}"
                    ),
                )
    return EquivalenceReport(equivalent=True, detail="equivalent")


def _first_difference_time(got: tuple, want: tuple) -> int:
    for a, b in zip(got, want):
        if a != b:
            return min(a[0], b[0])
    longer = got if len(got) > len(want) else want
    return longer[len(min(got, want, key=len))][0]


# ---------------------------------------------------------------------------
# randomized equivalence fuzzing
# ---------------------------------------------------------------------------


def random_net(
    rng: random.Random,
    *,
    max_inputs: int = 20,
    max_neurons: int = 10,
    n_layers: int = 2,
    width_choices: Sequence[int] = (4, 8),
) -> NetSpec:
    dims = [rng.randint(3, max_inputs)]
    for _ in range(n_layers):
        dims.append(rng.randint(2, max_neurons))
    decay_exp = rng.choice([1, 2, 3])
    layers = []
    for n_in, n_out in zip(dims, dims[1:]):
        theta_high = rng.randint(1, 64)
        theta_low = -rng.randint(1, 64) if rng.random() < 0.5 else None
        weights = [[rng.randint(-127, 127) for _ in range(n_in)] for _ in range(n_out)]
        layers.append(
            LayerSpec(
                n_inputs=n_in,
                n_neurons=n_out,
                weights=np.asarray(weights, dtype=np.int64),
                weight_scale=1,
                theta_high=theta_high,
                theta_low=theta_low,
                decay_exp=decay_exp,
            )
        )
    return NetSpec(layers=layers, width_bits=rng.choice(list(width_choices)))


def random_input_trains(
    rng: random.Random,
    n_inputs: int,
    *,
    max_spikes: int = 200,
    max_delta: int = 12,
    max_amp: int = 3,
) -> list:
    """Sparse random spike trains; same-time events and folded amplitudes
    appear on purpose."""
    total = rng.randint(0, max_spikes)
    per_input: list = [[] for _ in range(n_inputs)]
    budget = total
    while budget > 0:
        p = rng.randrange(n_inputs)
        t = per_input[p][-1][0] if per_input[p] else 0
        if rng.random() < 0.2 and per_input[p]:
            pass  # same-time event
        else:
            t += rng.randint(0, max_delta)
        a = rng.choice([a for a in range(-max_amp, max_amp + 1) if a != 0])
        per_input[p].append((t, a))
        budget -= abs(a)
    return [SpikeTrain(tuple(evs)) for evs in per_input]


def fuzz_equivalence(
    seed: int,
    trials: int,
    *,
    max_inputs: int = 20,
    max_neurons: int = 10,
    max_spikes: int = 200,
    engine: str = "fast",
) -> list:
    """Run ``trials`` random nets against the dense oracle; returns the list
    of (trial, report) failures (empty means everything matched)."""
    rng = random.Random(seed)
    failures = []
    for trial in range(trials):
        net = random_net(rng, max_inputs=max_inputs, max_neurons=max_neurons)
        trains = random_input_trains(rng, net.n_inputs, max_spikes=max_spikes)
        inputs = [to_delta_words(t, net.width_bits) for t in trains]
        report = check_equivalence(net, inputs, engine=engine)
        if not report.equivalent:
            failures.append((trial, report))
    return failures
