"""Event-driven processing of one fully connected layer.

Two interchangeable drivers produce bit-identical output streams:

``LayerState`` is the word-at-a-time state machine mirroring the hardware:
per-input FIFOs feed time integrators that turn deltas back into absolute
times, a min scan picks the next event, the event is broadcast to every
neuron core, and fired neurons re-encode their output differentially against
a last-spike-time register.  An optional bounded-width mode emits output
overflow words proactively and rebases all time registers after each event so
no register ever needs to grow with the run length.

``run_layer_fast`` decodes whole input streams up front and performs the same
event loop vectorized across neurons (numpy int64 with a conservative
overflow guard; arbitrary-precision object arithmetic when the guard says
int64 could clip).  It exists because per-word simulation of a 784x1000 layer
is too slow for dataset-scale runs; equality with the state machine is pinned
by tests.

Processing cost (the cycle counter) is deliberately decoupled from the time
values inside the streams: the counter models one rotation of the integrator
registers per input per event plus one cycle per emitted word, nothing else.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import neuron_core
from .neuron_core import NeuronParams, NeuronState, accumulate, neuron_event
from .spike_codec import (
    DeltaStream,
    DeltaWord,
    _stream_trusted,
    overflow_raw,
    overflow_span,
    pack_word,
    split_delta,
)

__all__ = ["EventBatch", "LayerState", "run_layer", "run_layer_fast"]

# int64 is safe while every intermediate stays below this; otherwise the fast
# path switches to Python-integer (object dtype) arithmetic.
_INT64_SAFE = 1 << 62
# below this bound float64 holds every product and partial sum exactly, so the
# accumulator matmul can run on BLAS and still be integer-exact
_FLOAT64_EXACT = 1 << 53
# cap on the dense (events x inputs) accumulation matrix
_DENSE_CELLS = 1 << 23


@dataclass
class EventBatch:
    """One layer event: the minimum pending input time and every contribution
    arriving at exactly that time, one entry per word (so folded amplitudes
    appear once per unit)."""

    time: int
    contributions: list


class LayerState:
    """State machine for one layer; single-threaded, exclusively owned."""

    def __init__(
        self,
        weights: Sequence[Sequence[int]],
        params: NeuronParams,
        width_bits: int,
        *,
        auto_rebase: bool = False,
        validate: bool = False,
    ) -> None:
        rows = [list(map(int, row)) for row in weights]
        if not rows:
            raise ValueError("layer needs at least one neuron")
        n_inputs = len(rows[0])
        if any(len(r) != n_inputs for r in rows):
            raise ValueError("ragged weight matrix")
        if n_inputs == 0:
            raise ValueError("layer needs at least one input")
        self.params = params
        self.width_bits = width_bits
        self._v = overflow_span(width_bits)
        self._ov = overflow_raw(width_bits)
        self.n_inputs = n_inputs
        self.n_neurons = len(rows)
        self.neurons = [NeuronState(weights=row) for row in rows]
        self.t_curr = 0
        self.cycle_counter = 0
        self.event_count = 0
        self.auto_rebase = auto_rebase
        self.validate = validate
        self._queues = [deque() for _ in range(n_inputs)]
        self._base = [0] * n_inputs          # absolute time origin per input
        self._pending = [None] * n_inputs    # (absolute time, sign) of head spike
        self._in_span = [0] * n_inputs       # total ingested coverage, rebase-free
        self._out = [[] for _ in range(self.n_neurons)]
        self._emitted = [0] * self.n_neurons  # output coverage, rebase-free

    # -- input side ---------------------------------------------------------

    def ingest(self, input_index: int, word) -> "LayerState":
        """Append one word to an input FIFO and integrate it if it is at the
        head: overflow words advance the integrator silently, a data word
        parks an absolute-time pending spike."""
        if not 0 <= input_index < self.n_inputs:
            raise IndexError(f"input index {input_index} out of range")
        if isinstance(word, DeltaWord):
            if word.width_bits != self.width_bits:
                raise ValueError("word width does not match layer width")
            raw = word.raw
        else:
            raw = int(word)
            if not 0 <= raw < (1 << self.width_bits):
                raise ValueError(f"raw word {raw} does not fit in {self.width_bits} bits")
        self._queues[input_index].append(raw)
        if raw == self._ov:
            self._in_span[input_index] += self._v
        else:
            self._in_span[input_index] += raw & self._v
        self._integrate_head(input_index)
        return self

    def _integrate_head(self, i: int) -> None:
        q = self._queues[i]
        while self._pending[i] is None and q:
            raw = q.popleft()
            if raw == self._ov:
                self._base[i] += self._v
            else:
                sign = -1 if raw >> (self.width_bits - 1) else 1
                self._pending[i] = (self._base[i] + (raw & self._v), sign)

    # -- event loop ---------------------------------------------------------

    def next_event(self) -> Optional[EventBatch]:
        """Min-scan over the pending integrated times.  Collects every input
        whose head spike sits at the minimum, plus the zero-delta words queued
        right behind those heads (same instant, folded amplitude).  Costs one
        rotation per input on the cycle counter."""
        t_min = None
        for p in self._pending:
            if p is not None and (t_min is None or p[0] < t_min):
                t_min = p[0]
        if t_min is None:
            return None
        contributions = []
        for i, p in enumerate(self._pending):
            if p is None or p[0] != t_min:
                continue
            contributions.append((i, p[1]))
            for raw in self._queues[i]:
                if raw != self._ov and (raw & self._v) == 0:
                    contributions.append((i, -1 if raw >> (self.width_bits - 1) else 1))
                else:
                    break
        self.cycle_counter += self.n_inputs
        return EventBatch(time=t_min, contributions=contributions)

    def process_event(self, batch: EventBatch) -> list:
        """Broadcast one event batch to all neuron cores.

        Accumulates every contribution with each neuron's own weight row,
        runs the decay/add/reset step with dt measured from the layer time
        register, emits differentially encoded output words for fired
        neurons, then dequeues the consumed input spikes.  Returns
        [(neuron_index, [DeltaWord, ...]), ...] for the neurons that fired.
        """
        if batch.time < self.t_curr:
            raise ValueError("event batch lies in the layer's past")
        dt = batch.time - self.t_curr
        for state in self.neurons:
            for i, sign in batch.contributions:
                accumulate(state, i, sign)
        self.t_curr = batch.time
        fired_words = []
        for j, state in enumerate(self.neurons):
            _, fired = neuron_event(state, self.params, dt)
            if fired == 0:
                continue
            delta = self.t_curr - state.last_out_time
            words = split_delta(delta, 1 if fired > 0 else -1, abs(fired), self.width_bits)
            self._out[j].extend(words)
            self._emitted[j] += delta
            self.cycle_counter += len(words)
            state.last_out_time = self.t_curr
            fired_words.append((j, [DeltaWord(w, self.width_bits) for w in words]))
        for i in {i for i, _ in batch.contributions}:
            self._consume_input(i, batch.time)
        self.event_count += 1
        if self.auto_rebase:
            self._emit_pending_overflows()
            floor = self._register_floor()
            if floor > 0:
                self.rebase(floor)
        if self.validate:
            self._check_band()
        return fired_words

    def _consume_input(self, i: int, time: int) -> None:
        # Consume the head spike and the zero-delta chain at the same instant.
        while self._pending[i] is not None and self._pending[i][0] == time:
            self._base[i] = time
            self._pending[i] = None
            self._integrate_head(i)

    def _emit_pending_overflows(self) -> None:
        # Bounded-width mode: saturating output delta counters emit overflow
        # words as soon as they fill, instead of waiting for the next fire.
        for j, state in enumerate(self.neurons):
            while self.t_curr - state.last_out_time >= self._v:
                self._out[j].append(self._ov)
                self._emitted[j] += self._v
                self.cycle_counter += 1
                state.last_out_time += self._v

    def _register_floor(self) -> int:
        regs = [self.t_curr]
        regs.extend(s.last_out_time for s in self.neurons)
        regs.extend(self._base)
        regs.extend(p[0] for p in self._pending if p is not None)
        return min(regs)

    def _check_band(self) -> None:
        hi = self.params.theta_high
        lo = self.params.theta_low
        for j, s in enumerate(self.neurons):
            if s.potential >= hi or (lo is not None and s.potential <= lo):
                raise AssertionError(
                    f"neuron {j} potential {s.potential} escaped ({lo}, {hi}) after event"
                )

    # -- bookkeeping --------------------------------------------------------

    def rebase(self, span: int) -> "LayerState":
        """Uniformly shift every time register down by ``span``.  Emitted and
        consumed words encode differences only, so they are unaffected."""
        if span < 0:
            raise ValueError("rebase span must be non-negative")
        if span == 0:
            return self
        if span > self._register_floor():
            raise ValueError("rebase span exceeds a time register")
        self.t_curr -= span
        for s in self.neurons:
            s.last_out_time -= span
        self._base = [b - span for b in self._base]
        self._pending = [None if p is None else (p[0] - span, p[1]) for p in self._pending]
        return self

    def exhausted(self) -> bool:
        return all(p is None for p in self._pending) and all(not q for q in self._queues)

    def flush_trailing(self) -> None:
        """Cover the remainder of the input time span with overflow words so
        downstream layer clocks stay aligned; emits no spikes."""
        span = max(self._in_span) if self._in_span else 0
        v = self._v
        for j in range(self.n_neurons):
            remaining = span - self._emitted[j]
            if remaining > 0:
                k = -(-remaining // v)
                self._out[j].extend([self._ov] * k)
                self._emitted[j] += k * v
                self.cycle_counter += k

    def output_streams(self) -> list:
        return [DeltaStream(self.width_bits, list(w)) for w in self._out]

    def cycle_estimate(self) -> int:
        """Host cycles modeled for the run so far: n_inputs rotations per
        event plus one cycle per emitted output word."""
        return self.cycle_counter


def run_layer(layer: LayerState, inputs: Sequence[DeltaStream]) -> list:
    """Drive a layer state machine to exhaustion over full input streams."""
    if len(inputs) != layer.n_inputs:
        raise ValueError(f"expected {layer.n_inputs} input streams, got {len(inputs)}")
    for s in inputs:
        if s.width_bits != layer.width_bits:
            raise ValueError("input stream width does not match layer width")
    for i, stream in enumerate(inputs):
        for raw in stream.words:
            layer.ingest(i, raw)
    while True:
        batch = layer.next_event()
        if batch is None:
            break
        layer.process_event(batch)
    layer.flush_trailing()
    return layer.output_streams()


# ---------------------------------------------------------------------------
# vectorized driver
# ---------------------------------------------------------------------------


def _decode_inputs(inputs: Sequence[DeltaStream], width_bits: int):
    """Vectorized decode of all input streams into flat batch arrays.

    Same-time words of one input merge into a net amplitude (the accumulator
    is linear, so this is exact); a time whose contributions all cancel still
    marks an event for the cycle model, hence the separate unique-time count.
    Returns (times, input_indices, net_amplitudes) sorted by time with zero
    nets dropped, the number of distinct event times, the overall span, and
    the data word count (for the precision guard).
    """
    v = overflow_span(width_bits)
    ov = overflow_raw(width_bits)
    sign_bit = 1 << (width_bits - 1)
    ts, ps, amps = [], [], []
    span = 0
    total_words = 0
    for p, stream in enumerate(inputs):
        if not stream.words:
            continue
        raw = np.asarray(stream.words, dtype=np.int64)
        is_ov = raw == ov
        advances = np.where(is_ov, v, raw & v)
        times = np.cumsum(advances)
        span = max(span, int(times[-1]))
        data = ~is_ov
        n_data = int(data.sum())
        if n_data == 0:
            continue
        total_words += n_data
        ts.append(times[data])
        ps.append(np.full(n_data, p, dtype=np.int64))
        amps.append(np.where(raw[data] & sign_bit, -1, 1).astype(np.int64))
    if not ts:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty, 0, span, 0
    times = np.concatenate(ts)
    cols = np.concatenate(ps)
    signs = np.concatenate(amps)
    order = np.lexsort((cols, times))
    times, cols, signs = times[order], cols[order], signs[order]
    n_times = int((np.diff(times) != 0).sum()) + 1
    group = np.flatnonzero((np.diff(times) != 0) | (np.diff(cols) != 0))
    starts = np.concatenate(([0], group + 1))
    nets = np.add.reduceat(signs, starts)
    keep = nets != 0
    return times[starts][keep], cols[starts][keep], nets[keep], n_times, span, total_words


def run_layer_fast(
    weights: Sequence[Sequence[int]],
    params: NeuronParams,
    width_bits: int,
    inputs: Sequence[DeltaStream],
    *,
    validate: bool = False,
) -> Tuple[list, int, int]:
    """Whole-stream layer run, vectorized across neurons.

    Returns (output streams, event count, cycle estimate), all bit-identical
    to ``run_layer`` on a fresh ``LayerState``.
    """
    w = np.asarray(weights, dtype=np.int64)
    if w.ndim != 2:
        raise ValueError("weights must be a matrix")
    n_neurons, n_inputs = w.shape
    if n_neurons == 0 or n_inputs == 0:
        raise ValueError("layer needs at least one neuron and one input")
    if len(inputs) != n_inputs:
        raise ValueError(f"expected {n_inputs} input streams, got {len(inputs)}")
    for s in inputs:
        if s.width_bits != width_bits:
            raise ValueError("input stream width does not match layer width")

    times, cols, amps, n_times, span, total_words = _decode_inputs(inputs, width_bits)
    th = params.theta_high
    tl = params.theta_low
    wmax = int(np.abs(w).max()) if w.size else 0
    # worst |potential| <= band edge + everything the run can ever accumulate
    guard = th + abs(tl or 0) + 2 * total_words * wmax + 1
    if guard < _INT64_SAFE:
        wm = w
        potentials = np.zeros(n_neurons, dtype=np.int64)
        int64_mode = True
    else:
        wm = w.astype(object)
        potentials = np.array([0] * n_neurons, dtype=object)
        int64_mode = False

    v = overflow_span(width_bits)
    ov = overflow_raw(width_bits)
    sign_bit = 1 << (width_bits - 1)
    out: list = [[] for _ in range(n_neurons)]
    last_out = np.zeros(n_neurons, dtype=np.int64)
    emitted_words = 0
    t_prev = 0
    # batch = one distinct event time; all-cancelling times were dropped from
    # the arrays (decay composes across them) but still count as events
    event_count = n_times
    if len(times):
        boundaries = np.flatnonzero(np.diff(times)) + 1
        starts = np.concatenate(([0], boundaries))
        stops = np.concatenate((boundaries, [len(times)]))
    else:
        starts = stops = np.zeros(0, dtype=np.int64)
    n_batches = len(starts)
    acc_rows = None
    if (
        int64_mode
        and guard < _FLOAT64_EXACT
        and 0 < n_batches * n_inputs <= _DENSE_CELLS
    ):
        # one BLAS matmul accumulates every batch at once; float64 is exact
        # here because guard bounds every product and partial sum below 2**53
        vmat = np.zeros((n_batches, n_inputs))
        rows = np.repeat(np.arange(n_batches), stops - starts)
        vmat[rows, cols] = amps
        acc_rows = (vmat @ wm.T.astype(np.float64)).astype(np.int64)
    for bi, (start, stop) in enumerate(zip(starts, stops)):
        t = int(times[start])
        shift = params.decay_exp * (t - t_prev)
        t_prev = t
        if int64_mode:
            potentials >>= min(shift, 63)
            if acc_rows is not None:
                potentials += acc_rows[bi]
            else:
                potentials += wm[:, cols[start:stop]] @ amps[start:stop]
        else:
            potentials = potentials >> shift
            acc = np.array([0] * n_neurons, dtype=object)
            for p, a in zip(cols[start:stop], amps[start:stop]):
                acc += wm[:, p] * int(a)
            potentials += acc
        hi_mask = potentials >= th
        fired = np.zeros(n_neurons, dtype=potentials.dtype)
        if hi_mask.any():
            f = potentials[hi_mask] // th
            potentials[hi_mask] -= f * th
            fired[hi_mask] = f
        if tl is not None:
            lo_mask = potentials <= tl
            if lo_mask.any():
                f = potentials[lo_mask] // tl
                potentials[lo_mask] -= f * tl
                fired[lo_mask] = -f
        if validate:
            if (potentials >= th).any() or (tl is not None and (potentials <= tl).any()):
                raise AssertionError("potential escaped the reset band after event")
        nz = np.flatnonzero(fired)
        if len(nz) == 0:
            continue
        if int64_mode:
            f = fired[nz].astype(np.int64)
            deltas = t - last_out[nz]
            n_over = deltas // v
            signs = np.where(f > 0, 0, sign_bit)
            data_raws = signs | (deltas - n_over * v)
            counts = np.abs(f)
            for i in range(len(nz)):
                words = out[int(nz[i])]
                k = int(n_over[i])
                if k:
                    words.extend([ov] * k)
                words.append(int(data_raws[i]))
                c = int(counts[i])
                if c > 1:
                    words.extend([int(signs[i])] * (c - 1))
            emitted_words += int(n_over.sum() + counts.sum())
        else:
            for j in nz:
                count = int(fired[j])
                delta = t - int(last_out[j])
                words = split_delta(delta, 1 if count > 0 else -1, abs(count), width_bits)
                out[int(j)].extend(words)
                emitted_words += len(words)
        last_out[nz] = t
    for j in range(n_neurons):
        remaining = span - int(last_out[j])
        if remaining > 0:
            k = -(-remaining // v)
            out[j].extend([ov] * k)
            emitted_words += k
    cycles = event_count * n_inputs + emitted_words
    return [_stream_trusted(width_bits, words) for words in out], event_count, cycles
