"""Spike trains, differential-time word streams, and the conversions between them.

A spike train holds absolute event times (integer ticks) with signed nonzero
integer amplitudes.  On the wire the same information travels as a stream of
fixed-width sign-magnitude words, each carrying the time delta to the previous
word.  The all-ones bit pattern is reserved as a timer-overflow word: it
advances time by the maximum magnitude value and carries no spike.  Amplitudes
larger than one fold into a leading signed word followed by zero-delta words
of the same sign, which is why the sign-magnitude layout (with its +0/-0) is
used instead of two's complement.

Word layout for width ``b`` (b >= 3):

    bit b-1   : sign (0 positive, 1 negative)
    bits b-2:0: magnitude

    all ones  : overflow word, advances time by V = 2**(b-1) - 1

Data words produced by the encoder keep their magnitude in [0, V-1] for both
signs, so encode/decode is sign-symmetric and the overflow pattern can never
be emitted by accident.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

__all__ = [
    "SpikeTrain",
    "DeltaWord",
    "DeltaStream",
    "delta_encode_signal",
    "to_delta_words",
    "from_delta_words",
    "scale_times",
    "overflow_span",
    "overflow_raw",
    "pack_word",
    "split_delta",
    "write_dts",
    "read_dts",
    "stream_to_text",
    "stream_from_text",
]

MIN_WIDTH_BITS = 3
# DTS1 packs one word per u16, so the file format caps the width there.
MAX_FILE_WIDTH_BITS = 16
DTS_MAGIC = b"DTS1"


def _check_width(width_bits: int) -> None:
    if width_bits < MIN_WIDTH_BITS:
        raise ValueError(f"stream word width must be >= {MIN_WIDTH_BITS} bits, got {width_bits}")


def overflow_span(width_bits: int) -> int:
    """Time advanced by one overflow word: V = 2**(b-1) - 1."""
    _check_width(width_bits)
    return (1 << (width_bits - 1)) - 1


def overflow_raw(width_bits: int) -> int:
    """The reserved all-ones overflow pattern for width b."""
    _check_width(width_bits)
    return (1 << width_bits) - 1


def pack_word(sign: int, magnitude: int, width_bits: int) -> int:
    """Pack a data word. The negative word with maximal magnitude is reserved."""
    _check_width(width_bits)
    v = overflow_span(width_bits)
    if magnitude < 0 or magnitude > v:
        raise ValueError(f"magnitude {magnitude} out of range [0, {v}] for width {width_bits}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if sign < 0 and magnitude == v:
        raise ValueError("negative word with maximal magnitude is the reserved overflow pattern")
    return ((sign < 0) << (width_bits - 1)) | magnitude


def _word_sign(raw: int, width_bits: int) -> int:
    return -1 if raw >> (width_bits - 1) else 1


def _word_magnitude(raw: int, width_bits: int) -> int:
    return raw & ((1 << (width_bits - 1)) - 1)


@dataclass(frozen=True)
class DeltaWord:
    """One b-bit word of a differential-time stream."""

    raw: int
    width_bits: int

    def __post_init__(self) -> None:
        _check_width(self.width_bits)
        if not 0 <= self.raw < (1 << self.width_bits):
            raise ValueError(f"raw word {self.raw} does not fit in {self.width_bits} bits")

    @classmethod
    def data(cls, sign: int, magnitude: int, width_bits: int) -> "DeltaWord":
        return cls(pack_word(sign, magnitude, width_bits), width_bits)

    @classmethod
    def overflow(cls, width_bits: int) -> "DeltaWord":
        return cls(overflow_raw(width_bits), width_bits)

    @property
    def is_overflow(self) -> bool:
        return self.raw == overflow_raw(self.width_bits)

    @property
    def sign(self) -> int:
        if self.is_overflow:
            raise ValueError("overflow word carries no sign")
        return _word_sign(self.raw, self.width_bits)

    @property
    def magnitude(self) -> int:
        if self.is_overflow:
            raise ValueError("overflow word carries no magnitude")
        return _word_magnitude(self.raw, self.width_bits)

    def __str__(self) -> str:
        if self.is_overflow:
            return "OV"
        return f"{'+' if self.sign > 0 else '-'}{self.magnitude}"


@dataclass(frozen=True)
class SpikeTrain:
    """Absolute-time spike sequence: ordered (time, amplitude) with amplitude != 0.

    Times are non-decreasing; several events may share a time (the codec folds
    and merges them by sign).
    """

    events: tuple = ()

    def __post_init__(self) -> None:
        prev = 0
        norm = []
        for ev in self.events:
            t, a = ev
            t = int(t)
            a = int(a)
            if t < 0:
                raise ValueError(f"spike time {t} is negative")
            if t < prev:
                raise ValueError(f"spike times not sorted at t={t}")
            if a == 0:
                raise ValueError("spike amplitude must be nonzero")
            norm.append((t, a))
            prev = t
        object.__setattr__(self, "events", tuple(norm))

    @classmethod
    def from_events(cls, events: Iterable) -> "SpikeTrain":
        return cls(tuple(events))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator:
        return iter(self.events)

    def times(self) -> list:
        return [t for t, _ in self.events]

    def amplitudes(self) -> list:
        return [a for _, a in self.events]

    def merged(self) -> "SpikeTrain":
        """Canonical form: adjacent same-time, same-sign events folded together."""
        out: list = []
        for t, a in self.events:
            if out and out[-1][0] == t and (out[-1][1] > 0) == (a > 0):
                out[-1] = (t, out[-1][1] + a)
            else:
                out.append((t, a))
        return SpikeTrain(tuple(out))


@dataclass
class DeltaStream:
    """Sequence of b-bit words. ``words`` holds raw bit patterns."""

    width_bits: int
    words: list = field(default_factory=list)

    def __post_init__(self) -> None:
        _check_width(self.width_bits)
        words = self.words
        if not (isinstance(words, list) and all(type(w) is int for w in words)):
            self.words = words = [int(w) for w in words]
        if words and (min(words) < 0 or max(words) >= (1 << self.width_bits)):
            raise ValueError(f"raw word out of range for {self.width_bits} bits")

    def __len__(self) -> int:
        return len(self.words)

    def __iter__(self) -> Iterator[DeltaWord]:
        b = self.width_bits
        return (DeltaWord(w, b) for w in self.words)

    def word(self, index: int) -> DeltaWord:
        return DeltaWord(self.words[index], self.width_bits)

    @property
    def span(self) -> int:
        """Total time advanced by the stream, trailing overflow words included."""
        b = self.width_bits
        ov = overflow_raw(b)
        v = overflow_span(b)
        total = 0
        for w in self.words:
            total += v if w == ov else _word_magnitude(w, b)
        return total

    def overflow_count(self) -> int:
        ov = overflow_raw(self.width_bits)
        return sum(1 for w in self.words if w == ov)


def _stream_trusted(width_bits: int, words: list) -> "DeltaStream":
    """Internal constructor for word lists a builder already guarantees valid."""
    s = object.__new__(DeltaStream)
    s.width_bits = width_bits
    s.words = words
    return s


def split_delta(delta: int, sign: int, count: int, width_bits: int) -> list:
    """Raw words for one event: overflow words, the signed data word, then
    ``count - 1`` zero-delta words of the same sign (amplitude folding)."""
    if delta < 0:
        raise ValueError("negative time delta")
    if count < 1:
        raise ValueError("event amplitude count must be >= 1")
    v = overflow_span(width_bits)
    ov = overflow_raw(width_bits)
    n_over, rest = divmod(delta, v)
    words = [ov] * n_over
    words.append(pack_word(sign, rest, width_bits))
    if count > 1:
        words.extend([pack_word(sign, 0, width_bits)] * (count - 1))
    return words


def to_delta_words(train: SpikeTrain, width_bits: int) -> DeltaStream:
    """Encode a spike train into differential-time words.

    The first event's delta is measured from time 0.  Large deltas split into
    floor(delta / V) overflow words plus a data word with the remainder, so the
    overflow count is minimal.
    """
    _check_width(width_bits)
    words: list = []
    prev = 0
    for t, a in train.events:
        sign = 1 if a > 0 else -1
        words.extend(split_delta(t - prev, sign, abs(a), width_bits))
        prev = t
    return DeltaStream(width_bits, words)


def from_delta_words(stream: DeltaStream) -> SpikeTrain:
    """Decode a word stream back to absolute time.

    Consecutive same-sign zero-delta words merge into the previous event as
    extra amplitude; overflow words advance time and emit nothing.  Any word
    sequence decodes, including non-canonical ones.
    """
    b = stream.width_bits
    ov = overflow_raw(b)
    v = overflow_span(b)
    t = 0
    events: list = []
    prev_data = False
    prev_sign = 0
    for raw in stream.words:
        if raw == ov:
            t += v
            prev_data = False
            continue
        sign = _word_sign(raw, b)
        mag = _word_magnitude(raw, b)
        t += mag
        if mag == 0 and prev_data and sign == prev_sign and events:
            pt, pa = events[-1]
            events[-1] = (pt, pa + sign)
        else:
            events.append((t, sign))
        prev_data = True
        prev_sign = sign
    return SpikeTrain(tuple(events))


def scale_times(train: SpikeTrain, factor: int) -> SpikeTrain:
    """Multiply every event time by a positive integer factor."""
    factor = int(factor)
    if factor < 1:
        raise ValueError("time scale factor must be a positive integer")
    return SpikeTrain(tuple((t * factor, a) for t, a in train.events))


# Residual-to-threshold comparisons run on floats; a relative guard absorbs
# representation noise (0.3/0.05 lands a hair under 6.0 in binary).
_ENC_EPS = 1e-9


def delta_encode_signal(samples: Sequence[float], theta_enc: float) -> SpikeTrain:
    """Level-crossing delta modulation of a sampled signal.

    Accumulates sample-to-sample change into a residual; whenever the residual
    reaches a multiple of the threshold, emits an event at that sample index
    whose amplitude is the (signed, truncated) multiple, and carries the
    remainder forward.  The first sample has no predecessor and never fires.
    """
    if len(samples) == 0:
        raise ValueError("empty signal")
    if not (theta_enc > 0):
        raise ValueError("invalid threshold")
    residual = 0.0
    events: list = []
    prev = float(samples[0])
    for p in range(1, len(samples)):
        cur = float(samples[p])
        residual += cur - prev
        prev = cur
        ratio = residual / theta_enc
        q = math.trunc(ratio + math.copysign(_ENC_EPS, ratio))
        if q != 0:
            events.append((p, q))
            residual -= q * theta_enc
    return SpikeTrain(tuple(events))


# ---------------------------------------------------------------------------
# stream file format ("DTS1") and the text debug format
# ---------------------------------------------------------------------------


def write_dts(streams: Sequence[DeltaStream], path) -> None:
    """Binary stream file: magic ``DTS1``, u8 width, u32 channel count, then
    per channel a u32 word count followed by words packed one per u16 (LE)."""
    if not streams:
        raise ValueError("no streams to write")
    b = streams[0].width_bits
    if b > MAX_FILE_WIDTH_BITS:
        raise ValueError(f"DTS1 packs words into u16; width {b} > {MAX_FILE_WIDTH_BITS}")
    for s in streams:
        if s.width_bits != b:
            raise ValueError("all streams in one file must share width_bits")
    with open(path, "wb") as fh:
        fh.write(DTS_MAGIC)
        fh.write(struct.pack("<BI", b, len(streams)))
        for s in streams:
            fh.write(struct.pack("<I", len(s.words)))
            fh.write(struct.pack(f"<{len(s.words)}H", *s.words))


def read_dts(path) -> list:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DTS_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {DTS_MAGIC!r}")
        b, nchan = struct.unpack("<BI", fh.read(5))
        streams = []
        for _ in range(nchan):
            (count,) = struct.unpack("<I", fh.read(4))
            payload = fh.read(2 * count)
            if len(payload) != 2 * count:
                raise ValueError("truncated DTS1 file")
            streams.append(DeltaStream(b, list(struct.unpack(f"<{count}H", payload))))
        return streams


def stream_to_text(stream: DeltaStream) -> str:
    """One channel as space-separated tokens, e.g. ``+3 +0 OV -2``."""
    return " ".join(str(w) for w in stream)


def stream_from_text(text: str, width_bits: int) -> DeltaStream:
    words = []
    for tok in text.split():
        if tok == "OV":
            words.append(overflow_raw(width_bits))
        elif tok[0] in "+-":
            words.append(pack_word(1 if tok[0] == "+" else -1, int(tok[1:]), width_bits))
        else:
            raise ValueError(f"bad stream token {tok!r}")
    return DeltaStream(width_bits, words)
