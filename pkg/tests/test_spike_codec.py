"""Codec unit tests: worked examples, exact-rational encoder oracle, stream
roundtrip properties, and the DTS1/text formats."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dtsnn.spike_codec import (
    DeltaStream,
    DeltaWord,
    SpikeTrain,
    delta_encode_signal,
    from_delta_words,
    overflow_raw,
    overflow_span,
    pack_word,
    read_dts,
    scale_times,
    stream_from_text,
    stream_to_text,
    to_delta_words,
    write_dts,
)


@st.composite
def spike_trains(draw, max_events=30, max_delta=25, max_amp=5):
    n = draw(st.integers(0, max_events))
    t = 0
    events = []
    for _ in range(n):
        t += draw(st.integers(0, max_delta))
        a = draw(st.integers(-max_amp, max_amp).filter(lambda x: x != 0))
        events.append((t, a))
    return SpikeTrain(tuple(events))


widths = st.integers(3, 12)


# ---------------------------------------------------------------------------
# SpikeTrain / DeltaWord basics
# ---------------------------------------------------------------------------


def test_train_rejects_unsorted_times():
    with pytest.raises(ValueError):
        SpikeTrain(((5, 1), (4, 1)))


def test_train_rejects_zero_amplitude():
    with pytest.raises(ValueError):
        SpikeTrain(((1, 0),))


def test_train_rejects_negative_time():
    with pytest.raises(ValueError):
        SpikeTrain(((-1, 2),))


def test_same_time_events_allowed_and_merge_by_sign():
    t = SpikeTrain(((3, 1), (3, 2), (3, -1)))
    assert t.merged().events == ((3, 3), (3, -1))


def test_word_layout():
    w = DeltaWord.data(-1, 2, 4)
    assert (w.sign, w.magnitude, w.raw) == (-1, 2, 0b1010)
    assert DeltaWord.overflow(4).raw == 0b1111
    assert DeltaWord.overflow(4).is_overflow
    assert str(DeltaWord.data(1, 0, 4)) == "+0"


def test_reserved_pattern_not_packable():
    with pytest.raises(ValueError):
        pack_word(-1, overflow_span(4), 4)
    # the positive word of maximal magnitude is a legal (non-canonical) pattern
    assert pack_word(1, overflow_span(4), 4) == 0b0111


def test_width_floor():
    with pytest.raises(ValueError):
        DeltaStream(2, [])
    with pytest.raises(ValueError):
        to_delta_words(SpikeTrain(), 2)


# ---------------------------------------------------------------------------
# delta_encode_signal: exact-rational oracle
# ---------------------------------------------------------------------------


def encode_oracle(samples, theta):
    """Accumulate-and-threshold with exact rational arithmetic."""
    residual = Fraction(0)
    out = []
    for p in range(1, len(samples)):
        residual += samples[p] - samples[p - 1]
        q = math.trunc(residual / theta)
        if q:
            out.append((p, q))
            residual -= q * theta
    return tuple(out)


def test_encode_constant_signal_is_silent():
    assert delta_encode_signal([0.5, 0.5, 0.5], 0.05).events == ()


def test_encode_single_step():
    expect = encode_oracle([Fraction(0), Fraction(3, 10)], Fraction(1, 20))
    assert expect == ((1, 6),)
    assert delta_encode_signal([0.0, 0.3], 0.05).events == expect


def test_encode_residual_carries_across_samples():
    expect = encode_oracle(
        [Fraction(0), Fraction(4, 100), Fraction(8, 100)], Fraction(1, 20)
    )
    assert expect == ((2, 1),)
    assert delta_encode_signal([0.0, 0.04, 0.08], 0.05).events == expect


def test_encode_errors():
    with pytest.raises(ValueError, match="empty signal"):
        delta_encode_signal([], 0.05)
    with pytest.raises(ValueError, match="invalid threshold"):
        delta_encode_signal([0.1], 0.0)
    with pytest.raises(ValueError, match="invalid threshold"):
        delta_encode_signal([0.1], -1.0)


@given(
    st.lists(st.integers(0, 255), min_size=1, max_size=60),
    st.integers(1, 40),
)
def test_encode_matches_rational_oracle_on_pixel_grid(levels, theta_scaled):
    # pixel-style samples k/255, thresholds k/100: float impl == exact rational
    theta = Fraction(theta_scaled, 100)
    samples = [Fraction(v, 255) for v in levels]
    expect = encode_oracle(samples, theta)
    got = delta_encode_signal([v / 255 for v in levels], theta_scaled / 100).events
    assert got == expect


@given(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=40))
def test_encode_residual_bound(samples):
    theta = 0.05
    for p in range(1, len(samples) + 1):
        prefix = samples[:p]
        total = sum(a for _, a in delta_encode_signal(prefix, theta))
        change = prefix[-1] - prefix[0]
        assert abs(change - total * theta) < theta * (1 + 1e-6)


# ---------------------------------------------------------------------------
# word stream encode/decode
# ---------------------------------------------------------------------------


def test_encode_basic_deltas():
    s = to_delta_words(SpikeTrain(((2, 1), (5, 1), (5, 1), (9, 1))), 8)
    assert stream_to_text(s) == "+2 +3 +0 +4"


def test_encode_overflow_split():
    s = to_delta_words(SpikeTrain(((10, 1),)), 4)
    assert stream_to_text(s) == "OV +3"  # V=7, 10 = 7 + 3


def test_encode_amplitude_folding():
    s = to_delta_words(SpikeTrain(((0, 2),)), 8)
    assert stream_to_text(s) == "+0 +0"


def test_decode_merges_zero_delta_chain():
    s = stream_from_text("+2 +3 +0 +4", 8)
    assert from_delta_words(s).events == ((2, 1), (5, 2), (9, 1))


def test_decode_overflow_advances_time_only():
    s = stream_from_text("OV +3", 4)
    assert from_delta_words(s).events == ((10, 1),)


def test_decode_empty():
    assert from_delta_words(DeltaStream(8, [])).events == ()


def test_decode_mixed_sign_zero_deltas_stay_separate():
    s = stream_from_text("+2 -0 +0", 8)
    assert from_delta_words(s).events == ((2, 1), (2, -1), (2, 1))


def test_decode_zero_delta_after_overflow_is_new_event():
    s = stream_from_text("+2 OV +0", 4)
    assert from_delta_words(s).events == ((2, 1), (9, 1))


@given(spike_trains(), widths)
def test_roundtrip(train, b):
    assert from_delta_words(to_delta_words(train, b)) == train.merged()


@given(spike_trains(), widths, widths)
def test_width_independence(train, b1, b2):
    d1 = from_delta_words(to_delta_words(train, b1))
    d2 = from_delta_words(to_delta_words(train, b2))
    assert d1 == d2


@given(spike_trains(max_delta=60), widths)
def test_overflow_minimality(train, b):
    v = overflow_span(b)
    expected = 0
    prev = 0
    for t, _ in train:
        expected += (t - prev) // v
        prev = t
    assert to_delta_words(train, b).overflow_count() == expected


@given(spike_trains(), widths)
def test_reencode_is_canonical(train, b):
    s = to_delta_words(train, b)
    again = to_delta_words(from_delta_words(s), b)
    assert again.words == s.words


def test_scale_times():
    t = SpikeTrain(((2, 1), (5, -1)))
    assert scale_times(t, 2).events == ((4, 1), (10, -1))
    assert scale_times(t, 1) == t
    assert scale_times(SpikeTrain(((1, 3),)), 4).events == ((4, 3),)
    with pytest.raises(ValueError):
        scale_times(t, 0)


# ---------------------------------------------------------------------------
# file and text formats
# ---------------------------------------------------------------------------


def test_dts_roundtrip(tmp_path):
    streams = [
        to_delta_words(SpikeTrain(((2, 1), (9, -2))), 8),
        DeltaStream(8, []),
        to_delta_words(SpikeTrain(((200, 1),)), 8),
    ]
    path = tmp_path / "x.dts"
    write_dts(streams, path)
    back = read_dts(path)
    assert [s.words for s in back] == [s.words for s in streams]
    assert back[0].width_bits == 8


def test_dts_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.dts"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(ValueError, match="bad magic"):
        read_dts(path)


def test_dts_width_mismatch(tmp_path):
    with pytest.raises(ValueError):
        write_dts([DeltaStream(8, []), DeltaStream(4, [])], tmp_path / "y.dts")


def test_text_roundtrip():
    s = stream_from_text("+3 +0 OV -2", 8)
    assert stream_to_text(s) == "+3 +0 OV -2"
    with pytest.raises(ValueError):
        stream_from_text("+3 huh", 8)
