"""Integer arithmetic of a single neuron: shift decay, accumulate, reset-to-mod.

All state is plain Python integers, so nothing here can wrap or round except
the decay shift itself (rounding toward minus infinity, as an arithmetic
right-shifter does).  An optional register-width check raises instead of
wrapping when a hardware-width budget is exceeded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

__all__ = [
    "NeuronParams",
    "NeuronState",
    "decay_potential",
    "accumulate",
    "apply_reset",
    "neuron_event",
]


@dataclass(frozen=True)
class NeuronParams:
    """Per-layer neuron constants.

    decay_exp:   i in the per-tick decay 2**-i; one tick decays by >> i.
    theta_high:  positive firing threshold (weight fixed-point scale).
    theta_low:   optional negative threshold; when absent the neuron never
                 fires negative spikes and the potential may drift below
                 -theta_high unbounded.
    max_bits:    optional register width; operations raise OverflowError when
                 the potential or accumulator would not fit a signed value of
                 that width.
    """

    decay_exp: int
    theta_high: int
    theta_low: Optional[int] = None
    max_bits: Optional[int] = None

    def __post_init__(self) -> None:
        if self.decay_exp < 1:
            raise ValueError("decay exponent must be >= 1")
        if self.theta_high <= 0:
            raise ValueError("theta_high must be positive")
        if self.theta_low is not None and self.theta_low >= 0:
            raise ValueError("theta_low must be negative when present")
        if self.max_bits is not None and self.max_bits < 2:
            raise ValueError("max_bits must be >= 2")


@dataclass
class NeuronState:
    weights: list
    potential: int = 0
    accumulator: int = 0
    last_out_time: int = 0

    def __post_init__(self) -> None:
        self.weights = [int(w) for w in self.weights]


def decay_potential(potential: int, decay_exp: int, dt: int) -> int:
    """floor(P / 2**(decay_exp*dt)): arithmetic right shift, dt=0 is identity."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if decay_exp < 1:
        raise ValueError("decay exponent must be >= 1")
    return potential >> (decay_exp * dt)


def accumulate(state: NeuronState, synapse_index: int, sign: int) -> NeuronState:
    """Add sign * weight of one incoming spike to the accumulator."""
    if not 0 <= synapse_index < len(state.weights):
        raise IndexError(f"synapse index {synapse_index} out of range")
    if sign not in (1, -1):
        raise ValueError("spike sign must be +1 or -1")
    state.accumulator += sign * state.weights[synapse_index]
    return state


def apply_reset(potential: int, params: NeuronParams) -> tuple:
    """Reset-to-mod: subtract theta_high while P >= theta_high (each a +1
    spike), subtract theta_low while P <= theta_low (each a -1 spike).

    The loop is closed-form here: from above it lands in [0, theta_high), from
    below in (theta_low, 0], so the two directions never interleave and the
    fire count is a floor division.  Returns (new potential, signed count).
    """
    fired = 0
    if potential >= params.theta_high:
        fired = potential // params.theta_high
        potential -= fired * params.theta_high
    elif params.theta_low is not None and potential <= params.theta_low:
        n = potential // params.theta_low
        potential -= n * params.theta_low
        fired = -n
    return potential, fired


def _check_register(value: int, max_bits: Optional[int], what: str) -> None:
    if max_bits is not None and not -(1 << (max_bits - 1)) <= value < (1 << (max_bits - 1)):
        raise OverflowError(f"{what} {value} does not fit a signed {max_bits}-bit register")


def neuron_event(state: NeuronState, params: NeuronParams, dt: int) -> tuple:
    """One update step: decay by dt ticks, add the accumulated weights, reset.

    The accumulator must already hold the weighted sum of this event's spikes;
    it is cleared afterwards.  Returns (state, signed fire count).
    """
    _check_register(state.accumulator, params.max_bits, "accumulator")
    p = decay_potential(state.potential, params.decay_exp, dt)
    p += state.accumulator
    _check_register(p, params.max_bits, "potential")
    p, fired = apply_reset(p, params)
    state.potential = p
    state.accumulator = 0
    return state, fired
