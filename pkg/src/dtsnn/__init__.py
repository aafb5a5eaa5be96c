"""Integer-exact event-driven simulator for differential-time-encoded SNNs."""

from .spike_codec import (
    SpikeTrain,
    DeltaWord,
    DeltaStream,
    delta_encode_signal,
    to_delta_words,
    from_delta_words,
    scale_times,
    write_dts,
    read_dts,
)
from .neuron_core import (
    NeuronParams,
    NeuronState,
    decay_potential,
    accumulate,
    apply_reset,
    neuron_event,
)
from .layer_engine import EventBatch, LayerState, run_layer, run_layer_fast
from .netspec import LayerSpec, NetSpec, load_netspec, save_netspec
from .network import (
    InferenceResult,
    present_input,
    run_network,
    classify,
    evaluate_dataset,
    accuracy,
)
from .quantization import quantize_weights, quantize_netspec, sweep
from .oracle import densify, dense_simulate, check_equivalence, fuzz_equivalence
from .dataset import LabeledImageSet, load_idx, save_idx, encode_image, synthetic_digits

__version__ = "0.1.0"
