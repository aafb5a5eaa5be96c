import json

import numpy as np
import pytest
import torch

from export_check import check_netspec
from train import TrainConfig, delta_encode, train


def tiny_cfg(**kw):
    base = dict(hidden=12, epochs=2, reps=6, seed=3, batch_size=32, lr=2e-3)
    base.update(kw)
    return TrainConfig(**base)


def test_decay_exp_from_beta():
    assert TrainConfig(beta=0.5).decay_exp() == 1
    assert TrainConfig(beta=0.25).decay_exp() == 2
    with pytest.raises(ValueError):
        TrainConfig(beta=0.3).decay_exp()


def test_delta_encode_step():
    flat = np.zeros(16)
    flat[4:] = 0.3
    q = delta_encode(flat, 0.05)
    assert q[4] == 6
    assert not q[:4].any() and not q[5:].any()


def test_train_exports_valid_netspec(tiny_data_dir, tmp_path):
    spec = train(tiny_cfg(), tiny_data_dir, log=lambda *_: None)
    out = tmp_path / "netspec.json"
    out.write_text(json.dumps(spec))
    report = check_netspec(out)
    assert report.startswith("ok, 784-12-3")
    meta = spec["metadata"]
    assert meta["float_train_acc"] > 0.5  # 3 separable classes, chance is 0.33
    assert meta["float_test_acc"] > 0.5
    assert spec["layers"][0]["decay_exp"] == 1
    assert spec["layers"][0]["theta_high"] == 1.0
    w = np.asarray(spec["layers"][0]["weights_float"])
    assert w.shape == (12, 784) and np.isfinite(w).all()


def test_train_is_seed_deterministic(tiny_data_dir):
    a = train(tiny_cfg(epochs=1), tiny_data_dir, log=lambda *_: None)
    b = train(tiny_cfg(epochs=1), tiny_data_dir, log=lambda *_: None)
    assert a["layers"][0]["weights_float"] == b["layers"][0]["weights_float"]
    assert a["layers"][1]["weights_float"] == b["layers"][1]["weights_float"]


def test_export_check_rejects_dim_mismatch(tmp_path):
    spec = {
        "layers": [
            {"n_inputs": 4, "n_neurons": 3, "decay_exp": 1, "theta_high": 1.0,
             "weights_float": np.zeros((3, 4)).tolist()},
            {"n_inputs": 5, "n_neurons": 2, "decay_exp": 1, "theta_high": 1.0,
             "weights_float": np.zeros((2, 5)).tolist()},
        ]
    }
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(spec))
    with pytest.raises(ValueError, match="outputs feed"):
        check_netspec(p)


def test_export_check_rejects_nan(tmp_path):
    spec = {
        "layers": [
            {"n_inputs": 2, "n_neurons": 1, "decay_exp": 1, "theta_high": 1.0,
             "weights_float": [[float("nan"), 0.0]]}
        ]
    }
    p = tmp_path / "nan.json"
    p.write_text(json.dumps(spec).replace("NaN", "NaN"))
    with pytest.raises(ValueError, match="non-finite"):
        check_netspec(p)


def test_export_check_rejects_bad_decay(tmp_path):
    spec = {
        "layers": [
            {"n_inputs": 1, "n_neurons": 1, "decay_exp": 0, "theta_high": 1.0,
             "weights_float": [[1.0]]}
        ]
    }
    p = tmp_path / "dec.json"
    p.write_text(json.dumps(spec))
    with pytest.raises(ValueError, match="decay_exp"):
        check_netspec(p)
