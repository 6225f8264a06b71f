import json

import pytest

from dpf.config import TrainConfig, config_from_obj, load_config, save_config
from dpf.errors import SchemaError


def test_per_task_defaults():
    p = TrainConfig(task="parsing", synth_scenes=5)
    i = TrainConfig(task="intrinsic", synth_scenes=5)
    assert (p.base_lr, p.max_epochs) == (0.028, 70)
    assert (i.base_lr, i.max_epochs) == (0.007, 30)
    assert p.lr_power == 0.9
    assert p.momentum == 0.9 and p.weight_decay == 0.0001
    assert p.batch_size == 2


def test_unknown_key_rejected():
    with pytest.raises(SchemaError) as err:
        config_from_obj({"task": "parsing", "synth_scenes": 2, "lerning_rate": 0.1})
    assert "lerning_rate" in str(err.value)


def test_notes_and_underscore_keys_ignored():
    cfg = config_from_obj({"task": "parsing", "synth_scenes": 2,
                           "notes": "pilot-tuned", "_comment": "x"})
    assert cfg.synth_scenes == 2


def test_digest_stable_and_sensitive():
    a = TrainConfig(task="parsing", synth_scenes=5)
    b = TrainConfig(task="parsing", synth_scenes=5)
    c = TrainConfig(task="parsing", synth_scenes=5, seed=1)
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()


def test_round_trip(tmp_path):
    path = str(tmp_path / "cfg.json")
    cfg = TrainConfig(task="intrinsic", synth_scenes=4, mlp_hidden=(32, 16))
    save_config(path, cfg)
    loaded = load_config(path)
    assert loaded == cfg
    assert loaded.digest() == cfg.digest()


def test_value_dim_per_task():
    assert TrainConfig(task="parsing", classes=7, synth_scenes=1).value_dim == 7
    assert TrainConfig(task="intrinsic", synth_scenes=1).value_dim == 1


def test_needs_data_source():
    with pytest.raises(SchemaError):
        TrainConfig(task="parsing")


def test_invalid_values():
    with pytest.raises(SchemaError):
        TrainConfig(task="flying", synth_scenes=1)
    with pytest.raises(SchemaError):
        TrainConfig(task="parsing", synth_scenes=1, weight_mode="cubic")
    with pytest.raises(SchemaError):
        TrainConfig(task="parsing", synth_scenes=1, base_lr=-1.0)
    with pytest.raises(SchemaError):
        config_from_obj({"task": "parsing", "synth_scenes": 1,
                         "backbone_widths": "wide"})


def test_json_file_errors(tmp_path):
    path = str(tmp_path / "bad.json")
    with open(path, "w") as f:
        f.write("{not json")
    with pytest.raises(SchemaError):
        load_config(path)
