"""Configuration parsing, defaults echo and validation."""
import pytest

from twinfed.config import DEFAULTS, PRESETS, normalize, parse
from twinfed.errors import ConfigError


def minimal():
    return {
        "dataset": {"synthetic": {"n_real": 200, "n_twin": 200, "d": 4}},
        "strategies": ["fedavg"],
    }


def test_minimal_config_fills_defaults():
    cfg = parse(minimal())
    assert cfg.fl.num_clients == 20
    assert cfg.fl.client_fraction == 0.3
    assert cfg.fl.local_epochs == 2
    assert cfg.fl.batch_size == 10
    assert cfg.fl.target_accuracy == 0.8
    assert cfg.hidden == (16, 8)
    assert cfg.partition_scheme == "label_skew"
    assert cfg.minority_fraction == 0.1
    assert cfg.dataset.synthetic.d == 4
    assert cfg.dataset.synthetic.shift == 0.5
    assert cfg.strategies[0].name == "fedavg"


def test_normalized_tree_echoes_everything():
    tree = parse(minimal()).normalized
    assert tree["federated"]["learning_rate"] == 0.001
    assert tree["dataset"]["synthetic"]["noise_scale"] == 0.25
    assert tree["partition"] == {"scheme": "label_skew", "minority_fraction": 0.1}
    # the echoed tree re-parses to the same config
    assert parse(tree).normalized == tree


def test_presets_all_parse():
    for name in PRESETS:
        cfg = parse({"preset": name})
        assert cfg.strategies
    conv = parse({"preset": "convergence"})
    assert {s.name for s in conv.strategies} == {
        "fedavg", "fedprox", "hfl", "dtml", "fpf", "lpe", "cwa", "dtkd",
    }
    assert conv.fl.max_rounds == 100 and conv.fl.num_clients == 20
    scale = parse({"preset": "scale100"})
    assert scale.fl.num_clients == 100
    sweep = parse({"preset": "gamma-sweep"})
    assert sweep.sweep.param == "gamma"
    assert sweep.fl.max_rounds == 200
    assert sweep.strategies[0].params["pretrain_epochs"] == 1
    assert 0.3 in sweep.sweep.values and 0.9 in sweep.sweep.values


def test_preset_with_overrides():
    cfg = parse({"preset": "convergence", "federated": {"max_rounds": 7, "seed": 3}})
    assert cfg.fl.max_rounds == 7 and cfg.fl.seed == 3
    assert cfg.fl.num_clients == 20  # preset value survives


def test_unknown_preset():
    with pytest.raises(ConfigError, match="preset"):
        parse({"preset": "warp-speed"})


def test_dataset_exclusivity():
    with pytest.raises(ConfigError, match="dataset"):
        parse({"strategies": ["fedavg"], "dataset": {}})
    with pytest.raises(ConfigError):
        parse({
            "strategies": ["fedavg"],
            "dataset": {"synthetic": {}, "csv": {"real": "x.csv"}},
        })


def test_csv_dataset_schema_validation():
    with pytest.raises(ConfigError, match="label_column"):
        parse({"strategies": ["fedavg"], "dataset": {"csv": {"real": "x.csv"}}})
    cfg = parse({
        "strategies": ["fedavg"],
        "dataset": {"csv": {"real": "x.csv", "preset": "i40"}},
    })
    assert cfg.dataset.csv_schema["label_column"] == "Label"
    with pytest.raises(ConfigError, match="csv.preset"):
        parse({
            "strategies": ["fedavg"],
            "dataset": {"csv": {"real": "x.csv", "preset": "nope"}},
        })


def test_strategy_validation_and_params():
    raw = minimal()
    raw["strategies"] = [{"name": "fpf", "gamma": 0.4}, "lpe"]
    cfg = parse(raw)
    assert cfg.strategies[0].params == {"gamma": 0.4}
    assert cfg.strategies[1].name == "lpe"
    raw["strategies"] = ["teleport"]
    with pytest.raises(ConfigError, match="strategies"):
        parse(raw)
    raw["strategies"] = []
    with pytest.raises(ConfigError):
        parse(raw)


def test_sweep_validation():
    raw = minimal()
    raw["strategies"] = ["fpf"]
    raw["sweep"] = {"param": "gamma", "values": [0.1, 0.5], "seeds": 2}
    cfg = parse(raw)
    assert cfg.sweep.values == [0.1, 0.5] and cfg.sweep.seeds == 2
    raw["sweep"] = {"param": "mystery", "values": [1]}
    with pytest.raises(ConfigError, match="sweep.param"):
        parse(raw)
    raw["sweep"] = {"param": "gamma", "values": []}
    with pytest.raises(ConfigError):
        parse(raw)
    raw["sweep"] = {"param": "gamma", "values": [0.1], "seeds": 0}
    with pytest.raises(ConfigError):
        parse(raw)


def test_field_paths_in_errors():
    raw = minimal()
    raw["federated"] = {"clients": -1}
    with pytest.raises(ConfigError, match="federated"):
        parse(raw)
    raw = minimal()
    raw["test_fraction"] = 2.0
    with pytest.raises(ConfigError, match="test_fraction"):
        parse(raw)
    raw = minimal()
    raw["partition"] = {"scheme": "random"}
    with pytest.raises(ConfigError, match="partition.scheme"):
        parse(raw)
    raw = minimal()
    raw["dataset"]["synthetic"]["shift"] = -2
    with pytest.raises(ConfigError, match="dataset.synthetic"):
        parse(raw)


def test_defaults_are_not_mutated():
    before = repr(DEFAULTS)
    parse({"preset": "convergence", "federated": {"clients": 3}})
    assert repr(DEFAULTS) == before


def test_root_must_be_mapping():
    with pytest.raises(ConfigError):
        normalize([1, 2, 3])
