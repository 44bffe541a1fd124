"""Experiment configuration: parsing, validation, presets."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

from .data import CSV_PRESETS, SyntheticScenario
from .dtfl import STRATEGY_NAMES
from .engine import FLConfig
from .errors import ConfigError

SWEEPABLE = ("E", "B", "C", "gamma", "teacher_epochs", "exchange_policy")

DEFAULTS: dict[str, Any] = {
    "model": {"hidden": [16, 8]},
    "test_fraction": 0.2,
    "partition": {"scheme": "label_skew", "minority_fraction": 0.1},
    "federated": {
        "clients": 20,
        "fraction": 0.3,
        "local_epochs": 2,
        "batch_size": 10,
        "max_rounds": 100,
        "target_accuracy": 0.8,
        "seed": 0,
        "eval_cadence": 1,
        "optimizer": "adam",
        "learning_rate": 0.001,
    },
}

_SYNTH_DEFAULT = {
    "d": 20,
    "n_real": 4000,
    "n_twin": 4000,
    "anomaly_rate": 0.5,
    "anomaly_balance": 0.5,
    "twin_anomaly_rate": 0.15,
    "twin_blindspot": 0.0,
    "shift": 0.5,
    "noise_scale": 0.25,
    "seed": 0,
}

PRESETS: dict[str, dict] = {
    "convergence": {
        "dataset": {"synthetic": dict(_SYNTH_DEFAULT)},
        "federated": {
            "clients": 20,
            "fraction": 0.3,
            "batch_size": 10,
            "local_epochs": 2,
            "target_accuracy": 0.8,
            "max_rounds": 100,
        },
        "strategies": [{"name": n} for n in STRATEGY_NAMES],
    },
    "gamma-sweep": {
        "dataset": {"synthetic": dict(_SYNTH_DEFAULT)},
        "federated": {
            "clients": 20,
            "fraction": 0.3,
            "batch_size": 10,
            "local_epochs": 2,
            "target_accuracy": 0.8,
            "max_rounds": 200,
        },
        "strategies": [{"name": "fpf", "pretrain_epochs": 1}],
        "sweep": {
            "param": "gamma",
            "values": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            "seeds": 1,
        },
    },
    "scale100": {
        "dataset": {"synthetic": dict(_SYNTH_DEFAULT)},
        "federated": {
            "clients": 100,
            "fraction": 0.3,
            "batch_size": 10,
            "local_epochs": 2,
            "target_accuracy": 0.8,
            "max_rounds": 100,
        },
        "strategies": [{"name": n} for n in STRATEGY_NAMES],
    },
}


@dataclass
class DatasetSource:
    """Exactly one of: synthetic scenario, or CSV paths with a schema."""

    synthetic: SyntheticScenario | None = None
    real_csv: str | None = None
    twin_csv: str | None = None
    csv_schema: dict | None = None


@dataclass
class StrategySpec:
    name: str
    params: dict = field(default_factory=dict)


@dataclass
class SweepSpec:
    param: str
    values: list
    seeds: int = 1


@dataclass
class ExperimentConfig:
    dataset: DatasetSource
    fl: FLConfig
    hidden: tuple[int, ...]
    test_fraction: float
    partition_scheme: str
    minority_fraction: float
    strategies: list[StrategySpec]
    sweep: SweepSpec | None
    output_dir: str | None
    normalized: dict = field(default_factory=dict)


def _require(tree: dict, key: str, path: str):
    if key not in tree:
        raise ConfigError("missing required field", f"{path}.{key}" if path else key)
    return tree[key]


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def normalize(raw: dict) -> dict:
    """Fill in all defaults so the echoed config fully regenerates the run."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    tree = _merge(DEFAULTS, raw)
    if "preset" in tree:
        name = tree.pop("preset")
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r} (have {sorted(PRESETS)})", "preset")
        tree = _merge(_merge(DEFAULTS, PRESETS[name]), raw)
        tree.pop("preset", None)
    if "dataset" in tree and "synthetic" in tree.get("dataset", {}):
        tree["dataset"]["synthetic"] = _merge(_SYNTH_DEFAULT, tree["dataset"]["synthetic"] or {})
    return tree


def parse(raw: dict) -> ExperimentConfig:
    tree = normalize(raw)

    ds_tree = _require(tree, "dataset", "")
    if not isinstance(ds_tree, dict):
        raise ConfigError("must be a mapping", "dataset")
    has_synth = "synthetic" in ds_tree
    has_csv = "csv" in ds_tree
    if has_synth == has_csv:
        raise ConfigError("exactly one of 'synthetic' or 'csv' required", "dataset")

    if has_synth:
        try:
            scenario = SyntheticScenario(**ds_tree["synthetic"])
        except TypeError as exc:
            raise ConfigError(str(exc), "dataset.synthetic")
        except Exception as exc:
            raise ConfigError(str(exc), "dataset.synthetic")
        source = DatasetSource(synthetic=scenario)
    else:
        csv_tree = ds_tree["csv"]
        real = _require(csv_tree, "real", "dataset.csv")
        schema = dict(csv_tree.get("schema") or {})
        preset = csv_tree.get("preset")
        if preset is not None:
            if preset not in CSV_PRESETS:
                raise ConfigError(
                    f"unknown csv preset {preset!r} (have {sorted(CSV_PRESETS)})",
                    "dataset.csv.preset",
                )
            schema = {**CSV_PRESETS[preset], **schema}
        if "label_column" not in schema:
            raise ConfigError("schema needs a label_column", "dataset.csv.schema")
        source = DatasetSource(real_csv=real, twin_csv=csv_tree.get("twin"), csv_schema=schema)

    fl_tree = tree["federated"]
    try:
        fl = FLConfig(
            num_clients=int(fl_tree["clients"]),
            client_fraction=float(fl_tree["fraction"]),
            local_epochs=int(fl_tree["local_epochs"]),
            batch_size=int(fl_tree["batch_size"]),
            max_rounds=int(fl_tree["max_rounds"]),
            target_accuracy=float(fl_tree["target_accuracy"]),
            seed=int(fl_tree["seed"]),
            eval_cadence=int(fl_tree["eval_cadence"]),
            optimizer=str(fl_tree["optimizer"]),
            learning_rate=float(fl_tree["learning_rate"]),
        )
    except KeyError as exc:
        raise ConfigError("missing field", f"federated.{exc.args[0]}")
    except Exception as exc:
        raise ConfigError(str(exc), "federated")

    hidden = tuple(int(h) for h in tree["model"]["hidden"])
    if not hidden:
        raise ConfigError("at least one hidden layer required", "model.hidden")

    test_fraction = float(tree["test_fraction"])
    if not 0.0 < test_fraction < 1.0:
        raise ConfigError("must be in (0,1)", "test_fraction")

    part_tree = tree["partition"]
    scheme = str(part_tree.get("scheme", "label_skew"))
    if scheme not in ("iid", "label_skew"):
        raise ConfigError(f"unknown partition scheme {scheme!r}", "partition.scheme")
    minority_fraction = float(part_tree.get("minority_fraction", 0.2))
    if not 0.0 <= minority_fraction <= 1.0:
        raise ConfigError("must be in [0,1]", "partition.minority_fraction")

    strat_tree = tree.get("strategies")
    if strat_tree is None and "strategy" in tree:
        strat_tree = [tree["strategy"]]
    if not strat_tree:
        raise ConfigError("missing required field", "strategies")
    strategies = []
    for i, s in enumerate(strat_tree):
        if isinstance(s, str):
            s = {"name": s}
        name = s.get("name")
        if name not in STRATEGY_NAMES:
            raise ConfigError(
                f"unknown strategy {name!r} (have {list(STRATEGY_NAMES)})",
                f"strategies[{i}].name",
            )
        strategies.append(StrategySpec(name, {k: v for k, v in s.items() if k != "name"}))

    sweep = None
    if tree.get("sweep"):
        sw = tree["sweep"]
        param = _require(sw, "param", "sweep")
        if param not in SWEEPABLE:
            raise ConfigError(f"sweepable parameters are {list(SWEEPABLE)}", "sweep.param")
        values = _require(sw, "values", "sweep")
        if not values:
            raise ConfigError("values list must be nonempty", "sweep.values")
        seeds = int(sw.get("seeds", 1))
        if seeds < 1:
            raise ConfigError("seeds must be positive", "sweep.seeds")
        sweep = SweepSpec(param, list(values), seeds)

    return ExperimentConfig(
        dataset=source,
        fl=fl,
        hidden=hidden,
        test_fraction=test_fraction,
        partition_scheme=scheme,
        minority_fraction=minority_fraction,
        strategies=strategies,
        sweep=sweep,
        output_dir=tree.get("output_dir"),
        normalized=tree,
    )
