"""End-to-end experiment execution and result serialization."""
from __future__ import annotations

import csv
import dataclasses
import json
import os
from pathlib import Path
from statistics import median

from .alignment import alignment_report
from .config import ExperimentConfig, StrategySpec, parse
from .data import (
    Dataset,
    PartitionSpec,
    generate_scenario,
    load_csv,
    partition,
    standardize_jointly,
    train_test_split,
)
from .dtfl import (
    CWAStrategy,
    DTKDConfig,
    DTKDStrategy,
    DTMLConfig,
    DTMLStrategy,
    ExchangeMap,
    FPFConfig,
    FPFStrategy,
    LPEStrategy,
)
from .engine import (
    ExperimentResult,
    FederatedEngine,
    FLConfig,
    HFLConfig,
    HFLStrategy,
    RoundRecord,
    Strategy,
    FedProxStrategy,
)
from .errors import ConfigError
from .nn import ModelArch

CSV_COLUMNS = (
    "round",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "auc",
    "params_up",
    "params_down",
    "reached_target",
    "wall_time",
)


def build_strategy(spec: StrategySpec, num_layers: int) -> Strategy:
    p = spec.params
    try:
        if spec.name == "fedavg":
            return Strategy()
        if spec.name == "fedprox":
            return FedProxStrategy(mu=float(p.get("mu", 0.01)))
        if spec.name == "hfl":
            return HFLStrategy(
                HFLConfig(
                    num_edges=int(p.get("edges", 4)),
                    edge_period=int(p.get("edge_period", 1)),
                )
            )
        if spec.name == "dtml":
            return DTMLStrategy(
                DTMLConfig(beta=float(p.get("beta", 0.3)), meta_batch=p.get("meta_batch"))
            )
        if spec.name == "fpf":
            return FPFStrategy(
                FPFConfig(
                    gamma=float(p.get("gamma", 0.5)),
                    similarity=str(p.get("similarity", "frobenius_cosine")),
                ),
                pretrain_epochs=int(p.get("pretrain_epochs", 5)),
            )
        if spec.name == "lpe":
            policy = str(p.get("policy", "static"))
            if policy == "static":
                emap = ExchangeMap.static_policy(num_layers)
            elif policy == "reverse":
                emap = ExchangeMap.reverse_policy(num_layers)
            elif policy == "none":
                emap = ExchangeMap.none_policy(num_layers)
            else:
                raise ConfigError(f"unknown policy {policy!r}", "strategies.lpe.policy")
            return LPEStrategy(emap, pretrain_epochs=int(p.get("pretrain_epochs", 5)))
        if spec.name == "cwa":
            return CWAStrategy(
                simultaneous_swap=bool(p.get("simultaneous_swap", False)),
                pretrain_epochs=int(p.get("pretrain_epochs", 5)),
            )
        if spec.name == "dtkd":
            return DTKDStrategy(
                DTKDConfig(
                    teacher_pretrain_epochs=int(p.get("teacher_epochs", 5)),
                    soft_label_cache=bool(p.get("soft_label_cache", False)),
                )
            )
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(str(exc), f"strategies.{spec.name}")
    raise ConfigError(f"unknown strategy {spec.name!r}", "strategies")


def load_sources(cfg: ExperimentConfig) -> tuple[Dataset, Dataset | None]:
    """Load the (real, twin) dataset pair named by the config."""
    src = cfg.dataset
    if src.synthetic is not None:
        real, twin = generate_scenario(src.synthetic)
        return real, twin
    real = load_csv(src.real_csv, src.csv_schema)
    twin = load_csv(src.twin_csv, src.csv_schema) if src.twin_csv else None
    return real, twin


def prepare_datasets(cfg: ExperimentConfig):
    """Standardize, split and partition into engine-ready pieces."""
    real, twin = load_sources(cfg)
    if twin is not None:
        real, twin, _, _ = standardize_jointly(real, twin)
    train, test = train_test_split(real, cfg.test_fraction, cfg.fl.seed)
    shards = partition(
        train,
        PartitionSpec(
            cfg.fl.num_clients,
            scheme=cfg.partition_scheme,
            minority_fraction=cfg.minority_fraction,
            seed=cfg.fl.seed,
        ),
    )
    return shards, test, twin


def run_single(
    cfg: ExperimentConfig, spec: StrategySpec, fl: FLConfig | None = None
) -> ExperimentResult:
    fl = fl or cfg.fl
    shards, test, twin = prepare_datasets(dataclasses.replace(cfg, fl=fl))
    arch = ModelArch((test.d, *cfg.hidden, 1))
    strategy = build_strategy(spec, arch.num_layers)
    engine = FederatedEngine(fl, arch, shards, test, strategy, twin_data=twin)
    return engine.run()


def write_rounds_csv(path: Path, records: list[RoundRecord]):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.round,
                    repr(r.accuracy),
                    repr(r.precision),
                    repr(r.recall),
                    repr(r.f1),
                    repr(r.auc),
                    r.params_up,
                    r.params_down,
                    int(r.reached_target),
                    repr(r.wall_time),
                ]
            )


def output_root(override: str | None = None) -> Path:
    root = override or os.environ.get("TWINFED_OUTPUT_ROOT") or "."
    return Path(root)


def run_bundle(raw_config: dict, output_dir: str | None = None) -> dict:
    """Run every configured strategy and write a result bundle to disk."""
    cfg = parse(raw_config)
    out = output_root(output_dir) / (cfg.output_dir or "results")
    out.mkdir(parents=True, exist_ok=True)
    summaries = {}
    for spec in cfg.strategies:
        result = run_single(cfg, spec)
        sub = out / spec.name
        sub.mkdir(parents=True, exist_ok=True)
        write_rounds_csv(sub / "rounds.csv", result.records)
        with open(sub / "summary.json", "w") as fh:
            json.dump(result.summary, fh, indent=2)
        summaries[spec.name] = result.summary
    bundle = {
        "config": cfg.normalized,
        "seed": cfg.fl.seed,
        "summaries": summaries,
    }
    with open(out / "summary.json", "w") as fh:
        json.dump(bundle, fh, indent=2)
    return {"output_dir": str(out), **bundle}


def _apply_sweep_value(cfg: ExperimentConfig, spec: StrategySpec, param: str, value):
    fl = cfg.fl
    params = dict(spec.params)
    if param == "E":
        fl = dataclasses.replace(fl, local_epochs=int(value))
    elif param == "B":
        fl = dataclasses.replace(fl, batch_size=int(value))
    elif param == "C":
        fl = dataclasses.replace(fl, client_fraction=float(value))
    elif param == "gamma":
        if spec.name != "fpf":
            raise ConfigError("gamma sweeps apply to the fpf strategy", "sweep.param")
        params["gamma"] = float(value)
    elif param == "teacher_epochs":
        if spec.name != "dtkd":
            raise ConfigError("teacher_epochs sweeps apply to the dtkd strategy", "sweep.param")
        params["teacher_epochs"] = int(value)
    elif param == "exchange_policy":
        if spec.name != "lpe":
            raise ConfigError("exchange_policy sweeps apply to the lpe strategy", "sweep.param")
        params["policy"] = str(value)
    else:
        raise ConfigError(f"cannot sweep {param!r}", "sweep.param")
    return fl, StrategySpec(spec.name, params)


def run_sweep(raw_config: dict, output_dir: str | None = None) -> dict:
    """One experiment per (value, seed) cell, with per-value medians."""
    cfg = parse(raw_config)
    if cfg.sweep is None:
        raise ConfigError("missing required field", "sweep")
    if len(cfg.strategies) != 1:
        raise ConfigError("sweeps run a single strategy", "strategies")
    spec = cfg.strategies[0]
    out = output_root(output_dir) / (cfg.output_dir or "results")
    out.mkdir(parents=True, exist_ok=True)

    censored = cfg.fl.max_rounds + 1
    cells = []
    for value in cfg.sweep.values:
        fl, cell_spec = _apply_sweep_value(cfg, spec, cfg.sweep.param, value)
        per_seed = []
        for i in range(cfg.sweep.seeds):
            fl_seeded = dataclasses.replace(fl, seed=cfg.fl.seed + i)
            result = run_single(cfg, cell_spec, fl=fl_seeded)
            sub = out / f"{cfg.sweep.param}={value}" / f"seed={fl_seeded.seed}"
            sub.mkdir(parents=True, exist_ok=True)
            write_rounds_csv(sub / "rounds.csv", result.records)
            with open(sub / "summary.json", "w") as fh:
                json.dump(result.summary, fh, indent=2)
            per_seed.append(result.summary)
        rounds = [s["rounds_to_target"] or censored for s in per_seed]
        cells.append(
            {
                "value": value,
                "seeds": [cfg.fl.seed + i for i in range(cfg.sweep.seeds)],
                "median_rounds_to_target": median(rounds),
                "reached_fraction": sum(s["reached_target"] for s in per_seed) / len(per_seed),
                "median_final_accuracy": median(s["final_metrics"]["accuracy"] for s in per_seed),
                "median_final_auc": median(s["final_metrics"]["auc"] for s in per_seed),
                "per_seed": per_seed,
            }
        )
    bundle = {
        "config": cfg.normalized,
        "strategy": spec.name,
        "param": cfg.sweep.param,
        "censored_at": censored,
        "cells": cells,
    }
    with open(out / "sweep_summary.json", "w") as fh:
        json.dump(bundle, fh, indent=2)
    return {"output_dir": str(out), **bundle}


def run_align(raw_config: dict, output_dir: str | None = None) -> dict:
    """Alignment report between the two configured dataset sources."""
    cfg = parse(raw_config)
    real, twin = load_sources(cfg)
    if twin is None:
        raise ConfigError("alignment needs both a real and a twin source", "dataset")
    real, twin, _, _ = standardize_jointly(real, twin)
    report = alignment_report(real, twin, seed=cfg.fl.seed)
    out = output_root(output_dir) / (cfg.output_dir or "results")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "alignment.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
    with open(out / "pca.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["component1", "component2", "source"])
        for row in report.pca_real:
            writer.writerow([repr(row[0]), repr(row[1]), "real"])
        for row in report.pca_twin:
            writer.writerow([repr(row[0]), repr(row[1]), "twin"])
    return {"output_dir": str(out), "report": report.to_dict()}
