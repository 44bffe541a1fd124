"""Synchronous federated round engine with pluggable aggregation strategies.

Determinism contract: every random draw is keyed off (seed, round, sub-round,
client id), so a (config, datasets) pair fully determines the run.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import InvalidInputError, NumericError
from .metrics import basic_metrics, confusion, roc_auc, rounds_to_target
from .nn import (
    LayeredParams,
    ModelArch,
    Optimizer,
    bce_loss_and_grad,
    forward,
    init_params,
    kl_loss_and_grad,
    param_axpy,
    param_mean,
    proximal_term_grad,
)


@dataclass(frozen=True)
class FLConfig:
    num_clients: int = 20
    client_fraction: float = 0.3
    local_epochs: int = 2
    batch_size: int = 10
    max_rounds: int = 100
    target_accuracy: float = 0.8
    seed: int = 0
    eval_cadence: int = 1
    optimizer: str = "adam"
    learning_rate: float = 0.001

    def __post_init__(self):
        if self.num_clients < 1:
            raise InvalidInputError("num_clients must be positive")
        if not 0.0 < self.client_fraction <= 1.0:
            raise InvalidInputError("client_fraction must be in (0,1]")
        if self.local_epochs < 0:
            raise InvalidInputError("local_epochs must be non-negative")
        if self.batch_size < 1:
            raise InvalidInputError("batch_size must be positive")
        if self.max_rounds < 1:
            raise InvalidInputError("max_rounds must be positive")
        if not 0.0 <= self.target_accuracy <= 1.0:
            raise InvalidInputError("target_accuracy must be in [0,1]")
        if self.eval_cadence < 1:
            raise InvalidInputError("eval_cadence must be positive")

    @property
    def clients_per_round(self) -> int:
        # floor(C*K) with a floor of 1; the epsilon guards float artifacts
        # such as 0.3 * 20 rounding just below 6.
        return max(1, int(np.floor(self.client_fraction * self.num_clients + 1e-9)))


@dataclass(frozen=True)
class HFLConfig:
    num_edges: int = 4
    edge_period: int = 1
    assignment: tuple[int, ...] | None = None  # client -> edge; default round-robin

    def __post_init__(self):
        if self.num_edges < 1:
            raise InvalidInputError("num_edges must be positive")
        if self.edge_period < 1:
            raise InvalidInputError("edge_period must be positive")

    def edge_of(self, client: int) -> int:
        if self.assignment is not None:
            return self.assignment[client]
        return client % self.num_edges


@dataclass
class RoundRecord:
    round: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float
    params_up: int
    params_down: int
    reached_target: bool
    wall_time: float


@dataclass
class ExperimentResult:
    records: list[RoundRecord]
    summary: dict


class PayloadCounter:
    """Counts scalar parameters moved up/down within the current round."""

    def __init__(self):
        self.up = 0
        self.down = 0

    def add_up(self, n: int):
        self.up += int(n)

    def add_down(self, n: int):
        self.down += int(n)

    def drain(self) -> tuple[int, int]:
        up, down = self.up, self.down
        self.up = self.down = 0
        return up, down


@dataclass
class LossSpec:
    """Selects the local objective: plain BCE, BCE+proximal, or KL to a teacher."""

    kind: str = "bce"
    mu: float = 0.0
    anchor: LayeredParams | None = None
    teacher: LayeredParams | None = None

    def loss_and_grad(self, params: LayeredParams, x: np.ndarray, y: np.ndarray):
        if self.kind == "bce":
            return bce_loss_and_grad(params, x, y)
        if self.kind == "prox":
            loss, grad = bce_loss_and_grad(params, x, y)
            prox = proximal_term_grad(params, self.anchor, self.mu)
            return loss, param_axpy(1.0, prox, grad)
        if self.kind == "kl":
            teacher_probs = forward(self.teacher, x)
            return kl_loss_and_grad(params, x, teacher_probs)
        raise InvalidInputError(f"unknown loss kind {self.kind!r}")

    @property
    def uses_labels(self) -> bool:
        return self.kind != "kl"


def sample_clients(t: int, num_clients: int, fraction: float, seed: int) -> list[int]:
    """Uniform without-replacement draw of floor(C*K) clients, min 1."""
    m = max(1, int(np.floor(fraction * num_clients + 1e-9)))
    rng = np.random.default_rng(np.random.SeedSequence([seed, t, 0x5E1]))
    return sorted(rng.choice(num_clients, size=m, replace=False).tolist())


def local_train(
    start: LayeredParams,
    shard: Dataset,
    epochs: int,
    batch_size: int,
    optimizer: Optimizer,
    loss_spec: LossSpec,
    rng: np.random.Generator,
) -> LayeredParams:
    """Seeded mini-batch training; the final partial batch is included."""
    if shard.n < 1:
        raise InvalidInputError("client shard is empty")
    params = start
    for _ in range(epochs):
        perm = rng.permutation(shard.n)
        for lo in range(0, shard.n, batch_size):
            idx = perm[lo : lo + batch_size]
            _, grad = loss_spec.loss_and_grad(params, shard.features[idx], shard.labels[idx])
            params = optimizer.step(params, grad)
    return params


class Strategy:
    """FedAvg; subclasses override hooks to change the round structure."""

    name = "fedavg"

    def setup(self, engine: "FederatedEngine"):
        pass

    def loss_spec(self, engine: "FederatedEngine", broadcast: LayeredParams) -> LossSpec:
        return LossSpec("bce")

    def broadcast_payload(self, engine: "FederatedEngine") -> int:
        return engine.param_count

    def execute_round(self, engine: "FederatedEngine", t: int, selected: list[int]) -> LayeredParams:
        broadcast = engine.global_params
        engine.counter.add_down(len(selected) * self.broadcast_payload(engine))
        spec = self.loss_spec(engine, broadcast)
        updates = {k: engine.train_client(k, broadcast, t, 0, spec) for k in selected}
        engine.counter.add_up(len(selected) * engine.param_count)
        return self.aggregate(engine, t, selected, updates)

    def aggregate(
        self,
        engine: "FederatedEngine",
        t: int,
        selected: list[int],
        updates: dict[int, LayeredParams],
    ) -> LayeredParams:
        return fedavg_aggregate([updates[k] for k in selected])


def fedavg_aggregate(updates: list[LayeredParams]) -> LayeredParams:
    return param_mean(updates)


class FedProxStrategy(Strategy):
    name = "fedprox"

    def __init__(self, mu: float = 0.01):
        if mu < 0:
            raise InvalidInputError("fedprox mu must be non-negative")
        self.mu = mu

    def loss_spec(self, engine, broadcast):
        return LossSpec("prox", mu=self.mu, anchor=broadcast)


class HFLStrategy(Strategy):
    """Two-tier aggregation through edge aggregators."""

    name = "hfl"

    def __init__(self, hcfg: HFLConfig | None = None):
        self.hcfg = hcfg or HFLConfig()

    def execute_round(self, engine, t, selected):
        hcfg = self.hcfg
        edges: dict[int, list[int]] = {}
        for k in selected:
            edges.setdefault(hcfg.edge_of(k), []).append(k)
        edge_models = {e: engine.global_params for e in sorted(edges)}
        spec = self.loss_spec(engine, engine.global_params)
        for sub in range(hcfg.edge_period):
            for e in sorted(edges):
                members = sorted(edges[e])
                engine.counter.add_down(len(members) * engine.param_count)
                updates = [engine.train_client(k, edge_models[e], t, sub, spec) for k in members]
                engine.counter.add_up(len(members) * engine.param_count)
                edge_models[e] = fedavg_aggregate(updates)
        # edge tier: each active edge exchanges one model with the server
        engine.counter.add_up(len(edge_models) * engine.param_count)
        engine.counter.add_down(len(edge_models) * engine.param_count)
        return fedavg_aggregate([edge_models[e] for e in sorted(edge_models)])


class FederatedEngine:
    """Owns the global model, client shards and the round loop."""

    def __init__(
        self,
        config: FLConfig,
        arch: ModelArch,
        shards: list[Dataset],
        test_set: Dataset,
        strategy: Strategy,
        twin_data: Dataset | None = None,
    ):
        if len(shards) != config.num_clients:
            raise InvalidInputError(
                f"expected {config.num_clients} shards, got {len(shards)}"
            )
        self.config = config
        self.arch = arch
        self.shards = shards
        self.test_set = test_set
        self.strategy = strategy
        self.twin_data = twin_data
        self.param_count = arch.param_count
        self.counter = PayloadCounter()
        self.optimizer_template = Optimizer(config.optimizer, config.learning_rate)
        self.global_params = init_params(
            arch, np.random.default_rng(np.random.SeedSequence([config.seed, 0x617]))
        )
        strategy.setup(self)

    # -- randomness ------------------------------------------------------

    def rng(self, *key: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.config.seed, *key]))

    def client_rng(self, t: int, sub: int, client: int) -> np.random.Generator:
        return self.rng(t, sub, client, 0xC11)

    # -- round machinery -------------------------------------------------

    def train_client(
        self, client: int, start: LayeredParams, t: int, sub: int, spec: LossSpec
    ) -> LayeredParams:
        try:
            return local_train(
                start,
                self.shards[client],
                self.config.local_epochs,
                self.config.batch_size,
                self.optimizer_template.clone(),
                spec,
                self.client_rng(t, sub, client),
            )
        except NumericError as exc:
            raise NumericError(f"client {client}, round {t}: {exc}") from exc

    def evaluate(self, params: LayeredParams) -> dict[str, float]:
        scores = forward(params, self.test_set.features)
        m = basic_metrics(confusion(scores, self.test_set.labels))
        m["auc"] = roc_auc(scores, self.test_set.labels)
        return m

    def run_round(self, t: int) -> LayeredParams:
        selected = sample_clients(
            t, self.config.num_clients, self.config.client_fraction, self.config.seed
        )
        try:
            return self.strategy.execute_round(self, t, selected)
        except NumericError:
            raise
        except InvalidInputError as exc:
            raise InvalidInputError(f"strategy {self.strategy.name!r} failed in round {t}: {exc}")

    def run(self) -> ExperimentResult:
        cfg = self.config
        records: list[RoundRecord] = []
        last_metrics: dict[str, float] | None = None
        for t in range(1, cfg.max_rounds + 1):
            started = time.perf_counter()
            self.global_params = self.run_round(t)
            evaluated = t % cfg.eval_cadence == 0 or t == cfg.max_rounds
            if evaluated or last_metrics is None:
                last_metrics = self.evaluate(self.global_params)
            up, down = self.counter.drain()
            reached = evaluated and last_metrics["accuracy"] >= cfg.target_accuracy
            records.append(
                RoundRecord(
                    round=t,
                    accuracy=last_metrics["accuracy"],
                    precision=last_metrics["precision"],
                    recall=last_metrics["recall"],
                    f1=last_metrics["f1"],
                    auc=last_metrics["auc"],
                    params_up=up,
                    params_down=down,
                    reached_target=reached,
                    wall_time=time.perf_counter() - started,
                )
            )
            if reached:
                break
        reached_round = rounds_to_target([r.accuracy for r in records], cfg.target_accuracy)
        final = records[-1]
        summary = {
            "strategy": self.strategy.name,
            "rounds_run": len(records),
            "rounds_to_target": reached_round,
            "reached_target": reached_round is not None,
            "final_metrics": {
                "accuracy": final.accuracy,
                "precision": final.precision,
                "recall": final.recall,
                "f1": final.f1,
                "auc": final.auc,
            },
            "cumulative_params_up": sum(r.params_up for r in records),
            "cumulative_params_down": sum(r.params_down for r in records),
        }
        return ExperimentResult(records, summary)
