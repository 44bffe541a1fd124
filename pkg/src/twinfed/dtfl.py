"""Digital-twin-integrated aggregation strategies.

Each strategy keeps a server-side twin model and/or twin dataset and hooks
into the engine's round barrier. The five mechanisms:

* meta-learning: one twin-data gradient step applied to the FedAvg aggregate
* parameter fusion: similarity-weighted client blend mixed with the twin
* layer exchange: per-layer copying between twin and aggregate
* cyclic adaptation: alternating overwrite between twin and aggregate
* distillation: clients minimize KL divergence to a frozen twin teacher
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .engine import FederatedEngine, LossSpec, Strategy, fedavg_aggregate, local_train
from .errors import InvalidInputError, NumericError
from .nn import (
    LayeredParams,
    ModelArch,
    bce_loss_and_grad,
    init_params,
    param_axpy,
    param_scale,
)

DT_TO_AGG = "dt_to_agg"
AGG_TO_DT = "agg_to_dt"
NONE = "none"


@dataclass
class TwinState:
    """Server-side twin model and its synthetic dataset."""

    params: LayeredParams
    twin_data: Dataset | None
    pretrain_epochs: int = 0


def pretrain_twin(engine: FederatedEngine, epochs: int, rng_key: int = 0x7747) -> LayeredParams:
    """Initialize and supervise-train a twin model on the engine's twin data."""
    if engine.twin_data is None:
        raise InvalidInputError("strategy requires a twin dataset")
    params = init_params(engine.arch, engine.rng(rng_key))
    if epochs > 0:
        params = local_train(
            params,
            engine.twin_data,
            epochs,
            engine.config.batch_size,
            engine.optimizer_template.clone(),
            LossSpec("bce"),
            engine.rng(rng_key, 1),
        )
    return params


# ---------------------------------------------------------------------------
# similarity measures

def similarity_score(a: LayeredParams, b: LayeredParams, kind: str = "frobenius_cosine") -> float:
    """Alignment between two parameter sets.

    ``frobenius_cosine``: cosine of the flattened parameter vectors, in [-1,1].
    ``matrix_rv``: mean RV coefficient over weight matrices, in [0,1].
    """
    if not a.same_shape(b):
        raise InvalidInputError("parameter shapes differ in similarity_score")
    if kind == "frobenius_cosine":
        fa, fb = a.flatten(), b.flatten()
        na, nb = np.linalg.norm(fa), np.linalg.norm(fb)
        if na == 0.0 or nb == 0.0:
            raise InvalidInputError("zero-norm operand in similarity_score")
        return float(fa @ fb / (na * nb))
    if kind == "matrix_rv":
        scores = []
        for wa, wb in zip(a.weights, b.weights):
            sa = wa @ wa.T
            sb = wb @ wb.T
            denom = np.sqrt(np.sum(sa * sa) * np.sum(sb * sb))
            if denom == 0.0:
                raise InvalidInputError("zero-norm operand in similarity_score")
            scores.append(np.sum(sa * sb) / denom)
        return float(np.mean(scores))
    raise InvalidInputError(f"unknown similarity kind {kind!r}")


# ---------------------------------------------------------------------------
# meta-learning

@dataclass(frozen=True)
class DTMLConfig:
    beta: float = 0.5  # meta-learning rate
    meta_batch: int | None = None  # None: full twin set

    def __post_init__(self):
        if self.beta < 0:
            raise InvalidInputError("beta must be non-negative")


def dtml_round(agg: LayeredParams, twin: TwinState, cfg: DTMLConfig,
               rng: np.random.Generator | None = None) -> LayeredParams:
    """One meta gradient step on twin data applied to the aggregate."""
    if twin.twin_data is None or twin.twin_data.n < 1:
        raise InvalidInputError("meta-update requires a nonempty twin dataset")
    data = twin.twin_data
    if cfg.meta_batch is not None and cfg.meta_batch < data.n:
        if rng is None:
            raise InvalidInputError("meta_batch sampling needs an rng")
        idx = rng.choice(data.n, size=cfg.meta_batch, replace=False)
        x, y = data.features[idx], data.labels[idx]
    else:
        x, y = data.features, data.labels
    _, grad = bce_loss_and_grad(agg, x, y)
    for g in grad.weights + grad.biases:
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite meta gradient")
    return param_axpy(-cfg.beta, grad, agg)


class DTMLStrategy(Strategy):
    name = "dtml"

    def __init__(self, cfg: DTMLConfig | None = None):
        self.cfg = cfg or DTMLConfig()
        self.twin: TwinState | None = None

    def setup(self, engine):
        if engine.twin_data is None:
            raise InvalidInputError("dtml requires a twin dataset")
        self.twin = TwinState(engine.global_params.copy(), engine.twin_data)

    def aggregate(self, engine, t, selected, updates):
        agg = fedavg_aggregate([updates[k] for k in selected])
        return dtml_round(agg, self.twin, self.cfg, engine.rng(t, 0xD7))


# ---------------------------------------------------------------------------
# parameter fusion

@dataclass(frozen=True)
class FPFConfig:
    gamma: float = 0.5
    similarity: str = "frobenius_cosine"

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidInputError("gamma must be in [0,1]")


def fpf_aggregate(
    clients: list[LayeredParams], twin: TwinState, cfg: FPFConfig
) -> LayeredParams:
    """Softmax-similarity blend of clients, fused with the twin by gamma.

    Side effect: the twin adopts the fused parameters.
    """
    if not clients:
        raise InvalidInputError("fpf_aggregate needs at least one client update")
    if cfg.gamma == 1.0:
        fused = twin.params.copy()
    else:
        scores = np.array([similarity_score(c, twin.params, cfg.similarity) for c in clients])
        weights = np.exp(scores - scores.max())
        weights /= weights.sum()
        blended = param_scale(weights[0], clients[0])
        for w, c in zip(weights[1:], clients[1:]):
            blended = param_axpy(w, c, blended)
        if cfg.gamma == 0.0:
            fused = blended
        else:
            fused = param_axpy(cfg.gamma, twin.params, param_scale(1.0 - cfg.gamma, blended))
    twin.params = fused.copy()
    return fused


class FPFStrategy(Strategy):
    name = "fpf"

    def __init__(self, cfg: FPFConfig | None = None, pretrain_epochs: int = 5):
        self.cfg = cfg or FPFConfig()
        self.pretrain_epochs = pretrain_epochs
        self.twin: TwinState | None = None

    def setup(self, engine):
        self.twin = TwinState(
            pretrain_twin(engine, self.pretrain_epochs), engine.twin_data, self.pretrain_epochs
        )

    def aggregate(self, engine, t, selected, updates):
        return fpf_aggregate([updates[k] for k in selected], self.twin, self.cfg)


# ---------------------------------------------------------------------------
# layer-wise exchange

class ExchangeMap:
    """Per-layer exchange directions between twin and aggregate."""

    def __init__(self, directions: list[str]):
        for d in directions:
            if d not in (DT_TO_AGG, AGG_TO_DT, NONE):
                raise InvalidInputError(f"unknown exchange direction {d!r}")
        self.directions = list(directions)

    def __len__(self) -> int:
        return len(self.directions)

    @staticmethod
    def static_policy(num_layers: int, low: int = 1, high: int | None = None) -> "ExchangeMap":
        """Lower layers twin->aggregate, layers above `high` aggregate->twin."""
        if high is None:
            high = num_layers - 1
        dirs = []
        for layer in range(1, num_layers + 1):
            if layer <= low:
                dirs.append(DT_TO_AGG)
            elif layer > high:
                dirs.append(AGG_TO_DT)
            else:
                dirs.append(NONE)
        return ExchangeMap(dirs)

    @staticmethod
    def reverse_policy(num_layers: int, low: int = 1, high: int | None = None) -> "ExchangeMap":
        """Inverted directions: lower layers aggregate->twin, upper twin->aggregate."""
        flipped = {DT_TO_AGG: AGG_TO_DT, AGG_TO_DT: DT_TO_AGG, NONE: NONE}
        base = ExchangeMap.static_policy(num_layers, low, high)
        return ExchangeMap([flipped[d] for d in base.directions])

    @staticmethod
    def none_policy(num_layers: int) -> "ExchangeMap":
        return ExchangeMap([NONE] * num_layers)


def lpe_exchange(
    agg: LayeredParams, twin_params: LayeredParams, emap: ExchangeMap
) -> tuple[LayeredParams, LayeredParams]:
    """Copy layers between the two models per the map, snapshot semantics."""
    if len(emap) != agg.num_layers:
        raise InvalidInputError(
            f"exchange map has {len(emap)} entries for a {agg.num_layers}-layer model"
        )
    new_agg = agg.copy()
    new_twin = twin_params.copy()
    for i, direction in enumerate(emap.directions):
        if direction == DT_TO_AGG:
            new_agg.weights[i] = twin_params.weights[i].copy()
            new_agg.biases[i] = twin_params.biases[i].copy()
        elif direction == AGG_TO_DT:
            new_twin.weights[i] = agg.weights[i].copy()
            new_twin.biases[i] = agg.biases[i].copy()
    return new_agg, new_twin


def lpe_accounting(emap: ExchangeMap, arch: ModelArch) -> int:
    """Scalar count of the layers actually moved by the exchange."""
    counts = arch.layer_param_counts()
    if len(emap) != len(counts):
        raise InvalidInputError("exchange map does not match the architecture")
    return sum(c for c, d in zip(counts, emap.directions) if d != NONE)


class LPEStrategy(Strategy):
    """Layer-granular parameter exchange between twin and aggregate.

    When the exchange map moves at least one layer, the global model starts
    from the pretrained twin, so exchanged layers meet upper layers that
    were trained to consume them. A trivial (all-none) map leaves the
    engine's own initialization untouched, which keeps the strategy
    equivalent to plain parameter averaging.
    """

    name = "lpe"

    def __init__(self, emap: ExchangeMap | None = None, pretrain_epochs: int = 5):
        self.emap = emap
        self.pretrain_epochs = pretrain_epochs
        self.twin: TwinState | None = None

    def setup(self, engine):
        if self.emap is None:
            self.emap = ExchangeMap.static_policy(engine.arch.num_layers)
        if len(self.emap) != engine.arch.num_layers:
            raise InvalidInputError("exchange map does not match the model depth")
        self.twin = TwinState(
            pretrain_twin(engine, self.pretrain_epochs), engine.twin_data, self.pretrain_epochs
        )
        if any(d != NONE for d in self.emap.directions):
            engine.global_params = self.twin.params.copy()

    def broadcast_payload(self, engine):
        # comm-efficient variant: only exchanged layers travel downstream
        return lpe_accounting(self.emap, engine.arch)

    def aggregate(self, engine, t, selected, updates):
        agg = fedavg_aggregate([updates[k] for k in selected])
        new_agg, new_twin = lpe_exchange(agg, self.twin.params, self.emap)
        self.twin.params = new_twin
        return new_agg


# ---------------------------------------------------------------------------
# cyclic adaptation

def cwa_round(
    agg: LayeredParams, twin: TwinState, t: int, simultaneous_swap: bool = False
) -> LayeredParams:
    """Alternating overwrite between twin and aggregate.

    Even rounds sync the twin to the aggregate; odd rounds broadcast the
    twin's pre-round parameters. With ``simultaneous_swap`` every round
    performs the one-shot swap (twin <- aggregate, broadcast <- old twin).
    """
    if simultaneous_swap:
        old_twin = twin.params
        twin.params = agg.copy()
        return old_twin
    if t % 2 == 0:
        twin.params = agg.copy()
        return agg
    return twin.params


class CWAStrategy(Strategy):
    name = "cwa"

    def __init__(self, simultaneous_swap: bool = False, pretrain_epochs: int = 5):
        self.simultaneous_swap = simultaneous_swap
        self.pretrain_epochs = pretrain_epochs
        self.twin: TwinState | None = None

    def setup(self, engine):
        self.twin = TwinState(
            pretrain_twin(engine, self.pretrain_epochs), engine.twin_data, self.pretrain_epochs
        )

    def aggregate(self, engine, t, selected, updates):
        agg = fedavg_aggregate([updates[k] for k in selected])
        sync = self.simultaneous_swap or t % 2 == 0
        if sync:
            # twin and aggregate models cross the server boundary
            engine.counter.add_up(engine.param_count)
            engine.counter.add_down(engine.param_count)
        return cwa_round(agg, self.twin, t, self.simultaneous_swap)


# ---------------------------------------------------------------------------
# knowledge distillation

@dataclass(frozen=True)
class DTKDConfig:
    teacher_pretrain_epochs: int = 5
    soft_label_cache: bool = False

    def __post_init__(self):
        if self.teacher_pretrain_epochs < 1:
            raise InvalidInputError("teacher_pretrain_epochs must be positive")


class DTKDStrategy(Strategy):
    """Semi-supervised distillation from a frozen twin-trained teacher.

    Clients never read their shard labels; they match the teacher's soft
    labels under the KL objective, and students are FedAvg-aggregated.
    """

    name = "dtkd"

    def __init__(self, cfg: DTKDConfig | None = None):
        self.cfg = cfg or DTKDConfig()
        self.teacher: LayeredParams | None = None

    def setup(self, engine):
        self.teacher = pretrain_twin(engine, self.cfg.teacher_pretrain_epochs, rng_key=0x7EAC)
        self._teacher_sent: set[int] = set()

    def loss_spec(self, engine, broadcast):
        return LossSpec("kl", teacher=self.teacher)

    def execute_round(self, engine, t, selected):
        # one-time teacher download per client, on top of the usual traffic
        fresh = [k for k in selected if k not in self._teacher_sent]
        engine.counter.add_down(len(fresh) * engine.param_count)
        self._teacher_sent.update(fresh)
        return super().execute_round(engine, t, selected)


def dtkd_pretrain(engine: FederatedEngine, epochs: int) -> LayeredParams:
    """Standalone teacher training on the engine's twin dataset."""
    return pretrain_twin(engine, epochs, rng_key=0x7EAC)


STRATEGY_NAMES = ("fedavg", "fedprox", "hfl", "dtml", "fpf", "lpe", "cwa", "dtkd")
