"""Datasets: CSV ingestion, standardization, partitioning and the
synthetic real-vs-twin scenario generator."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IngestionError, InvalidInputError

# Distance between the normal and anomalous class means in the synthetic
# scenario, before noise_scale is applied to the per-feature noise.
CLASS_SEPARATION = 0.7

# Built-in CSV schemas for the two public dataset layouts.
CSV_PRESETS: dict[str, dict] = {
    "i40": {"label_column": "Label", "header": True},
    "batadal": {"label_column": "ATT_FLAG", "header": True},
}


@dataclass
class Dataset:
    """Feature matrix [n x d] with binary labels (0 normal, 1 anomalous)."""

    features: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.features.ndim != 2:
            raise InvalidInputError("features must be a 2-D matrix")
        if self.features.shape[0] != self.labels.shape[0]:
            raise InvalidInputError("features and labels disagree in length")
        if self.features.shape[0] < 1:
            raise InvalidInputError("dataset must contain at least one sample")
        if not np.all(np.isfinite(self.features)):
            raise InvalidInputError("dataset contains NaN or Inf features")
        if not np.all(np.isin(self.labels, (0, 1))):
            raise InvalidInputError("labels must be 0 or 1")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, idx: np.ndarray, name: str | None = None) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], name or self.name)


@dataclass(frozen=True)
class PartitionSpec:
    num_clients: int
    scheme: str = "iid"  # "iid" or "label_skew"
    minority_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.num_clients < 1:
            raise InvalidInputError("num_clients must be positive")
        if self.scheme not in ("iid", "label_skew"):
            raise InvalidInputError(f"unknown partition scheme {self.scheme!r}")
        if not 0.0 <= self.minority_fraction <= 1.0:
            raise InvalidInputError("minority_fraction must be in [0,1]")


@dataclass(frozen=True)
class SyntheticScenario:
    """Class-conditional Gaussian generator for a real/twin dataset pair.

    The twin shares the real generator exactly, with its feature means
    shifted by `shift` along a seeded random unit direction; `shift` never
    alters the underlying noise draws, so alignment statistics respond to
    it monotonically. Anomalies occupy two modes on either side of the
    normal cluster (`anomaly_balance` sets the positive-side share), so no
    linear boundary separates the classes.

    Two optional twin fidelity knobs model an imperfect simulator:
    `twin_anomaly_rate` draws twin labels at a different anomaly prior
    (rarer faults, correctly labeled), and `twin_blindspot` mislabels that
    fraction of the twin's negative-side anomalies as normal (a systematic
    labeling blind spot).
    """

    d: int = 20
    n_real: int = 4000
    n_twin: int = 4000
    anomaly_rate: float = 0.5
    anomaly_balance: float = 0.5
    twin_anomaly_rate: float | None = None
    twin_blindspot: float = 0.0
    shift: float = 0.5
    noise_scale: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.n_real < 1 or self.n_twin < 1:
            raise InvalidInputError("d, n_real and n_twin must be positive")
        if not 0.0 < self.anomaly_rate < 1.0:
            raise InvalidInputError("anomaly_rate must be in (0,1)")
        if not 0.0 <= self.twin_blindspot <= 1.0:
            raise InvalidInputError("twin_blindspot must be in [0,1]")
        if not 0.0 <= self.anomaly_balance <= 1.0:
            raise InvalidInputError("anomaly_balance must be in [0,1]")
        if self.twin_anomaly_rate is not None and not 0.0 < self.twin_anomaly_rate < 1.0:
            raise InvalidInputError("twin_anomaly_rate must be in (0,1)")
        if self.shift < 0:
            raise InvalidInputError("shift must be non-negative")
        if self.noise_scale <= 0:
            raise InvalidInputError("noise_scale must be positive")


def load_csv(path: str | Path, schema: dict) -> Dataset:
    """Load a labeled CSV file.

    ``schema`` keys: ``label_column`` (name or index), optional
    ``feature_columns`` (names or indices; default: all others),
    ``header`` (bool, default True).
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"file not found: {path}")
    header = bool(schema.get("header", True))
    label_col = schema.get("label_column")
    if label_col is None:
        raise IngestionError("schema must name a label_column")

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise IngestionError(f"{path}: empty file")

    names: list[str] | None = None
    if header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise IngestionError(f"{path}: no data rows after header")

    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise IngestionError(f"{path}: ragged row {i} (expected {width} cells, got {len(r)})")

    def resolve(col) -> int:
        if isinstance(col, int):
            if not 0 <= col < width:
                raise IngestionError(f"{path}: column index {col} out of range")
            return col
        if names is None:
            raise IngestionError(f"{path}: named column {col!r} requires a header row")
        if col not in names:
            raise IngestionError(f"{path}: no column named {col!r}")
        return names.index(col)

    label_idx = resolve(label_col)
    feature_cols = schema.get("feature_columns")
    if feature_cols is None:
        feature_idx = [i for i in range(width) if i != label_idx]
    else:
        feature_idx = [resolve(c) for c in feature_cols]

    features = np.empty((len(rows), len(feature_idx)))
    labels = np.empty(len(rows), dtype=np.int64)
    for i, r in enumerate(rows):
        try:
            for j, c in enumerate(feature_idx):
                features[i, j] = float(r[c])
            raw = float(r[label_idx])
        except ValueError as exc:
            raise IngestionError(f"{path}: unparseable cell in row {i}: {exc}") from exc
        if raw not in (0.0, 1.0):
            raise IngestionError(f"{path}: non-binary label {raw!r} in row {i}")
        labels[i] = int(raw)
    if not np.all(np.isfinite(features)):
        bad = int(np.argwhere(~np.isfinite(features))[0][0])
        raise IngestionError(f"{path}: non-finite feature value in row {bad}")
    return Dataset(features, labels, name=path.stem)


def standardize_jointly(a: Dataset, b: Dataset) -> tuple[Dataset, Dataset, np.ndarray, np.ndarray]:
    """Standardize both datasets with pooled per-feature mean and population std.

    Zero-variance features map to 0 (std clamped to 1).
    """
    if a.d != b.d:
        raise InvalidInputError(f"feature dimension mismatch: {a.d} vs {b.d}")
    pooled = np.vstack([a.features, b.features])
    mean = pooled.mean(axis=0)
    std = pooled.std(axis=0)  # population std
    std = np.where(std == 0.0, 1.0, std)
    a2 = Dataset((a.features - mean) / std, a.labels, a.name)
    b2 = Dataset((b.features - mean) / std, b.labels, b.name)
    return a2, b2, mean, std


def partition(ds: Dataset, spec: PartitionSpec) -> list[Dataset]:
    """Split a dataset into disjoint client shards covering every sample."""
    k = spec.num_clients
    if ds.n < k:
        raise InvalidInputError(f"cannot split {ds.n} samples across {k} clients")
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0x9A47]))
    if spec.scheme == "iid":
        perm = rng.permutation(ds.n)
        bounds = np.linspace(0, ds.n, k + 1).astype(int)
        shards = [perm[bounds[i] : bounds[i + 1]] for i in range(k)]
    else:
        shards = _label_skew_shards(ds, spec, rng)
    return [ds.subset(idx, name=f"{ds.name}/client{i}") for i, idx in enumerate(shards)]


def _label_skew_shards(ds: Dataset, spec: PartitionSpec, rng: np.random.Generator) -> list[np.ndarray]:
    """Give half the clients a `minority_fraction`-weighted anomaly share."""
    k = spec.num_clients
    pos = rng.permutation(np.flatnonzero(ds.labels == 1))
    neg = rng.permutation(np.flatnonzero(ds.labels == 0))
    f = spec.minority_fraction
    weights = np.array([f if i < k // 2 else 1.0 - f for i in range(k)], dtype=np.float64)
    if weights.sum() == 0.0:
        weights[:] = 1.0
    weights = weights / weights.sum()
    pos_counts = np.floor(weights * len(pos)).astype(int)
    for i in range(len(pos) - pos_counts.sum()):
        pos_counts[i % k] += 1
    shard_size = ds.n // k
    shards, p0, n0 = [], 0, 0
    for i in range(k):
        take_pos = pos_counts[i]
        take_neg = max(shard_size - take_pos, 1 if take_pos == 0 else 0)
        take_neg = min(take_neg, len(neg) - n0)
        idx = np.concatenate([pos[p0 : p0 + take_pos], neg[n0 : n0 + take_neg]])
        p0 += take_pos
        n0 += take_neg
        shards.append(idx)
    # leftovers go to the last shard so the union covers the source
    leftovers = np.concatenate([pos[p0:], neg[n0:]])
    if leftovers.size:
        shards[-1] = np.concatenate([shards[-1], leftovers])
    for i, s in enumerate(shards):
        if s.size == 0:
            raise InvalidInputError(f"label-skew partition left client {i} empty")
    return shards


def train_test_split(ds: Dataset, test_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    if not 0.0 < test_fraction < 1.0:
        raise InvalidInputError("test_fraction must be in (0,1)")
    n_test = int(round(ds.n * test_fraction))
    if n_test < 1 or n_test >= ds.n:
        raise InvalidInputError(f"degenerate split: {ds.n - n_test}/{n_test}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5B17]))
    perm = rng.permutation(ds.n)
    return (
        ds.subset(perm[n_test:], name=f"{ds.name}/train"),
        ds.subset(perm[:n_test], name=f"{ds.name}/test"),
    )


def generate_scenario(s: SyntheticScenario) -> tuple[Dataset, Dataset]:
    """Generate the (real, twin) dataset pair for a synthetic scenario."""
    rng = np.random.default_rng(np.random.SeedSequence([s.seed, 0x1BAD]))
    anomaly_dir = rng.normal(size=s.d)
    anomaly_dir /= np.linalg.norm(anomaly_dir)
    shift_dir = rng.normal(size=s.d)
    shift_dir /= np.linalg.norm(shift_dir)

    def draw(n: int, rate: float, blindspot: float) -> tuple[np.ndarray, np.ndarray]:
        labels = (rng.random(n) < rate).astype(np.int64)
        # anomalies sit symmetrically on both sides of the normal mode, so
        # no linear boundary separates the classes
        side = np.where(rng.random(n) < s.anomaly_balance, 1.0, -1.0) * labels
        noise = rng.normal(0.0, s.noise_scale, size=(n, s.d))
        feats = noise + side[:, None] * (CLASS_SEPARATION * anomaly_dir)
        blind = rng.random(n) < blindspot
        labels = np.where((side < 0) & blind, 0, labels)
        return feats, labels

    twin_rate = s.anomaly_rate if s.twin_anomaly_rate is None else s.twin_anomaly_rate
    real_x, real_y = draw(s.n_real, s.anomaly_rate, 0.0)
    twin_x, twin_y = draw(s.n_twin, twin_rate, s.twin_blindspot)
    twin_x = twin_x + s.shift * shift_dir  # covariate shift, labels untouched
    return (
        Dataset(real_x, real_y, name="synthetic/real"),
        Dataset(twin_x, twin_y, name="synthetic/twin"),
    )
