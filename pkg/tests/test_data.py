"""Dataset loading, standardization, partitioning and the synthetic scenario."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_dataset
from twinfed.data import (
    CSV_PRESETS,
    Dataset,
    PartitionSpec,
    SyntheticScenario,
    generate_scenario,
    load_csv,
    partition,
    standardize_jointly,
    train_test_split,
)
from twinfed.errors import IngestionError, InvalidInputError


# --- Dataset validation -----------------------------------------------------

def test_dataset_validation():
    with pytest.raises(InvalidInputError):
        Dataset(np.zeros((2, 2)), [0, 2])  # non-binary label
    with pytest.raises(InvalidInputError):
        Dataset(np.zeros((2, 2)), [0])  # length mismatch
    with pytest.raises(InvalidInputError):
        Dataset(np.array([[np.nan, 0.0]]), [0])
    with pytest.raises(InvalidInputError):
        Dataset(np.zeros(3), [0, 0, 0])  # 1-D features


# --- CSV ingestion ----------------------------------------------------------

def write_csv(path, text):
    path.write_text(text)
    return path


def test_load_csv_by_name_and_index(tmp_path):
    p = write_csv(tmp_path / "a.csv", "f1,f2,Label\n1.0,2.0,0\n3.5,-1.0,1\n")
    ds = load_csv(p, {"label_column": "Label"})
    assert ds.n == 2 and ds.d == 2
    assert np.array_equal(ds.labels, [0, 1])
    assert np.array_equal(ds.features, [[1.0, 2.0], [3.5, -1.0]])

    ds2 = load_csv(p, {"label_column": 2, "feature_columns": [0]})
    assert ds2.d == 1 and ds2.features[1, 0] == 3.5


def test_load_csv_presets_schema(tmp_path):
    p = write_csv(tmp_path / "b.csv", "x,ATT_FLAG\n0.5,1\n0.25,0\n")
    ds = load_csv(p, CSV_PRESETS["batadal"])
    assert np.array_equal(ds.labels, [1, 0])
    assert "i40" in CSV_PRESETS and CSV_PRESETS["i40"]["label_column"] == "Label"


def test_load_csv_errors(tmp_path):
    with pytest.raises(IngestionError):
        load_csv(tmp_path / "missing.csv", {"label_column": "Label"})
    ragged = write_csv(tmp_path / "r.csv", "a,b,Label\n1,2,0\n1,2\n")
    with pytest.raises(IngestionError):
        load_csv(ragged, {"label_column": "Label"})
    bad_label = write_csv(tmp_path / "l.csv", "a,Label\n1,2\n")
    with pytest.raises(IngestionError):
        load_csv(bad_label, {"label_column": "Label"})
    unparse = write_csv(tmp_path / "u.csv", "a,Label\nxyz,0\n")
    with pytest.raises(IngestionError):
        load_csv(unparse, {"label_column": "Label"})
    missing_col = write_csv(tmp_path / "m.csv", "a,Label\n1,0\n")
    with pytest.raises(IngestionError):
        load_csv(missing_col, {"label_column": "Other"})
    with pytest.raises(IngestionError):
        load_csv(missing_col, {})  # no label_column
    empty = write_csv(tmp_path / "e.csv", "")
    with pytest.raises(IngestionError):
        load_csv(empty, {"label_column": "Label"})


# --- standardization --------------------------------------------------------

def test_standardize_jointly_oracle():
    a = Dataset(np.array([[1.0, 5.0], [3.0, 5.0]]), [0, 1])
    b = Dataset(np.array([[5.0, 5.0], [7.0, 5.0]]), [0, 1])
    a2, b2, mean, std = standardize_jointly(a, b)
    pooled = np.vstack([a.features, b.features])
    assert np.allclose(mean, pooled.mean(axis=0))
    assert np.allclose(std[0], pooled[:, 0].std())  # population std
    assert std[1] == 1.0  # zero-variance clamp
    assert np.allclose(a2.features[:, 1], 0.0)
    merged = np.vstack([a2.features, b2.features])
    assert np.allclose(merged.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(merged[:, 0].std(), 1.0, atol=1e-12)


def test_standardize_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        standardize_jointly(make_dataset(d=3), make_dataset(d=4))


# --- partitioning -----------------------------------------------------------

@given(n=st.integers(20, 200), k=st.integers(1, 10), seed=st.integers(0, 20))
@settings(max_examples=30, deadline=None)
def test_iid_partition_disjoint_cover(n, k, seed):
    ds = make_dataset(n=n, seed=seed)
    shards = partition(ds, PartitionSpec(k, scheme="iid", seed=seed))
    assert len(shards) == k
    sizes = [s.n for s in shards]
    assert sum(sizes) == n
    assert max(sizes) - min(sizes) <= 1
    seen = np.concatenate([s.features[:, 0] for s in shards])
    assert np.array_equal(np.sort(seen), np.sort(ds.features[:, 0]))


@given(seed=st.integers(0, 20), mf=st.sampled_from([0.0, 0.1, 0.2, 0.5]))
@settings(max_examples=20, deadline=None)
def test_label_skew_partition_cover_and_skew(seed, mf):
    ds = make_dataset(n=400, seed=seed)
    k = 8
    shards = partition(ds, PartitionSpec(k, scheme="label_skew", minority_fraction=mf, seed=seed))
    assert sum(s.n for s in shards) == ds.n
    assert all(s.n > 0 for s in shards)
    seen = np.concatenate([s.features[:, 0] for s in shards])
    assert np.array_equal(np.sort(seen), np.sort(ds.features[:, 0]))
    if mf < 0.5:
        lo = sum(int(shards[i].labels.sum()) for i in range(k // 2))
        hi = sum(int(shards[i].labels.sum()) for i in range(k // 2, k))
        assert lo < hi  # first half is anomaly-poor


def test_partition_determinism():
    ds = make_dataset(n=100, seed=3)
    a = partition(ds, PartitionSpec(5, scheme="label_skew", seed=4))
    b = partition(ds, PartitionSpec(5, scheme="label_skew", seed=4))
    for x, y in zip(a, b):
        assert np.array_equal(x.features, y.features)


def test_partition_validation():
    with pytest.raises(InvalidInputError):
        PartitionSpec(0)
    with pytest.raises(InvalidInputError):
        PartitionSpec(2, scheme="dirichlet")
    with pytest.raises(InvalidInputError):
        partition(make_dataset(n=3), PartitionSpec(5))


# --- train/test split -------------------------------------------------------

def test_train_test_split_disjoint_cover():
    ds = make_dataset(n=100, seed=1)
    train, test = train_test_split(ds, 0.2, seed=7)
    assert train.n == 80 and test.n == 20
    seen = np.concatenate([train.features[:, 0], test.features[:, 0]])
    assert np.array_equal(np.sort(seen), np.sort(ds.features[:, 0]))
    train2, test2 = train_test_split(ds, 0.2, seed=7)
    assert np.array_equal(test.features, test2.features)
    with pytest.raises(InvalidInputError):
        train_test_split(ds, 0.0, seed=0)


# --- synthetic scenario -----------------------------------------------------

def test_scenario_shapes_and_determinism():
    s = SyntheticScenario(seed=3)
    real, twin = generate_scenario(s)
    assert real.n == s.n_real and twin.n == s.n_twin and real.d == s.d == twin.d
    real2, twin2 = generate_scenario(SyntheticScenario(seed=3))
    assert np.array_equal(real.features, real2.features)
    assert np.array_equal(twin.labels, twin2.labels)
    real3, _ = generate_scenario(SyntheticScenario(seed=4))
    assert not np.array_equal(real.features, real3.features)


def test_scenario_anomaly_rate_and_twin_prior():
    real, twin = generate_scenario(SyntheticScenario(twin_anomaly_rate=0.15, seed=0))
    assert real.labels.mean() == pytest.approx(0.5, abs=0.03)
    assert twin.labels.mean() == pytest.approx(0.15, abs=0.03)


def test_scenario_shift_moves_means_only():
    base_r, base_t = generate_scenario(SyntheticScenario(shift=0.0, seed=0))
    shift_r, shift_t = generate_scenario(SyntheticScenario(shift=1.0, seed=0))
    assert np.array_equal(base_r.features, shift_r.features)  # real side untouched
    delta = shift_t.features - base_t.features
    # constant displacement of unit length for every twin sample
    assert np.allclose(delta, delta[0], atol=1e-12)
    assert np.linalg.norm(delta[0]) == pytest.approx(1.0, abs=1e-12)


def test_scenario_bimodal_anomalies():
    real, _ = generate_scenario(SyntheticScenario(seed=0))
    anom = real.features[real.labels == 1]
    norm = real.features[real.labels == 0]
    # anomaly cloud has near-zero mean (two symmetric modes); its extra total
    # variance equals the squared mode offset along the anomaly direction
    assert np.linalg.norm(anom.mean(axis=0)) < 0.1
    extra = anom.var(axis=0).sum() - norm.var(axis=0).sum()
    assert extra == pytest.approx(0.7**2, abs=0.1)


def test_scenario_blindspot_relabels_negative_side():
    full = SyntheticScenario(twin_anomaly_rate=None, twin_blindspot=0.0, seed=0)
    blind = SyntheticScenario(twin_anomaly_rate=None, twin_blindspot=1.0, seed=0)
    _, t_full = generate_scenario(full)
    _, t_blind = generate_scenario(blind)
    assert np.array_equal(t_full.features, t_blind.features)  # features unchanged
    flipped = (t_full.labels == 1) & (t_blind.labels == 0)
    assert flipped.sum() > 0
    assert not np.any((t_full.labels == 0) & (t_blind.labels == 1))
    # blindspot=1 removes roughly the negative-side half of anomalies
    assert flipped.sum() == pytest.approx(t_full.labels.sum() / 2, rel=0.15)


def test_scenario_validation():
    with pytest.raises(InvalidInputError):
        SyntheticScenario(d=0)
    with pytest.raises(InvalidInputError):
        SyntheticScenario(anomaly_rate=1.0)
    with pytest.raises(InvalidInputError):
        SyntheticScenario(shift=-0.1)
    with pytest.raises(InvalidInputError):
        SyntheticScenario(noise_scale=0.0)
    with pytest.raises(InvalidInputError):
        SyntheticScenario(twin_blindspot=1.5)
    with pytest.raises(InvalidInputError):
        SyntheticScenario(twin_anomaly_rate=0.0)
    with pytest.raises(InvalidInputError):
        SyntheticScenario(anomaly_balance=-0.1)
